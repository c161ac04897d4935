#pragma once

#include "autoregressive.hpp"
#include "bridge.hpp"
#include "config.hpp"
#include "forecaster.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "rational.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "signal.hpp"
#include "spectral.hpp"
#include "svg.hpp"
