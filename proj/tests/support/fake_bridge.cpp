// Minimal bridge server for tests: naive forecasts with optional injected faults.
//
//   fake_bridge [--short N] [--error-every N] [--garbage-at N] [--exit-at N] [--wrong-id-at N] [--no-hello]
//
// Request numbers start at 1. --short N answers with horizon - 1 values from request N on.
#include <cstdlib>
#include <iostream>
#include <string>

#include "sinebench/bridge.hpp"

using namespace sinebench;

int main(int argc, char** argv) {
    long short_from = 0, error_every = 0, garbage_at = 0, exit_at = 0, wrong_id_at = 0;
    bool hello = true;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&] { return i + 1 < argc ? std::atol(argv[++i]) : 0L; };
        if (a == "--short") short_from = next();
        else if (a == "--error-every") error_every = next();
        else if (a == "--garbage-at") garbage_at = next();
        else if (a == "--exit-at") exit_at = next();
        else if (a == "--wrong-id-at") wrong_id_at = next();
        else if (a == "--no-hello") hello = false;
    }
    std::ios::sync_with_stdio(false);
    if (hello) std::cout << encode_hello("fake-naive", "1.0") << '\n' << std::flush;

    long count = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        BridgeMessage msg;
        try {
            msg = parse_bridge_message(line);
        } catch (const ProtocolError& e) {
            std::cout << encode_error("", e.what()) << '\n' << std::flush;
            continue;
        }
        if (msg.type == BridgeMessageType::Shutdown) return 0;
        if (msg.type != BridgeMessageType::Forecast) continue;
        ++count;
        if (exit_at && count >= exit_at) return 7;
        if (garbage_at && count == garbage_at) {
            std::cout << "this is not a message\n" << std::flush;
            continue;
        }
        if (msg.horizon < 1) {
            std::cout << encode_error(msg.id, "horizon must be >= 1") << '\n' << std::flush;
            continue;
        }
        if (error_every && count % error_every == 0) {
            std::cout << encode_error(msg.id, "injected failure") << '\n' << std::flush;
            continue;
        }
        const std::string id = wrong_id_at && count == wrong_id_at ? msg.id + "x" : msg.id;
        std::size_t n = msg.horizon;
        if (short_from && count >= short_from) n -= 1;
        const std::vector<double> values(n, msg.context.empty() ? 0.0 : msg.context.back());
        std::cout << encode_forecast_result(id, values) << '\n' << std::flush;
    }
    return 0;
}
