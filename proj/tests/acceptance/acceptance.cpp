// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (capped at 125).

#include <algorithm>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "criteria.hpp"

using namespace sogym::acceptance;

int main(int argc, char** argv) {
    CLI::App app{"sogym acceptance criteria"};
    app.option_defaults()->always_capture_default();
    int benchmark_problems = 100;
    int workers = 0;
    std::string artifacts;
    std::vector<std::string> only;
    app.add_option("--benchmark-problems", benchmark_problems, "problems in the baseline vs random-policy run");
    app.add_option("--workers", workers, "worker threads for batch runs (0: one per CPU)");
    app.add_option("--artifacts", artifacts, "directory for benchmark records and metrics");
    app.add_option("--only", only, "run only the named criteria");
    CLI11_PARSE(app, argc, argv);

    struct Entry {
        std::string key;
        std::function<Verdict()> run;
    };
    const std::vector<Entry> all{
        {"heaviside", [] { return heaviside_exactness(); }},
        {"tdf", [] { return tdf_invariants(10000); }},
        {"fea", [] { return fea_oracle(100); }},
        {"gradient", [] { return gradient_check(20); }},
        {"optimizer", [] { return optimizer_regression(); }},
        {"benchmark", [&] { return benchmark_protocol(benchmark_problems, workers, artifacts); }},
        {"breakeven", [] { return breakeven_reproduction(); }},
        {"learning-rate", [] { return learning_rate_fit(); }},
        {"determinism", [] { return environment_determinism(10); }},
        {"beta", [] { return beta_round_trip(1000); }},
        {"connectivity", [] { return connectivity_oracle(1000); }},
    };

    int failed = 0;
    for (const Entry& e : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), e.key) == only.end()) continue;
        const Verdict v = e.run();
        std::printf("%s  %-24s %s [%.1fs]\n", v.passed ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str(), v.seconds);
        std::fflush(stdout);
        failed += v.passed ? 0 : 1;
    }
    return std::min(failed, 125);
}
