// Times the serial reference kernels against their OpenMP counterparts:
// the H-grid key-rate evaluation, the coverage Monte Carlo, and one
// multi-start optimization.
#include <chrono>
#include <cstdio>
#include <string>

#include "qkd/channel_model.hpp"
#include "qkd/fluctuation.hpp"
#include "qkd/keyrate_engine.hpp"
#include "qkd/param_optimizer.hpp"
#include "qkd/parallel.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

void report(const char* name, double serial_s, double parallel_s, int threads) {
    std::printf("%-28s %10.4f s %10.4f s   x%.2f (%d threads)\n", name, serial_s, parallel_s,
                serial_s / parallel_s, threads);
}

}  // namespace

int main(int argc, char** argv) {
    int threads = qkd::resolve_threads(0);
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
        if (arg == "--quick") quick = true;
    }

    qkd::SourceSpec spec{0.071, 0.212, 0.280, 0.357, 0.121, 0.479};
    qkd::ChannelParams params = qkd::ChannelParams::preset('a');
    params.distance_km = 40.0;
    auto policy = qkd::FluctuationPolicy::normal(5.3);
    auto stats = qkd::simulate_observed(spec, params, 10'000'000'000LL, qkd::SimMode::expected);

    std::printf("%-28s %12s %12s\n", "kernel", "serial", "openmp");

    {
        qkd::KeyRateConfig cfg;
        cfg.grid_points = quick ? 401 : 2001;
        qkd::KeyRateConfig par = cfg;
        par.threads = threads;
        double ts = time_best_of(3, [&] { qkd::worst_case_rate_serial(stats, spec, params, policy, cfg); });
        double tp = time_best_of(3, [&] { qkd::worst_case_rate(stats, spec, params, policy, par); });
        report("keyrate H grid", ts, tp, threads);
    }
    {
        int trials = quick ? 500 : 4000;
        double ts = time_best_of(2, [&] {
            qkd::coverage_trial_serial(100000, 50000, 0.01, policy, trials, 42);
        });
        double tp = time_best_of(2, [&] {
            qkd::coverage_trial(100000, 50000, 0.01, policy, trials, 42, threads);
        });
        report("coverage Monte Carlo", ts, tp, threads);
    }
    {
        qkd::SearchConfig search;
        search.starts = quick ? 4 : 8;
        search.max_iterations = quick ? 60 : 150;
        search.seed = 7;
        qkd::SearchConfig par = search;
        par.threads = threads;
        search.threads = 1;
        double ts = time_best_of(1, [&] {
            qkd::optimize(params, 1'000'000'000LL, policy, search);
        });
        double tp = time_best_of(1, [&] {
            qkd::optimize(params, 1'000'000'000LL, policy, par);
        });
        report("multi-start optimize", ts, tp, threads);
    }
    return 0;
}
