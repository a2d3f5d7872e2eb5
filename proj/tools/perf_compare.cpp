// Compares the serial reference path against the OpenMP work pool on the two
// parallel kernels (oracle regression sweeps and the experiment grid) and
// asserts the results are bit-identical. Exit code 1 on any mismatch.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "recdyn/bench.hpp"
#include "recdyn/oracle.hpp"
#include "recdyn/parallel.hpp"

using namespace recdyn;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool bits_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

} // namespace

int main() {
    int failures = 0;
    std::printf("threads available: %d\n\n", max_threads());

    // Kernel 1: conditional-regression oracle (fit + recursion error).
    {
        const SystemSpec spec = SystemSpec::preset("lorenz63");
        const int d = 3;
        auto run_once = [&](bool parallel, double& elapsed) {
            const auto t0 = std::chrono::steady_clock::now();
            const RecursionErrorReport report = oracle_report(spec, 7, d, true, parallel);
            elapsed = seconds_since(t0);
            return report;
        };
        double t_serial = 0, t_parallel = 0;
        const RecursionErrorReport serial = run_once(false, t_serial);
        const RecursionErrorReport parallel = run_once(true, t_parallel);
        const bool same = bits_equal(serial.eps_rms, parallel.eps_rms) &&
                          bits_equal(serial.sigma_trace_mean, parallel.sigma_trace_mean) &&
                          serial.n_eval == parallel.n_eval;
        std::printf("oracle (lorenz63, d=%d, 10000 eval points, covariance on)\n", d);
        std::printf("  serial   %.2fs\n  parallel %.2fs  speedup %.2fx\n", t_serial, t_parallel,
                    t_serial / t_parallel);
        std::printf("  bit-identical: %s\n\n", same ? "yes" : "NO");
        if (!same) ++failures;
    }

    // Kernel 2: the experiment grid (training + iterated forecasts).
    {
        ExperimentConfig config;
        config.system = SystemSpec::preset("lv");
        config.delays = {1, 2, 3};
        config.hidden_sizes = {2};
        config.replicates = 4;
        auto run_once = [&](bool parallel, double& elapsed) {
            const auto t0 = std::chrono::steady_clock::now();
            auto rows = run_sweep(config, parallel);
            elapsed = seconds_since(t0);
            return rows;
        };
        double t_serial = 0, t_parallel = 0;
        const auto serial = run_once(false, t_serial);
        const auto parallel = run_once(true, t_parallel);
        bool same = serial.size() == parallel.size();
        for (std::size_t i = 0; same && i < serial.size(); ++i)
            same = bits_equal(serial[i].nrmse, parallel[i].nrmse) &&
                   serial[i].best_epoch == parallel[i].best_epoch &&
                   serial[i].status == parallel[i].status;
        std::printf("bench grid (lv, d in {1,2,3}, 4 replicates, both archs)\n");
        std::printf("  serial   %.2fs\n  parallel %.2fs  speedup %.2fx\n", t_serial, t_parallel,
                    t_serial / t_parallel);
        std::printf("  bit-identical: %s\n", same ? "yes" : "NO");
        if (!same) ++failures;
    }

    if (failures > 0) {
        std::printf("\n%d kernel(s) diverged between serial and parallel paths\n", failures);
        return 1;
    }
    std::printf("\nall kernels bit-identical across execution paths\n");
    return 0;
}
