// Benchmark comparing the serial reference kernels against the OpenMP ones,
// plus an end-to-end study timing at 1 thread versus all threads.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "fqr/covariance.hpp"
#include "fqr/openmp.hpp"
#include "fqr/simulate.hpp"

using namespace fqr;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int reps, F&& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        body();
        best = std::min(best, ms_since(start));
    }
    return best;
}

void print_row(const std::string& name, double serial_ms, double parallel_ms, double max_diff) {
    std::printf("%-28s %10.2f ms %10.2f ms %7.2fx   max|diff| = %.3g\n", name.c_str(), serial_ms,
                parallel_ms, serial_ms / parallel_ms, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
    int n = 500;
    int grid = 201;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--n") n = std::atoi(argv[i + 1]);
        if (flag == "--grid") grid = std::atoi(argv[i + 1]);
    }
    std::printf("threads available: %d   (n = %d, grid = %d)\n\n", omp_get_max_threads(), n, grid);
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

    DesignSpec spec{QuantileIndexSet::linspace(0.15, 0.85, 0.05)};
    spec.n = n;
    spec.grid_size = grid;
    spec.seed = 20240417;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> curves;
    curves.reserve(data.curves.size());
    for (const auto& c : data.curves) curves.push_back(interpolate(c, InterpolationRule::left_step, grid));

    KernelOnGrid kernel_serial, kernel_parallel;
    const double t_kernel_serial =
        time_best_of(3, [&] { kernel_serial = reference::empirical_kernel(curves); });
    const double t_kernel_parallel =
        time_best_of(3, [&] { kernel_parallel = empirical_kernel(curves); });
    print_row("empirical_kernel", t_kernel_serial, t_kernel_parallel,
              (kernel_serial.matrix - kernel_parallel.matrix).cwiseAbs().maxCoeff());

    EigenSystem eig = eigendecompose(kernel_parallel, 10);
    ScoresMatrix scores_serial, scores_parallel;
    const double t_scores_serial =
        time_best_of(3, [&] { scores_serial = reference::compute_scores(curves, eig, 10); });
    const double t_scores_parallel =
        time_best_of(3, [&] { scores_parallel = compute_scores(curves, eig, 10); });
    print_row("compute_scores", t_scores_serial, t_scores_parallel,
              (scores_serial.scores - scores_parallel.scores).cwiseAbs().maxCoeff());

    StudyOptions opts;
    opts.n_fresh = 200;
    DesignSpec study_spec = spec;
    study_spec.n = std::min(n, 200);
    const std::vector<MPolicy> policies = {MPolicy::oracle()};

    omp_set_num_threads(1);
    StudyReport serial_report;
    const auto s0 = Clock::now();
    serial_report = run_study({study_spec}, policies, 8, opts);
    const double t_study_serial = ms_since(s0);

    omp_set_num_threads(omp_get_num_procs());
    StudyReport parallel_report;
    const auto s1 = Clock::now();
    parallel_report = run_study({study_spec}, policies, 8, opts);
    const double t_study_parallel = ms_since(s1);

    print_row("run_study (8 reps)", t_study_serial, t_study_parallel,
              std::abs(serial_report.cells[0].slope_qamise - parallel_report.cells[0].slope_qamise));
    return 0;
}
