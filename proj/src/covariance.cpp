#include "fqr/covariance.hpp"

#include <cmath>

#include "fqr/errors.hpp"
#include "fqr/openmp.hpp"

namespace fqr {

namespace {

constexpr double kClampTol = 1e-10;   // negative eigenvalues within this of kappa_1 clamp to 0
constexpr double kUsableTol = 1e-12;  // eigenvalues below this fraction of kappa_1 count as zero

Eigen::MatrixXd centered_matrix(const std::vector<GridFunction>& curves) {
    const int n = static_cast<int>(curves.size());
    const int G = curves.front().grid_size;
    for (const GridFunction& c : curves)
        if (c.grid_size != G) throw_validation("empirical_kernel: grid size mismatch");
    GridFunction mean = curve_mean(curves);
    Eigen::MatrixXd centered(n, G);
    for (int i = 0; i < n; ++i)
        for (int g = 0; g < G; ++g) centered(i, g) = curves[static_cast<std::size_t>(i)][g] - mean[g];
    return centered;
}

}  // namespace

int EigenSystem::usable_components() const {
    if (eigenvalues.empty()) return 0;
    const double floor = kUsableTol * eigenvalues.front();
    int usable = 0;
    while (usable < count() && eigenvalues[static_cast<std::size_t>(usable)] > floor) ++usable;
    return usable;
}

KernelOnGrid empirical_kernel(const std::vector<GridFunction>& curves) {
    if (curves.size() < 2) throw_validation("empirical_kernel: needs n >= 2 curves");
    const int n = static_cast<int>(curves.size());
    const int G = curves.front().grid_size;
    Eigen::MatrixXd centered = centered_matrix(curves);

    KernelOnGrid kernel;
    kernel.grid_size = G;
    kernel.matrix.resize(G, G);

    // Upper triangle only; each entry is an independent serial sum over
    // subjects, so the result is identical for any thread count. Interleaved
    // rows balance the triangular workload.
    const double inv_n = 1.0 / n;
#pragma omp parallel for schedule(static, 4)
    for (int g = 0; g < G; ++g) {
        for (int h = g; h < G; ++h) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += centered(i, g) * centered(i, h);
            kernel.matrix(g, h) = acc * inv_n;
        }
    }
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < g; ++h) kernel.matrix(g, h) = kernel.matrix(h, g);
    return kernel;
}

EigenSystem eigendecompose(const KernelOnGrid& kernel, int max_components) {
    const int G = kernel.grid_size;
    if (G < 2 || kernel.matrix.rows() != G || kernel.matrix.cols() != G)
        throw_validation("eigendecompose: invalid kernel");
    if (max_components < 1 || max_components > G)
        throw_validation("eigendecompose: max_components must lie in [1, grid_size]");

    const std::vector<double> w = trapezoid_weights(G);
    Eigen::VectorXd sqrt_w(G), inv_sqrt_w(G);
    for (int g = 0; g < G; ++g) {
        sqrt_w(g) = std::sqrt(w[static_cast<std::size_t>(g)]);
        inv_sqrt_w(g) = 1.0 / sqrt_w(g);
    }

    Eigen::MatrixXd sym = sqrt_w.asDiagonal() * kernel.matrix * sqrt_w.asDiagonal();
    sym = 0.5 * (sym + sym.transpose().eval());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw_solver("eigendecompose: eigensolver failed");

    // Eigen returns ascending order; take the top max_components.
    EigenSystem eig;
    const double kappa1 = std::max(solver.eigenvalues()(G - 1), 0.0);
    for (int k = 0; k < max_components; ++k) {
        const int src = G - 1 - k;
        double kappa = solver.eigenvalues()(src);
        if (kappa < 0.0) {
            if (kappa >= -kClampTol * kappa1)
                kappa = 0.0;
            else
                throw_solver("eigendecompose: kernel not positive semidefinite (eigenvalue " +
                             std::to_string(kappa) + ")");
        }
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        GridFunction phi = GridFunction::zeros(G);
        for (int g = 0; g < G; ++g) phi[g] = v(g) * inv_sqrt_w(g);

        // Sign convention: largest-absolute entry positive, ties to the
        // smallest index.
        int arg = 0;
        double best = std::fabs(phi[0]);
        for (int g = 1; g < G; ++g)
            if (std::fabs(phi[g]) > best) {
                best = std::fabs(phi[g]);
                arg = g;
            }
        if (phi[arg] < 0.0)
            for (int g = 0; g < G; ++g) phi[g] = -phi[g];

        eig.eigenvalues.push_back(kappa);
        eig.eigenfunctions.push_back(std::move(phi));
    }
    return eig;
}

namespace {

ScoresMatrix compute_scores_impl(const std::vector<GridFunction>& curves, const EigenSystem& eig,
                                 int m, bool parallel) {
    if (curves.empty()) throw_validation("compute_scores: empty curve list");
    const int n = static_cast<int>(curves.size());
    if (m < 1 || m > eig.count()) throw_validation("compute_scores: m out of range");
    if (m > n - 1) throw_validation("compute_scores: m must satisfy m <= n - 1");
    if (m > eig.usable_components())
        throw_validation("compute_scores: m exceeds usable components (eigenvalue below zero tolerance)");

    GridFunction mean = curve_mean(curves);
    const int G = mean.grid_size;
    for (const GridFunction& x : curves)
        if (x.grid_size != G) throw_validation("compute_scores: grid size mismatch");

    ScoresMatrix sm;
    sm.n = n;
    sm.m = m;
    sm.scores.resize(n, m + 1);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        const GridFunction& x = curves[static_cast<std::size_t>(i)];
        GridFunction centered = x - mean;
        sm.scores(i, 0) = 1.0;
        for (int j = 1; j <= m; ++j)
            sm.scores(i, j) = l2_inner(centered, eig.eigenfunctions[static_cast<std::size_t>(j - 1)]);
    }
    return sm;
}

}  // namespace

ScoresMatrix compute_scores(const std::vector<GridFunction>& curves, const EigenSystem& eig, int m) {
    return compute_scores_impl(curves, eig, m, true);
}

namespace reference {

KernelOnGrid empirical_kernel(const std::vector<GridFunction>& curves) {
    if (curves.size() < 2) throw_validation("empirical_kernel: needs n >= 2 curves");
    const int n = static_cast<int>(curves.size());
    const int G = curves.front().grid_size;
    Eigen::MatrixXd centered = centered_matrix(curves);
    KernelOnGrid kernel;
    kernel.grid_size = G;
    kernel.matrix.resize(G, G);
    const double inv_n = 1.0 / n;
    for (int g = 0; g < G; ++g) {
        for (int h = g; h < G; ++h) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += centered(i, g) * centered(i, h);
            kernel.matrix(g, h) = acc * inv_n;
        }
    }
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < g; ++h) kernel.matrix(g, h) = kernel.matrix(h, g);
    return kernel;
}

ScoresMatrix compute_scores(const std::vector<GridFunction>& curves, const EigenSystem& eig, int m) {
    return compute_scores_impl(curves, eig, m, false);
}

}  // namespace reference

}  // namespace fqr
