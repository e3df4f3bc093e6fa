#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fqr/curves.hpp"

namespace fqr {

/// Empirical covariance kernel evaluated on the grid: matrix(g,h) = K(t_g, t_h).
struct KernelOnGrid {
    int grid_size = 0;
    Eigen::MatrixXd matrix;
};

/// Eigenpairs of the covariance kernel under the trapezoid quadrature rule.
/// Eigenvalues descend; eigenfunctions are quadrature-orthonormal with the
/// largest-absolute-entry-positive sign convention.
struct EigenSystem {
    std::vector<double> eigenvalues;
    std::vector<GridFunction> eigenfunctions;

    int count() const { return static_cast<int>(eigenvalues.size()); }

    /// Components with eigenvalue below 1e-12 * leading eigenvalue carry no
    /// usable signal and are rejected for score computation.
    int usable_components() const;
};

/// Principal scores with the constant regressor prepended:
/// scores(i,0) = 1, scores(i,j) = <X_i - mean, phi_j> for j = 1..m.
struct ScoresMatrix {
    int n = 0;
    int m = 0;
    Eigen::MatrixXd scores;  // n x (m+1)
};

/// K(t_g,t_h) = (1/n) sum_i (X_i(t_g) - mean(t_g)) (X_i(t_h) - mean(t_h)).
/// Requires n >= 2. Exactly symmetric by construction.
KernelOnGrid empirical_kernel(const std::vector<GridFunction>& curves);

/// Solve the discretized eigenproblem: with trapezoid weights D = diag(w),
/// the symmetric problem D^{1/2} K D^{1/2} v = kappa v is solved and
/// eigenfunctions recovered as phi = D^{-1/2} v, which makes them orthonormal
/// under l2_inner. Eigenvalues within -1e-10 * kappa_1 of zero are clamped to 0.
EigenSystem eigendecompose(const KernelOnGrid& kernel, int max_components);

/// Scores of the centered curves against the first m eigenfunctions.
/// Requires 1 <= m <= eig.count(), m <= n - 1, and kappa_m above the
/// usable-component threshold.
ScoresMatrix compute_scores(const std::vector<GridFunction>& curves, const EigenSystem& eig, int m);

namespace reference {
/// Serial reference implementations of the parallel kernels, kept for tests
/// and the benchmark target.
KernelOnGrid empirical_kernel(const std::vector<GridFunction>& curves);
ScoresMatrix compute_scores(const std::vector<GridFunction>& curves, const EigenSystem& eig, int m);
}  // namespace reference

}  // namespace fqr
