#include <doctest.h>

#include <cmath>

#include "fqr/covariance.hpp"
#include "fqr/errors.hpp"
#include "fqr/rng.hpp"
#include "fqr/simulate.hpp"

using namespace fqr;

namespace {

std::vector<GridFunction> constant_pair(int grid) {
    return {GridFunction(grid, std::vector<double>(grid, 1.0)),
            GridFunction(grid, std::vector<double>(grid, -1.0))};
}

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("kernel of centered +-1 constants is 1 everywhere") {
    KernelOnGrid k = empirical_kernel(constant_pair(5));
    for (int g = 0; g < 5; ++g)
        for (int h = 0; h < 5; ++h) CHECK(k.matrix(g, h) == 1.0);
}

TEST_CASE("kernel of identical curves vanishes") {
    GridFunction f(4, {1.0, 2.0, -1.0, 0.5});
    KernelOnGrid k = empirical_kernel({f, f, f});
    CHECK(k.matrix.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel example on G=2 matches the hand computation") {
    // Derived by brute force: centered rows (+-0.5, -+0.5).
    std::vector<GridFunction> curves = {GridFunction(2, {1.0, 0.0}), GridFunction(2, {0.0, 1.0})};
    KernelOnGrid k = empirical_kernel(curves);
    CHECK(k.matrix(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(k.matrix(0, 1) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(k.matrix(1, 0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(k.matrix(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("kernel requires at least two curves") {
    GridFunction f(3, {1.0, 2.0, 3.0});
    CHECK_THROWS_AS(static_cast<void>(empirical_kernel({f})), Error);
}

TEST_CASE("rank-one constant kernel eigendecomposes to kappa_1 = 1, phi_1 = 1") {
    KernelOnGrid k = empirical_kernel(constant_pair(21));
    EigenSystem eig = eigendecompose(k, 5);
    CHECK(eig.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int g = 0; g < 21; ++g) CHECK(eig.eigenfunctions[0][g] == doctest::Approx(1.0).epsilon(1e-10));
    for (std::size_t j = 1; j < eig.eigenvalues.size(); ++j)
        CHECK(eig.eigenvalues[j] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("zero kernel has all-zero eigenvalues") {
    KernelOnGrid k;
    k.grid_size = 8;
    k.matrix = Eigen::MatrixXd::Zero(8, 8);
    EigenSystem eig = eigendecompose(k, 8);
    for (double kappa : eig.eigenvalues) CHECK(kappa == 0.0);
    CHECK(eig.usable_components() == 0);
}

TEST_CASE("eigenfunctions are quadrature-orthonormal with the sign convention") {
    DesignSpec spec{QuantileIndexSet({0.5})};
    spec.n = 60;
    spec.seed = 7;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> on_grid;
    for (const auto& c : data.curves) on_grid.push_back(interpolate(c, InterpolationRule::left_step, 201));
    EigenSystem eig = eigendecompose(empirical_kernel(on_grid), 8);
    for (int j = 0; j < 8; ++j) {
        for (int k = 0; k < 8; ++k) {
            const double want = (j == k) ? 1.0 : 0.0;
            CHECK(l2_inner(eig.eigenfunctions[j], eig.eigenfunctions[k]) ==
                  doctest::Approx(want).epsilon(1e-6));
        }
        // largest-absolute entry is positive
        double best = 0.0;
        for (int g = 0; g < 201; ++g)
            if (std::fabs(eig.eigenfunctions[j][g]) > std::fabs(best)) best = eig.eigenfunctions[j][g];
        CHECK(best > 0.0);
    }
}

TEST_CASE("quadrature eigenproblem is satisfied on the grid") {
    DesignSpec spec{QuantileIndexSet({0.5})};
    spec.n = 40;
    spec.seed = 11;
    spec.grid_size = 61;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> on_grid;
    for (const auto& c : data.curves) on_grid.push_back(interpolate(c, InterpolationRule::left_step, 61));
    KernelOnGrid kernel = empirical_kernel(on_grid);
    EigenSystem eig = eigendecompose(kernel, 4);
    const std::vector<double> w = trapezoid_weights(61);
    for (int j = 0; j < 4; ++j) {
        for (int g = 0; g < 61; ++g) {
            double lhs = 0.0;
            for (int h = 0; h < 61; ++h) lhs += kernel.matrix(g, h) * w[h] * eig.eigenfunctions[j][h];
            CHECK(lhs == doctest::Approx(eig.eigenvalues[j] * eig.eigenfunctions[j][g]).epsilon(1e-8));
        }
    }
}

TEST_CASE("scores of centered +-1 constants against phi_1 = 1") {
    auto curves = constant_pair(11);
    EigenSystem eig = eigendecompose(empirical_kernel(curves), 1);
    ScoresMatrix sm = compute_scores(curves, eig, 1);
    CHECK(sm.scores(0, 0) == 1.0);
    CHECK(sm.scores(1, 0) == 1.0);
    CHECK(sm.scores(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sm.scores(1, 1) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("score columns are centered, orthogonal, and reproduce eigenvalues") {
    DesignSpec spec{QuantileIndexSet({0.5})};
    spec.n = 80;
    spec.seed = 3;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> on_grid;
    for (const auto& c : data.curves) on_grid.push_back(interpolate(c, InterpolationRule::left_step, 201));
    EigenSystem eig = eigendecompose(empirical_kernel(on_grid), 6);
    const int m = std::min(6, eig.usable_components());
    REQUIRE(m >= 4);
    ScoresMatrix sm = compute_scores(on_grid, eig, m);
    const double kappa1 = eig.eigenvalues[0];
    for (int j = 1; j <= m; ++j) {
        CHECK(std::fabs(sm.scores.col(j).mean()) <= 1e-8);
        const double var = sm.scores.col(j).squaredNorm() / spec.n;
        CHECK(std::fabs(var - eig.eigenvalues[j - 1]) <= 1e-6 * kappa1);
        for (int k = j + 1; k <= m; ++k) {
            const double cov = sm.scores.col(j).dot(sm.scores.col(k)) / spec.n;
            CHECK(std::fabs(cov) <=
                  1e-6 * std::sqrt(eig.eigenvalues[j - 1] * eig.eigenvalues[k - 1]) + 1e-14);
        }
    }
}

TEST_CASE("identical curves give zero scores under an externally supplied basis") {
    GridFunction f(9, {1.0, 2.0, 0.0, -1.0, 0.5, 2.0, 1.0, 0.0, 1.0});
    std::vector<GridFunction> curves = {f, f, f, f};
    auto basis_donor = constant_pair(9);
    EigenSystem eig = eigendecompose(empirical_kernel(basis_donor), 1);
    ScoresMatrix sm = compute_scores(curves, eig, 1);
    for (int i = 0; i < 4; ++i) CHECK(sm.scores(i, 1) == 0.0);
}

TEST_CASE("eigendecomposition is invariant under subject relabeling") {
    DesignSpec spec{QuantileIndexSet({0.5})};
    spec.n = 30;
    spec.seed = 19;
    spec.grid_size = 41;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> a;
    for (const auto& c : data.curves) a.push_back(interpolate(c, InterpolationRule::left_step, 41));
    std::vector<GridFunction> b(a.rbegin(), a.rend());
    EigenSystem ea = eigendecompose(empirical_kernel(a), 5);
    EigenSystem eb = eigendecompose(empirical_kernel(b), 5);
    for (int j = 0; j < 5; ++j) {
        CHECK(ea.eigenvalues[j] == doctest::Approx(eb.eigenvalues[j]).epsilon(1e-12));
        for (int g = 0; g < 41; ++g)
            CHECK(std::fabs(ea.eigenfunctions[j][g]) ==
                  doctest::Approx(std::fabs(eb.eigenfunctions[j][g])).epsilon(1e-8));
    }
}

TEST_CASE("retained spectrum reconstructs the kernel") {
    DesignSpec spec{QuantileIndexSet({0.5})};
    spec.n = 12;
    spec.seed = 23;
    spec.grid_size = 31;
    SimulatedData data = gen_dataset(spec);
    std::vector<GridFunction> on_grid;
    for (const auto& c : data.curves) on_grid.push_back(interpolate(c, InterpolationRule::left_step, 31));
    KernelOnGrid kernel = empirical_kernel(on_grid);
    EigenSystem eig = eigendecompose(kernel, 31);
    const double kappa1 = eig.eigenvalues[0];
    for (int g = 0; g < 31; ++g)
        for (int h = 0; h < 31; ++h) {
            double acc = 0.0;
            for (int j = 0; j < eig.count(); ++j)
                acc += eig.eigenvalues[j] * eig.eigenfunctions[j][g] * eig.eigenfunctions[j][h];
            CHECK(std::fabs(acc - kernel.matrix(g, h)) <= 1e-6 * kappa1);
        }
}

TEST_CASE("compute_scores validates the cut-off") {
    auto curves = constant_pair(7);
    EigenSystem eig = eigendecompose(empirical_kernel(curves), 3);
    CHECK_THROWS_AS(static_cast<void>(compute_scores(curves, eig, 0)), Error);
    CHECK_THROWS_AS(static_cast<void>(compute_scores(curves, eig, 2)), Error);  // m > n - 1
}

TEST_CASE("leading eigenvalue ratio matches the design spectrum across replications") {
    // Population kappa_j = j^-2 at alpha = 2, so kappa_1/kappa_2 = 4.
    // Monte Carlo oracle at n = 500 over 100 replications on the median ratio.
    double sum_ratio = 0.0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        DesignSpec spec{QuantileIndexSet({0.5})};
        spec.n = 500;
        spec.seed = 1000 + static_cast<std::uint64_t>(r);
        SimulatedData data = gen_dataset(spec);
        std::vector<GridFunction> on_grid;
        on_grid.reserve(data.curves.size());
        for (const auto& c : data.curves)
            on_grid.push_back(interpolate(c, InterpolationRule::left_step, 201));
        EigenSystem eig = eigendecompose(empirical_kernel(on_grid), 2);
        sum_ratio += eig.eigenvalues[0] / eig.eigenvalues[1];
    }
    const double mean_ratio = sum_ratio / reps;
    CHECK(mean_ratio > 4.0 * 0.7);
    CHECK(mean_ratio < 4.0 * 1.3);
}

}  // TEST_SUITE
