#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fqr/covariance.hpp"
#include "fqr/curves.hpp"
#include "fqr/levels.hpp"
#include "fqr/qr_solver.hpp"

namespace fqr {

/// Fitted functional quantile regression model: PCA basis truncated at m,
/// one check-loss fit per quantile level.
struct FqrModel {
    int grid_size = 0;
    InterpolationRule rule = InterpolationRule::left_step;
    int m = 0;
    GridFunction mean_curve;
    std::vector<double> eigenvalues;          // kappa_1..kappa_m
    std::vector<GridFunction> eigenfunctions; // phi_1..phi_m
    QuantileIndexSet levels;
    std::vector<QrSolution> fits;  // aligned with levels

    // Training data kept for diagnostics; absent after deserialization.
    std::optional<ScoresMatrix> training_scores;
    std::optional<Eigen::VectorXd> training_responses;

    FqrModel(QuantileIndexSet lv) : levels(std::move(lv)) {}

    int level_index(double u) const;  // throws if u was not fitted
    const QrSolution& fit_at(double u) const { return fits[static_cast<std::size_t>(level_index(u))]; }
};

/// The slope surface b(t,u) on the evaluation grid, one row per level.
struct SlopeSurface {
    int grid_size = 0;
    QuantileIndexSet levels;
    std::vector<GridFunction> values;  // values[k] = b(., levels[k])

    SlopeSurface(QuantileIndexSet lv) : levels(std::move(lv)) {}
};

/// Full pipeline: interpolate, center, eigendecompose, score, then solve one
/// check-loss problem per level. Requires n >= m + 2 and a usable spectrum
/// down to component m.
FqrModel fit_fqr(const std::vector<DiscreteCurve>& curves, const Eigen::VectorXd& responses,
                 const QuantileIndexSet& levels, int m, InterpolationRule rule, int grid_size);

/// Same pipeline starting from curves already sampled on the grid.
FqrModel fit_fqr_on_grid(const std::vector<GridFunction>& curves, const Eigen::VectorXd& responses,
                         const QuantileIndexSet& levels, int m, InterpolationRule rule);

/// Assemble b(t,u) = sum_j b_j(u) phi_j(t) on the evaluation grid.
SlopeSurface slope_surface(const FqrModel& model);

/// Plug-in conditional quantile: a(u) + <b(.,u), x - mean>.
double predict_quantile(const FqrModel& model, const GridFunction& x, double u);
double predict_quantile(const FqrModel& model, const DiscreteCurve& x, double u);

/// Norm over j = 1..m of (1/n) sum_i {u - 1(Y_i <= fitted_i)} xi_ij: the
/// coefficient vector of the empirical normal-equation operator at the fit.
/// Needs the training data, so it is unavailable on deserialized models.
double normal_equation_residual(const FqrModel& model, double u);

/// JSON round-trip of the model (mean curve, eigenpairs, per-level fits).
/// Numeric fields survive losslessly.
std::string model_to_json(const FqrModel& model);
FqrModel model_from_json(const std::string& text);

}  // namespace fqr
