#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fqr/curves.hpp"
#include "fqr/estimator.hpp"
#include "fqr/levels.hpp"
#include "fqr/model_select.hpp"

namespace fqr {

enum class ErrorLaw { normal, cauchy };

const char* to_string(ErrorLaw law);
ErrorLaw error_law_from_string(const std::string& name);

/// The slope decay exponent implied by the design's coefficient sequence
/// (rho_j of order j^-2); used for the theoretical rate references.
inline constexpr double kDesignBeta = 2.0;

/// Cosine-basis simulation design: X has scores gamma_j Z_j on the basis
/// phi_j(t) = sqrt(2) cos(j pi t), Z_j uniform on [-sqrt(3), sqrt(3)], and
/// Y = sum_j rho_j gamma_j Z_j + eps.
struct DesignSpec {
    double alpha = 2.0;
    ErrorLaw error_law = ErrorLaw::normal;
    int n = 100;
    int grid_size = 201;
    int basis_terms = 50;
    std::uint64_t seed = 0;
    QuantileIndexSet levels;

    explicit DesignSpec(QuantileIndexSet lv) : levels(std::move(lv)) {}
    void validate() const;
};

/// Ground truth of the design: slope coefficients, score law, error law.
struct TruthHandle {
    std::vector<double> slope_coeffs;  // slope_coeffs[j-1] = rho_j
    double alpha = 2.0;
    ErrorLaw error_law = ErrorLaw::normal;

    double gamma(int j) const;                          // (-1)^{j+1} j^{-alpha/2}
    double error_quantile(double u) const;              // F_eps^{-1}(u)
    double signal(const std::vector<double>& z) const;  // sum_j rho_j gamma_j z_j

    /// The slope function rho(t) = sum_j rho_j phi_j(t) on the grid.
    GridFunction slope_on_grid(int grid_size) const;
};

struct SimulatedData {
    std::vector<DiscreteCurve> curves;
    Eigen::VectorXd responses;
    TruthHandle truth;
};

/// Design basis function phi_j(t) = sqrt(2) cos(j pi t).
double design_basis(int j, double t);

/// Draw one dataset. Deterministic given spec.seed; subject i's draws come
/// from an independent counter stream, so generation parallelizes safely.
SimulatedData gen_dataset(const DesignSpec& spec);

/// Q_{Y|X}(u | x) for a covariate with basis scores z.
double true_quantile(const TruthHandle& truth, const std::vector<double>& z, double u);

/// Level-averaged squared L2 error of the slope surface against rho(t).
double qamise_slope(const SlopeSurface& estimate, const TruthHandle& truth);

/// Level-averaged squared prediction error over fresh covariate draws from
/// the design (an independent counter stream of spec.seed).
double qamise_quantile(const FqrModel& model, const TruthHandle& truth, const DesignSpec& spec,
                       int n_fresh);

/// Same integral for an arbitrary predictor (u, x) -> prediction; lets tests
/// evaluate analytic reference predictors.
double qamise_quantile_fn(const std::function<double(const GridFunction&, double)>& predictor,
                          const TruthHandle& truth, const DesignSpec& spec, int n_fresh);

/// Cut-off policy for the study: a fixed m, a selection criterion, or the
/// oracle rule m = round(n^{1/(alpha + 2 beta)}).
struct MPolicy {
    enum class Kind { fixed, criterion, oracle };
    Kind kind = Kind::fixed;
    int fixed_m = 1;
    CriterionKind criterion = CriterionKind::bic;

    static MPolicy fixed(int m);
    static MPolicy select(CriterionKind kind);
    static MPolicy oracle();

    std::string label() const;
    int oracle_m(double alpha, int n) const;
};

struct StudyCell {
    double alpha = 0.0;
    ErrorLaw error_law = ErrorLaw::normal;
    int n = 0;
    std::string policy;
    int reps_used = 0;
    int failures = 0;
    double slope_qamise = 0.0;
    double slope_se = 0.0;
    double quantile_qamise = 0.0;
    double quantile_se = 0.0;
    std::map<int, int> m_histogram;
};

struct StudyReport {
    int repetitions = 0;
    int n_fresh = 0;
    std::vector<StudyCell> cells;
};

struct StudyOptions {
    int n_fresh = 1000;
    InterpolationRule rule = InterpolationRule::left_step;
    std::vector<int> criterion_candidates;  // empty = default_candidates(n)
};

/// Run R replications of each spec under each policy. Replications are
/// independent tasks with per-replication seed streams; failed replications
/// are counted and excluded. Bit-identical output for a fixed config.
StudyReport run_study(const std::vector<DesignSpec>& specs, const std::vector<MPolicy>& policies,
                      int repetitions, const StudyOptions& options = {});

enum class RateTarget { slope, quantile };

struct RateCheck {
    double fitted_slope = 0.0;
    double reference_slope = 0.0;
    std::vector<std::pair<int, double>> points;  // (n, qamise) used in the fit
};

/// Least-squares slope of log QAMISE against log n over the report's
/// oracle-policy cells, with the theoretical reference exponent.
RateCheck rate_check(const StudyReport& report, RateTarget target);

/// Theoretical rate exponents at the design's beta.
double reference_rate_exponent(RateTarget target, double alpha);

}  // namespace fqr
