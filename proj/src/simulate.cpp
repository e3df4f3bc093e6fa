#include "fqr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fqr/covariance.hpp"
#include "fqr/errors.hpp"
#include "fqr/openmp.hpp"
#include "fqr/qr_solver.hpp"
#include "fqr/rng.hpp"

namespace fqr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt3 = 1.7320508075688772;

// Stream tags for the counter RNG.
constexpr std::uint64_t kTagSubject = 1;
constexpr std::uint64_t kTagFresh = 2;
constexpr std::uint64_t kTagReplication = 3;

std::uint64_t replication_seed(std::uint64_t seed, int rep) {
    return detail::mix_key(detail::mix_key(detail::splitmix64(seed), kTagReplication),
                           static_cast<std::uint64_t>(rep));
}

}  // namespace

const char* to_string(ErrorLaw law) { return law == ErrorLaw::normal ? "normal" : "cauchy"; }

ErrorLaw error_law_from_string(const std::string& name) {
    if (name == "normal") return ErrorLaw::normal;
    if (name == "cauchy") return ErrorLaw::cauchy;
    throw_validation("unknown error law '" + name + "'");
}

void DesignSpec::validate() const {
    if (!(alpha > 1.0)) throw_validation("design: alpha must be > 1");
    if (n < 10) throw_validation("design: n must be >= 10");
    if (grid_size < 2) throw_validation("design: grid_size must be >= 2");
    if (basis_terms < 1) throw_validation("design: basis_terms must be >= 1");
}

double TruthHandle::gamma(int j) const {
    const double sign = (j % 2 == 1) ? 1.0 : -1.0;
    return sign * std::pow(static_cast<double>(j), -alpha / 2.0);
}

double TruthHandle::error_quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw_validation("error_quantile: u must lie in (0,1)");
    if (error_law == ErrorLaw::normal) return normal_quantile(u);
    return std::tan(kPi * (u - 0.5));
}

double TruthHandle::signal(const std::vector<double>& z) const {
    double acc = 0.0;
    const std::size_t terms = std::min(z.size(), slope_coeffs.size());
    for (std::size_t j = 0; j < terms; ++j)
        acc += slope_coeffs[j] * gamma(static_cast<int>(j) + 1) * z[j];
    return acc;
}

GridFunction TruthHandle::slope_on_grid(int grid_size) const {
    GridFunction out = GridFunction::zeros(grid_size);
    for (int g = 0; g < grid_size; ++g) {
        const double t = static_cast<double>(g) / (grid_size - 1);
        double acc = 0.0;
        for (std::size_t j = 0; j < slope_coeffs.size(); ++j)
            acc += slope_coeffs[j] * design_basis(static_cast<int>(j) + 1, t);
        out[g] = acc;
    }
    return out;
}

double design_basis(int j, double t) { return std::sqrt(2.0) * std::cos(j * kPi * t); }

namespace {

std::vector<double> design_slope_coeffs(int basis_terms) {
    std::vector<double> rho(static_cast<std::size_t>(basis_terms));
    rho[0] = 0.3;
    for (int j = 2; j <= basis_terms; ++j) {
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        rho[static_cast<std::size_t>(j - 1)] = 4.0 * sign * std::pow(static_cast<double>(j), -2.0);
    }
    return rho;
}

std::vector<double> draw_scores(CounterRng& rng, int basis_terms) {
    std::vector<double> z(static_cast<std::size_t>(basis_terms));
    for (double& zj : z) zj = rng.uniform(-kSqrt3, kSqrt3);
    return z;
}

// phi_j on the grid, one row per basis term.
Eigen::MatrixXd cosine_basis(int basis_terms, int grid_size) {
    Eigen::MatrixXd basis(basis_terms, grid_size);
    for (int j = 1; j <= basis_terms; ++j)
        for (int g = 0; g < grid_size; ++g)
            basis(j - 1, g) = design_basis(j, static_cast<double>(g) / (grid_size - 1));
    return basis;
}

GridFunction covariate_on_grid(const TruthHandle& truth, const Eigen::MatrixXd& basis,
                               const std::vector<double>& z) {
    Eigen::VectorXd coef(basis.rows());
    for (Eigen::Index j = 0; j < basis.rows(); ++j)
        coef(j) = truth.gamma(static_cast<int>(j) + 1) * z[static_cast<std::size_t>(j)];
    Eigen::VectorXd values = basis.transpose() * coef;
    return GridFunction(static_cast<int>(basis.cols()),
                        std::vector<double>(values.data(), values.data() + values.size()));
}

}  // namespace

SimulatedData gen_dataset(const DesignSpec& spec) {
    spec.validate();
    SimulatedData data;
    data.truth.slope_coeffs = design_slope_coeffs(spec.basis_terms);
    data.truth.alpha = spec.alpha;
    data.truth.error_law = spec.error_law;

    const std::vector<double> grid = uniform_grid(spec.grid_size);
    const Eigen::MatrixXd basis = cosine_basis(spec.basis_terms, spec.grid_size);
    data.curves.resize(static_cast<std::size_t>(spec.n));
    data.responses.resize(spec.n);

    for (int i = 0; i < spec.n; ++i) {
        CounterRng rng = CounterRng::derive(spec.seed, {kTagSubject, static_cast<std::uint64_t>(i)});
        std::vector<double> z = draw_scores(rng, spec.basis_terms);
        const double eps = (spec.error_law == ErrorLaw::normal) ? rng.normal() : rng.cauchy();

        DiscreteCurve& curve = data.curves[static_cast<std::size_t>(i)];
        curve.subject_id = "sim" + std::to_string(i + 1);
        curve.times = grid;
        GridFunction x = covariate_on_grid(data.truth, basis, z);
        curve.values = std::move(x.values);
        data.responses(i) = data.truth.signal(z) + eps;
    }
    return data;
}

double true_quantile(const TruthHandle& truth, const std::vector<double>& z, double u) {
    return truth.error_quantile(u) + truth.signal(z);
}

double qamise_slope(const SlopeSurface& estimate, const TruthHandle& truth) {
    const GridFunction rho = truth.slope_on_grid(estimate.grid_size);
    double acc = 0.0;
    for (const GridFunction& b : estimate.values) {
        const GridFunction diff = b - rho;
        acc += l2_inner(diff, diff);
    }
    return acc / static_cast<double>(estimate.values.size());
}

double qamise_quantile_fn(const std::function<double(const GridFunction&, double)>& predictor,
                          const TruthHandle& truth, const DesignSpec& spec, int n_fresh) {
    if (n_fresh < 1) throw_validation("qamise_quantile: n_fresh must be >= 1");
    const std::vector<double>& levels = spec.levels.levels();
    const Eigen::MatrixXd basis = cosine_basis(spec.basis_terms, spec.grid_size);
    double acc = 0.0;
    for (int i = 0; i < n_fresh; ++i) {
        CounterRng rng = CounterRng::derive(spec.seed, {kTagFresh, static_cast<std::uint64_t>(i)});
        std::vector<double> z = draw_scores(rng, spec.basis_terms);
        GridFunction x = covariate_on_grid(truth, basis, z);
        for (double u : levels) {
            const double diff = predictor(x, u) - true_quantile(truth, z, u);
            acc += diff * diff;
        }
    }
    return acc / (static_cast<double>(n_fresh) * static_cast<double>(levels.size()));
}

double qamise_quantile(const FqrModel& model, const TruthHandle& truth, const DesignSpec& spec,
                       int n_fresh) {
    if (n_fresh < 1) throw_validation("qamise_quantile: n_fresh must be >= 1");
    if (model.grid_size != spec.grid_size)
        throw_validation("qamise_quantile: model and design grid sizes differ");
    const std::vector<double>& levels = spec.levels.levels();
    const Eigen::MatrixXd basis = cosine_basis(spec.basis_terms, spec.grid_size);
    double acc = 0.0;
    for (int i = 0; i < n_fresh; ++i) {
        CounterRng rng = CounterRng::derive(spec.seed, {kTagFresh, static_cast<std::uint64_t>(i)});
        std::vector<double> z = draw_scores(rng, spec.basis_terms);
        GridFunction x = covariate_on_grid(truth, basis, z);
        // score the draw once; predictions across levels reuse it
        GridFunction centered = x - model.mean_curve;
        Eigen::VectorXd xi(model.m);
        for (int j = 1; j <= model.m; ++j)
            xi(j - 1) = l2_inner(centered, model.eigenfunctions[static_cast<std::size_t>(j - 1)]);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const QrSolution& fit = model.fit_at(levels[k]);
            double pred = fit.coefficients(0);
            for (int j = 1; j <= model.m; ++j) pred += fit.coefficients(j) * xi(j - 1);
            const double diff = pred - true_quantile(truth, z, levels[k]);
            acc += diff * diff;
        }
    }
    return acc / (static_cast<double>(n_fresh) * static_cast<double>(levels.size()));
}

MPolicy MPolicy::fixed(int m) {
    MPolicy p;
    p.kind = Kind::fixed;
    p.fixed_m = m;
    return p;
}

MPolicy MPolicy::select(CriterionKind kind) {
    MPolicy p;
    p.kind = Kind::criterion;
    p.criterion = kind;
    return p;
}

MPolicy MPolicy::oracle() {
    MPolicy p;
    p.kind = Kind::oracle;
    return p;
}

std::string MPolicy::label() const {
    switch (kind) {
        case Kind::fixed: return "fixed_m=" + std::to_string(fixed_m);
        case Kind::criterion: return to_string(criterion);
        case Kind::oracle: return "oracle";
    }
    return "unknown";
}

int MPolicy::oracle_m(double alpha, int n) const {
    const double exponent = 1.0 / (alpha + 2.0 * kDesignBeta);
    return std::max(1, static_cast<int>(std::lround(std::pow(static_cast<double>(n), exponent))));
}

namespace {

struct PolicyOutcome {
    bool ok = false;
    int chosen_m = 0;
    double slope_qamise = 0.0;
    double quantile_qamise = 0.0;
};

struct ReplicationTask {
    std::size_t spec_index = 0;
    int rep = 0;
};

// All policy outcomes for one replication of one spec. The kernel,
// eigendecomposition, scores, and per-(m, u) solves are shared across
// policies: score columns nest across cut-offs.
std::vector<PolicyOutcome> run_replication(const DesignSpec& base_spec, int rep,
                                           const std::vector<MPolicy>& policies,
                                           const StudyOptions& options) {
    std::vector<PolicyOutcome> outcomes(policies.size());

    DesignSpec spec = base_spec;
    spec.seed = replication_seed(base_spec.seed, rep);
    const int n = spec.n;

    std::vector<int> candidates = options.criterion_candidates.empty()
                                      ? default_candidates(n)
                                      : options.criterion_candidates;
    std::sort(candidates.begin(), candidates.end());  // ties break to the smallest m
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    SimulatedData data;
    std::vector<GridFunction> on_grid;
    EigenSystem eig;
    ScoresMatrix scores;
    int m_top = 0;
    try {
        data = gen_dataset(spec);
        on_grid.reserve(data.curves.size());
        for (const DiscreteCurve& c : data.curves)
            on_grid.push_back(interpolate(c, options.rule, spec.grid_size));

        int m_needed = 1;
        for (const MPolicy& policy : policies) {
            if (policy.kind == MPolicy::Kind::fixed) m_needed = std::max(m_needed, policy.fixed_m);
            if (policy.kind == MPolicy::Kind::oracle)
                m_needed = std::max(m_needed, policy.oracle_m(spec.alpha, n));
            if (policy.kind == MPolicy::Kind::criterion && !candidates.empty())
                m_needed = std::max(m_needed, *std::max_element(candidates.begin(), candidates.end()));
        }
        KernelOnGrid kernel = empirical_kernel(on_grid);
        eig = eigendecompose(kernel, std::min(m_needed, spec.grid_size));
        m_top = std::min({eig.usable_components(), n - 1, m_needed});
        if (m_top < 1) throw_validation("study replication: degenerate spectrum");
        scores = compute_scores(on_grid, eig, m_top);
    } catch (const Error&) {
        return outcomes;  // all policies fail for this replication
    }

    const std::vector<double>& levels = spec.levels.levels();
    std::map<int, std::vector<QrSolution>> solve_cache;
    auto solutions_at = [&](int m) -> const std::vector<QrSolution>& {
        auto it = solve_cache.find(m);
        if (it != solve_cache.end()) return it->second;
        if (m < 1 || m > m_top) throw_validation("study replication: m beyond usable spectrum");
        if (n < m + 2) throw_validation("study replication: needs n >= m + 2");
        std::vector<QrSolution> fits;
        fits.reserve(levels.size());
        const Eigen::MatrixXd design = scores.scores.leftCols(m + 1);
        for (double u : levels) fits.push_back(solve_check_loss(design, data.responses, u));
        return solve_cache.emplace(m, std::move(fits)).first->second;
    };

    for (std::size_t p = 0; p < policies.size(); ++p) {
        const MPolicy& policy = policies[p];
        try {
            int m = 0;
            if (policy.kind == MPolicy::Kind::fixed) {
                m = policy.fixed_m;
            } else if (policy.kind == MPolicy::Kind::oracle) {
                m = policy.oracle_m(spec.alpha, n);
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (int cand : candidates) {
                    if (cand > m_top || n < cand + 2) continue;
                    const std::vector<QrSolution>& fits = solutions_at(cand);
                    std::vector<double> sums(fits.size());
                    for (std::size_t k = 0; k < fits.size(); ++k)
                        sums[k] = fits[k].objective * static_cast<double>(n);
                    const double value = integrated_criterion(policy.criterion, sums, n, cand);
                    if (value < best) {
                        best = value;
                        m = cand;
                    }
                }
                if (m == 0) throw_validation("study replication: no feasible criterion candidate");
            }

            FqrModel model(spec.levels);
            model.grid_size = spec.grid_size;
            model.rule = options.rule;
            model.m = m;
            model.mean_curve = curve_mean(on_grid);
            model.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + m);
            model.eigenfunctions.assign(eig.eigenfunctions.begin(), eig.eigenfunctions.begin() + m);
            model.fits = solutions_at(m);

            PolicyOutcome& out = outcomes[p];
            out.chosen_m = m;
            out.slope_qamise = qamise_slope(slope_surface(model), data.truth);
            out.quantile_qamise = qamise_quantile(model, data.truth, spec, options.n_fresh);
            out.ok = true;
        } catch (const Error&) {
            outcomes[p].ok = false;
        }
    }
    return outcomes;
}

}  // namespace

StudyReport run_study(const std::vector<DesignSpec>& specs, const std::vector<MPolicy>& policies,
                      int repetitions, const StudyOptions& options) {
    if (repetitions < 1) throw_validation("run_study: repetitions must be >= 1");
    if (specs.empty()) throw_validation("run_study: no design specs");
    if (policies.empty()) throw_validation("run_study: no cut-off policies");
    for (const DesignSpec& s : specs) s.validate();

    std::vector<ReplicationTask> tasks;
    for (std::size_t s = 0; s < specs.size(); ++s)
        for (int r = 0; r < repetitions; ++r) tasks.push_back({s, r});

    std::vector<std::vector<PolicyOutcome>> results(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t t = 0; t < tasks.size(); ++t)
        results[t] = run_replication(specs[tasks[t].spec_index], tasks[t].rep, policies, options);

    StudyReport report;
    report.repetitions = repetitions;
    report.n_fresh = options.n_fresh;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        for (std::size_t p = 0; p < policies.size(); ++p) {
            StudyCell cell;
            cell.alpha = specs[s].alpha;
            cell.error_law = specs[s].error_law;
            cell.n = specs[s].n;
            cell.policy = policies[p].label();

            std::vector<double> slope_vals, quant_vals;
            for (std::size_t t = 0; t < tasks.size(); ++t) {
                if (tasks[t].spec_index != s) continue;
                const PolicyOutcome& out = results[t][p];
                if (!out.ok) {
                    ++cell.failures;
                    continue;
                }
                slope_vals.push_back(out.slope_qamise);
                quant_vals.push_back(out.quantile_qamise);
                ++cell.m_histogram[out.chosen_m];
            }
            cell.reps_used = static_cast<int>(slope_vals.size());

            auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
                if (v.empty()) {
                    mean = std::numeric_limits<double>::quiet_NaN();
                    se = std::numeric_limits<double>::quiet_NaN();
                    return;
                }
                mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                if (v.size() < 2) {
                    se = std::numeric_limits<double>::quiet_NaN();
                    return;
                }
                double ss = 0.0;
                for (double x : v) ss += (x - mean) * (x - mean);
                se = std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) /
                     std::sqrt(static_cast<double>(v.size()));
            };
            mean_se(slope_vals, cell.slope_qamise, cell.slope_se);
            mean_se(quant_vals, cell.quantile_qamise, cell.quantile_se);
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

double reference_rate_exponent(RateTarget target, double alpha) {
    const double denom = alpha + 2.0 * kDesignBeta;
    if (target == RateTarget::slope) return -(2.0 * kDesignBeta - 1.0) / denom;
    return -(alpha + 2.0 * kDesignBeta - 1.0) / denom;
}

RateCheck rate_check(const StudyReport& report, RateTarget target) {
    std::map<int, double> by_n;
    double alpha = 0.0;
    bool seen = false;
    for (const StudyCell& cell : report.cells) {
        if (cell.policy != "oracle") continue;
        if (seen && cell.alpha != alpha)
            throw_validation("rate_check: report mixes multiple alpha values");
        alpha = cell.alpha;
        seen = true;
        const double q = (target == RateTarget::slope) ? cell.slope_qamise : cell.quantile_qamise;
        by_n[cell.n] = q;
    }
    if (by_n.size() < 2)
        throw_validation("rate_check: needs oracle-policy cells at >= 2 distinct n");

    RateCheck rc;
    rc.reference_slope = reference_rate_exponent(target, alpha);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [n, q] : by_n) {
        if (!(q > 0.0)) throw_validation("rate_check: nonpositive QAMISE");
        const double x = std::log(static_cast<double>(n));
        const double y = std::log(q);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        rc.points.emplace_back(n, q);
    }
    const double k = static_cast<double>(by_n.size());
    rc.fitted_slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    return rc;
}

}  // namespace fqr
