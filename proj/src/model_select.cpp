#include "fqr/model_select.hpp"

#include <algorithm>
#include <cmath>

#include "fqr/covariance.hpp"
#include "fqr/errors.hpp"
#include "fqr/openmp.hpp"
#include "fqr/qr_solver.hpp"

namespace fqr {

const char* to_string(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::aic: return "aic";
        case CriterionKind::bic: return "bic";
        case CriterionKind::gacv: return "gacv";
    }
    return "unknown";
}

CriterionKind criterion_from_string(const std::string& name) {
    if (name == "aic") return CriterionKind::aic;
    if (name == "bic") return CriterionKind::bic;
    if (name == "gacv") return CriterionKind::gacv;
    throw_validation("unknown criterion '" + name + "'");
}

double criterion_at(CriterionKind kind, double sum_check_loss, int n, int m, double) {
    if (sum_check_loss < 0.0) throw_validation("criterion: negative check loss");
    if (n <= m + 1) throw_validation("criterion: needs n > m + 1");
    const double nd = static_cast<double>(n);
    switch (kind) {
        case CriterionKind::aic:
            if (sum_check_loss == 0.0) throw_validation("criterion: degenerate perfect fit (log of zero loss)");
            return std::log(sum_check_loss / nd) + (m + 1) / nd;
        case CriterionKind::bic:
            if (sum_check_loss == 0.0) throw_validation("criterion: degenerate perfect fit (log of zero loss)");
            return std::log(sum_check_loss / nd) + (m + 1) * std::log(nd) / nd;
        case CriterionKind::gacv:
            return sum_check_loss / (nd - (m + 1));
    }
    throw_validation("criterion: unknown kind");
}

double integrated_criterion(CriterionKind kind, const std::vector<double>& sum_losses_per_level,
                            int n, int m) {
    if (sum_losses_per_level.empty()) throw_validation("integrated criterion: no levels");
    double acc = 0.0;
    for (double sum : sum_losses_per_level) acc += criterion_at(kind, sum, n, m, 0.5);
    return acc / static_cast<double>(sum_losses_per_level.size());
}

std::vector<int> default_candidates(int n) {
    std::vector<int> out;
    for (int m = 1; m <= std::min(20, n - 2); ++m) out.push_back(m);
    return out;
}

SelectionResult select_cutoff(CriterionKind kind, const std::vector<DiscreteCurve>& curves,
                              const Eigen::VectorXd& responses, const QuantileIndexSet& levels,
                              const std::vector<int>& m_candidates, InterpolationRule rule,
                              int grid_size) {
    std::vector<GridFunction> on_grid;
    on_grid.reserve(curves.size());
    for (const DiscreteCurve& c : curves) on_grid.push_back(interpolate(c, rule, grid_size));
    return select_cutoff_on_grid(kind, on_grid, responses, levels, m_candidates);
}

SelectionResult select_cutoff_on_grid(CriterionKind kind, const std::vector<GridFunction>& curves,
                                      const Eigen::VectorXd& responses, const QuantileIndexSet& levels,
                                      const std::vector<int>& m_candidates) {
    const int n = static_cast<int>(curves.size());
    if (m_candidates.empty()) throw_validation("select_cutoff: empty candidate list");
    if (responses.size() != n) throw_validation("select_cutoff: responses length must match curve count");
    for (int m : m_candidates)
        if (m < 1 || m > n - 2)
            throw_validation("select_cutoff: candidate m = " + std::to_string(m) +
                             " outside [1, n-2]");

    std::vector<int> candidates = m_candidates;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const int m_max = candidates.back();

    KernelOnGrid kernel = empirical_kernel(curves);
    EigenSystem eig = eigendecompose(kernel, std::min(m_max, kernel.grid_size));
    const int usable = std::min(eig.usable_components(), n - 1);

    SelectionResult result;
    std::vector<int> feasible;
    for (int m : candidates)
        (m <= usable ? feasible : result.skipped).push_back(m);
    if (feasible.empty())
        throw_validation("select_cutoff: no candidate m is feasible for the eigen spectrum");

    ScoresMatrix scores = compute_scores(curves, eig, feasible.back());

    // Smaller cut-offs use a prefix of the same score columns, so the loss
    // path is nonincreasing in m by construction.
    const int K = levels.size();
    struct Task { int m; int level; };
    std::vector<Task> tasks;
    for (int m : feasible)
        for (int k = 0; k < K; ++k) tasks.push_back({m, k});

    std::vector<double> task_loss(tasks.size(), 0.0);
    std::vector<std::string> task_error(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        try {
            const Eigen::MatrixXd design = scores.scores.leftCols(tasks[t].m + 1);
            QrSolution sol = solve_check_loss(design, responses, levels[tasks[t].level]);
            task_loss[t] = sol.objective * static_cast<double>(n);
        } catch (const Error& e) {
            task_error[t] = e.what();
        }
    }
    for (const std::string& msg : task_error)
        if (!msg.empty()) throw_solver("select_cutoff: " + msg);

    for (std::size_t t = 0; t < tasks.size(); ++t)
        result.sum_losses[tasks[t].m].resize(static_cast<std::size_t>(K));
    for (std::size_t t = 0; t < tasks.size(); ++t)
        result.sum_losses[tasks[t].m][static_cast<std::size_t>(tasks[t].level)] = task_loss[t];

    for (int m : feasible) {
        const std::vector<double>& sums = result.sum_losses[m];
        std::vector<double> per_level(sums.size());
        for (std::size_t k = 0; k < sums.size(); ++k)
            per_level[k] = criterion_at(kind, sums[k], n, m, levels[static_cast<int>(k)]);
        result.per_level[m] = std::move(per_level);
        result.integrated[m] = integrated_criterion(kind, sums, n, m);
    }

    result.m_star = feasible.front();
    double best = result.integrated[result.m_star];
    for (int m : feasible) {
        const double v = result.integrated[m];
        if (v < best) {  // strict: ties break to the smallest m
            best = v;
            result.m_star = m;
        }
    }
    return result;
}

}  // namespace fqr
