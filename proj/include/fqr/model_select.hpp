#pragma once

#include <map>
#include <string>
#include <vector>

#include "fqr/curves.hpp"
#include "fqr/levels.hpp"

#include <Eigen/Dense>

namespace fqr {

enum class CriterionKind { aic, bic, gacv };

const char* to_string(CriterionKind kind);
CriterionKind criterion_from_string(const std::string& name);

/// Single-level criterion from the summed check loss of a fitted model:
///   aic  = log(sum/n) + (m+1)/n
///   bic  = log(sum/n) + (m+1) log(n) / n
///   gacv = sum / (n - (m+1))
/// Requires n > m + 1; the log-based criteria reject a zero loss.
double criterion_at(CriterionKind kind, double sum_check_loss, int n, int m, double u);

/// Uniform average of criterion_at over the level grid.
double integrated_criterion(CriterionKind kind, const std::vector<double>& sum_losses_per_level,
                            int n, int m);

struct SelectionResult {
    int m_star = 0;
    std::map<int, double> integrated;                    // candidate m -> integrated criterion
    std::map<int, std::vector<double>> per_level;        // candidate m -> criterion per level
    std::map<int, std::vector<double>> sum_losses;       // candidate m -> summed check loss per level
    std::vector<int> skipped;                            // candidates beyond the usable spectrum
};

/// Fit at each candidate cut-off and return the integrated-criterion argmin,
/// ties broken to the smallest m. Candidates must lie in [1, n-2]; candidates
/// beyond the usable eigen spectrum are skipped (error if none survive).
SelectionResult select_cutoff(CriterionKind kind, const std::vector<DiscreteCurve>& curves,
                              const Eigen::VectorXd& responses, const QuantileIndexSet& levels,
                              const std::vector<int>& m_candidates, InterpolationRule rule,
                              int grid_size);

/// select_cutoff on curves already sampled on the grid.
SelectionResult select_cutoff_on_grid(CriterionKind kind, const std::vector<GridFunction>& curves,
                                      const Eigen::VectorXd& responses, const QuantileIndexSet& levels,
                                      const std::vector<int>& m_candidates);

/// Default candidate range 1..min(20, n-2).
std::vector<int> default_candidates(int n);

}  // namespace fqr
