#pragma once

#include <string>
#include <vector>

#include "fqr/simulate.hpp"

namespace fqr {

/// Parsed study configuration (JSON file; see README for the schema).
struct StudyConfig {
    double alpha = 2.0;
    ErrorLaw error_law = ErrorLaw::normal;
    std::vector<int> n_list;
    std::vector<double> levels;
    std::vector<MPolicy> policies;
    int repetitions = 1;
    std::uint64_t seed = 0;
    int n_fresh = 1000;
    int grid_size = 201;
    int basis_terms = 50;
    InterpolationRule rule = InterpolationRule::left_step;
    std::vector<int> criterion_candidates;
    std::vector<RateTarget> rate_targets;
};

StudyConfig parse_study_config(const std::string& json_text);

/// One DesignSpec per entry of n_list; all share the config seed so cells use
/// common random numbers.
std::vector<DesignSpec> make_design_specs(const StudyConfig& config);

/// Long-format CSV, one row per (cell, metric); numbers at 17 significant
/// digits so repeated runs are byte-identical.
std::string report_to_csv(const StudyReport& report);

/// Full report including m histograms and any rate checks.
std::string report_to_json(const StudyReport& report, const std::vector<std::pair<RateTarget, RateCheck>>& rates);

/// printf %.17g formatting used by every CSV writer.
std::string format_g17(double x);

}  // namespace fqr
