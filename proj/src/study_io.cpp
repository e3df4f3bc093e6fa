#include "fqr/study_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "fqr/errors.hpp"

namespace fqr {

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

using nlohmann::json;

std::vector<double> parse_levels(const json& j) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object())
        return QuantileIndexSet::linspace(j.at("start").get<double>(), j.at("stop").get<double>(),
                                          j.at("step").get<double>())
            .levels();
    throw_parse("study config: 'levels' must be an array or a {start, stop, step} object");
}

MPolicy parse_policy(const json& j) {
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name == "oracle") return MPolicy::oracle();
        return MPolicy::select(criterion_from_string(name));
    }
    if (j.is_object() && j.contains("fixed")) return MPolicy::fixed(j.at("fixed").get<int>());
    throw_parse("study config: policy entries must be 'aic'|'bic'|'gacv'|'oracle' or {\"fixed\": m}");
}

}  // namespace

StudyConfig parse_study_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw_parse(std::string("study config: ") + e.what());
    }
    try {
        StudyConfig cfg;
        cfg.alpha = j.at("alpha").get<double>();
        cfg.error_law = error_law_from_string(j.at("error_law").get<std::string>());
        cfg.n_list = j.at("n_list").get<std::vector<int>>();
        cfg.levels = parse_levels(j.at("levels"));
        for (const json& p : j.at("policy")) cfg.policies.push_back(parse_policy(p));
        cfg.repetitions = j.at("R").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("n_fresh")) cfg.n_fresh = j.at("n_fresh").get<int>();
        if (j.contains("grid_size")) cfg.grid_size = j.at("grid_size").get<int>();
        if (j.contains("basis_terms")) cfg.basis_terms = j.at("basis_terms").get<int>();
        if (j.contains("rule")) cfg.rule = interpolation_rule_from_string(j.at("rule").get<std::string>());
        if (j.contains("m_candidates")) cfg.criterion_candidates = j.at("m_candidates").get<std::vector<int>>();
        if (j.contains("rate_check"))
            for (const json& t : j.at("rate_check")) {
                const std::string name = t.get<std::string>();
                if (name == "slope")
                    cfg.rate_targets.push_back(RateTarget::slope);
                else if (name == "quantile")
                    cfg.rate_targets.push_back(RateTarget::quantile);
                else
                    throw_parse("study config: rate_check targets must be 'slope' or 'quantile'");
            }
        if (cfg.n_list.empty()) throw_validation("study config: n_list must be nonempty");
        if (!cfg.rate_targets.empty()) {
            std::vector<int> distinct = cfg.n_list;
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            if (distinct.size() < 2)
                throw_validation("study config: rate_check needs >= 2 distinct n");
            bool has_oracle = false;
            for (const MPolicy& p : cfg.policies)
                if (p.kind == MPolicy::Kind::oracle) has_oracle = true;
            if (!has_oracle)
                throw_validation("study config: rate_check needs the 'oracle' policy");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw_parse(std::string("study config: ") + e.what());
    }
}

std::vector<DesignSpec> make_design_specs(const StudyConfig& config) {
    std::vector<DesignSpec> specs;
    for (int n : config.n_list) {
        DesignSpec spec(QuantileIndexSet(config.levels));
        spec.alpha = config.alpha;
        spec.error_law = config.error_law;
        spec.n = n;
        spec.grid_size = config.grid_size;
        spec.basis_terms = config.basis_terms;
        spec.seed = config.seed;
        spec.validate();
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::string report_to_csv(const StudyReport& report) {
    std::ostringstream out;
    out << "alpha,error_law,n,policy,metric,value,se,reps_used,failures\n";
    for (const StudyCell& cell : report.cells) {
        for (int metric = 0; metric < 2; ++metric) {
            out << format_g17(cell.alpha) << ',' << to_string(cell.error_law) << ',' << cell.n << ','
                << cell.policy << ',' << (metric == 0 ? "slope_qamise" : "quantile_qamise") << ','
                << format_g17(metric == 0 ? cell.slope_qamise : cell.quantile_qamise) << ','
                << format_g17(metric == 0 ? cell.slope_se : cell.quantile_se) << ','
                << cell.reps_used << ',' << cell.failures << '\n';
        }
    }
    return out.str();
}

std::string report_to_json(const StudyReport& report,
                           const std::vector<std::pair<RateTarget, RateCheck>>& rates) {
    nlohmann::ordered_json j;
    j["repetitions"] = report.repetitions;
    j["n_fresh"] = report.n_fresh;
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const StudyCell& cell : report.cells) {
        nlohmann::ordered_json c;
        c["alpha"] = cell.alpha;
        c["error_law"] = to_string(cell.error_law);
        c["n"] = cell.n;
        c["policy"] = cell.policy;
        c["reps_used"] = cell.reps_used;
        c["failures"] = cell.failures;
        if (std::isnan(cell.slope_qamise)) {
            c["slope_qamise"] = nullptr;
            c["quantile_qamise"] = nullptr;
        } else {
            c["slope_qamise"] = cell.slope_qamise;
            c["quantile_qamise"] = cell.quantile_qamise;
        }
        c["slope_se"] = std::isnan(cell.slope_se) ? nlohmann::ordered_json(nullptr)
                                                  : nlohmann::ordered_json(cell.slope_se);
        c["quantile_se"] = std::isnan(cell.quantile_se) ? nlohmann::ordered_json(nullptr)
                                                        : nlohmann::ordered_json(cell.quantile_se);
        nlohmann::ordered_json hist = nlohmann::ordered_json::object();
        for (const auto& [m, count] : cell.m_histogram) hist[std::to_string(m)] = count;
        c["selected_m"] = std::move(hist);
        cells.push_back(std::move(c));
    }
    j["cells"] = std::move(cells);
    if (!rates.empty()) {
        nlohmann::ordered_json rc = nlohmann::ordered_json::array();
        for (const auto& [target, check] : rates) {
            nlohmann::ordered_json r;
            r["target"] = (target == RateTarget::slope) ? "slope" : "quantile";
            r["fitted_slope"] = check.fitted_slope;
            r["reference_slope"] = check.reference_slope;
            nlohmann::ordered_json pts = nlohmann::ordered_json::array();
            for (const auto& [n, q] : check.points) pts.push_back({{"n", n}, {"qamise", q}});
            r["points"] = std::move(pts);
            rc.push_back(std::move(r));
        }
        j["rate_checks"] = std::move(rc);
    }
    return j.dump(2);
}

}  // namespace fqr
