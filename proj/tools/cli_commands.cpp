#include "cli_commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fqr/errors.hpp"
#include "fqr/estimator.hpp"
#include "fqr/model_select.hpp"
#include "fqr/monotonize.hpp"
#include "fqr/openmp.hpp"
#include "fqr/study_io.hpp"

namespace fqr::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) throw_io("failed reading '" + path + "'");
    return buf.str();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw_parse(what + ": " + e.what());
    }
}

// Tracks files so a failing command leaves no partial outputs behind.
class OutputTracker {
public:
    explicit OutputTracker(const std::string& out_dir) : dir_(out_dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw_io("cannot create output directory '" + out_dir + "'");
    }

    std::string write(const std::string& name, const std::string& content) {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw_io("cannot open '" + path.string() + "' for writing");
        out << content;
        out.flush();
        if (!out.good()) throw_io("failed writing '" + path.string() + "'");
        written_.push_back(path);
        return path.string();
    }

    void remove_all() {
        for (const fs::path& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

QuantileIndexSet parse_levels_field(const json& j) {
    if (j.is_array()) return QuantileIndexSet(j.get<std::vector<double>>());
    if (j.is_object())
        return QuantileIndexSet::linspace(j.at("start").get<double>(), j.at("stop").get<double>(),
                                          j.at("step").get<double>());
    throw_parse("'levels' must be an array or a {start, stop, step} object");
}

std::vector<DiscreteCurve> load_curves_file(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    return load_curves(in);
}

Eigen::VectorXd load_responses(const std::string& path, const std::vector<DiscreteCurve>& curves) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw_parse("empty response CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "subject_id,y")
        throw_parse("response CSV header must be 'subject_id,y', got '" + line + "'");

    std::map<std::string, double> by_id;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw_parse("line " + std::to_string(line_no) + ": expected 2 comma-separated fields");
        const std::string id = line.substr(0, comma);
        double y = 0.0;
        try {
            std::size_t used = 0;
            y = std::stod(line.substr(comma + 1), &used);
            if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw_parse("line " + std::to_string(line_no) + ": cannot parse y");
        }
        if (!by_id.emplace(id, y).second)
            throw_validation("response CSV: duplicate subject_id '" + id + "'");
    }

    Eigen::VectorXd responses(static_cast<Eigen::Index>(curves.size()));
    for (std::size_t i = 0; i < curves.size(); ++i) {
        auto it = by_id.find(curves[i].subject_id);
        if (it == by_id.end())
            throw_validation("no response for subject '" + curves[i].subject_id + "'");
        responses(static_cast<Eigen::Index>(i)) = it->second;
        by_id.erase(it);
    }
    if (!by_id.empty())
        throw_validation("response CSV has subject '" + by_id.begin()->first + "' with no curve");
    return responses;
}

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

int fail(OutputTracker* outputs, const Error& e) {
    if (outputs) outputs->remove_all();
    nlohmann::ordered_json j;
    j["error"] = {{"kind", e.kind_name()}, {"message", e.what()}};
    std::cout << j.dump() << std::endl;
    return 1;
}

int fail_internal(OutputTracker* outputs, const std::exception& e) {
    if (outputs) outputs->remove_all();
    nlohmann::ordered_json j;
    j["error"] = {{"kind", "internal"}, {"message", e.what()}};
    std::cout << j.dump() << std::endl;
    return 1;
}

InterpolationRule rule_from_config(const json& cfg) {
    if (!cfg.contains("rule")) return InterpolationRule::left_step;
    return interpolation_rule_from_string(cfg.at("rule").get<std::string>());
}

}  // namespace

int run_fit(const GlobalOptions& options) {
    OutputTracker* tracker = nullptr;
    try {
        apply_threads(options.threads);
        const json cfg = parse_json(read_file(options.config_path), "fit config");
        const auto curves = load_curves_file(cfg.at("curves").get<std::string>());
        const Eigen::VectorXd responses = load_responses(cfg.at("responses").get<std::string>(), curves);
        const QuantileIndexSet levels = parse_levels_field(cfg.at("levels"));
        const InterpolationRule rule = rule_from_config(cfg);
        const int grid_size = cfg.value("grid_size", 201);

        int m = 0;
        std::optional<SelectionResult> selection;
        if (cfg.contains("m")) {
            m = cfg.at("m").get<int>();
        } else if (cfg.contains("criterion")) {
            const CriterionKind kind = criterion_from_string(cfg.at("criterion").get<std::string>());
            std::vector<int> candidates = cfg.contains("m_candidates")
                                              ? cfg.at("m_candidates").get<std::vector<int>>()
                                              : default_candidates(static_cast<int>(curves.size()));
            selection = select_cutoff(kind, curves, responses, levels, candidates, rule, grid_size);
            m = selection->m_star;
        } else {
            throw_validation("fit config needs either 'm' or 'criterion'");
        }

        FqrModel model = fit_fqr(curves, responses, levels, m, rule, grid_size);

        OutputTracker outputs(options.out_dir);
        tracker = &outputs;
        outputs.write("model.json", model_to_json(model));

        std::ostringstream csv;
        csv << "level,objective,subgradient_norm,normal_equation_residual\n";
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < model.fits.size(); ++k) {
            const QrSolution& fit = model.fits[k];
            const double residual = normal_equation_residual(model, fit.u);
            csv << format_g17(fit.u) << ',' << format_g17(fit.objective) << ','
                << format_g17(fit.subgradient_norm) << ',' << format_g17(residual) << '\n';
            rows.push_back({{"level", fit.u},
                            {"objective", fit.objective},
                            {"subgradient_norm", fit.subgradient_norm},
                            {"normal_equation_residual", residual}});
        }
        outputs.write("report.csv", csv.str());

        nlohmann::ordered_json meta;
        meta["command"] = "fit";
        meta["n"] = static_cast<int>(curves.size());
        meta["m"] = m;
        meta["rule"] = to_string(rule);
        meta["grid_size"] = grid_size;
        meta["certificate_bound"] = certificate_bound(model.training_scores->scores);
        if (selection) {
            nlohmann::ordered_json sel;
            sel["criterion"] = cfg.at("criterion").get<std::string>();
            nlohmann::ordered_json scores = nlohmann::ordered_json::object();
            for (const auto& [cand, value] : selection->integrated) scores[std::to_string(cand)] = value;
            sel["integrated"] = std::move(scores);
            meta["selection"] = std::move(sel);
        }
        meta["levels"] = std::move(rows);
        outputs.write("report.json", meta.dump(2));
        return 0;
    } catch (const Error& e) {
        return fail(tracker, e);
    } catch (const std::exception& e) {
        return fail_internal(tracker, e);
    }
}

int run_predict(const GlobalOptions& options) {
    OutputTracker* tracker = nullptr;
    try {
        apply_threads(options.threads);
        const json cfg = parse_json(read_file(options.config_path), "predict config");
        FqrModel model = model_from_json(read_file(cfg.at("model").get<std::string>()));
        const auto curves = load_curves_file(cfg.at("curves").get<std::string>());
        const std::string mode = cfg.value("monotonize", std::string("none"));
        const double lambda = cfg.value("blend_lambda", 0.5);
        if (mode != "none" && mode != "rearrange" && mode != "isotonic" && mode != "blend")
            throw_validation("monotonize must be one of none|rearrange|isotonic|blend");

        std::ostringstream csv;
        csv << "subject_id,level,prediction\n";
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const DiscreteCurve& curve : curves) {
            std::vector<double> values;
            values.reserve(static_cast<std::size_t>(model.levels.size()));
            for (double u : model.levels.levels()) values.push_back(predict_quantile(model, curve, u));
            if (mode != "none") {
                QuantileCurve raw(model.levels, values);
                if (mode == "rearrange")
                    values = rearrange(raw).values;
                else if (mode == "isotonic")
                    values = isotonize_pava(raw).values;
                else
                    values = blend(rearrange(raw), isotonize_pava(raw), lambda).values;
            }
            for (std::size_t k = 0; k < values.size(); ++k) {
                const double u = model.levels.levels()[k];
                csv << curve.subject_id << ',' << format_g17(u) << ',' << format_g17(values[k]) << '\n';
                rows.push_back({{"subject_id", curve.subject_id}, {"level", u}, {"prediction", values[k]}});
            }
        }

        OutputTracker outputs(options.out_dir);
        tracker = &outputs;
        outputs.write("report.csv", csv.str());
        nlohmann::ordered_json meta;
        meta["command"] = "predict";
        meta["monotonize"] = mode;
        meta["predictions"] = std::move(rows);
        outputs.write("report.json", meta.dump(2));
        return 0;
    } catch (const Error& e) {
        return fail(tracker, e);
    } catch (const std::exception& e) {
        return fail_internal(tracker, e);
    }
}

int run_select(const GlobalOptions& options) {
    OutputTracker* tracker = nullptr;
    try {
        apply_threads(options.threads);
        const json cfg = parse_json(read_file(options.config_path), "select config");
        const auto curves = load_curves_file(cfg.at("curves").get<std::string>());
        const Eigen::VectorXd responses = load_responses(cfg.at("responses").get<std::string>(), curves);
        const QuantileIndexSet levels = parse_levels_field(cfg.at("levels"));
        const CriterionKind kind = criterion_from_string(cfg.at("criterion").get<std::string>());
        const InterpolationRule rule = rule_from_config(cfg);
        const int grid_size = cfg.value("grid_size", 201);
        std::vector<int> candidates = cfg.contains("m_candidates")
                                          ? cfg.at("m_candidates").get<std::vector<int>>()
                                          : default_candidates(static_cast<int>(curves.size()));

        SelectionResult sel = select_cutoff(kind, curves, responses, levels, candidates, rule, grid_size);

        OutputTracker outputs(options.out_dir);
        tracker = &outputs;
        std::ostringstream csv;
        csv << "m,level,criterion_value\n";
        for (const auto& [m, per_level] : sel.per_level) {
            for (std::size_t k = 0; k < per_level.size(); ++k)
                csv << m << ',' << format_g17(levels.levels()[k]) << ',' << format_g17(per_level[k])
                    << '\n';
            csv << m << ",integrated," << format_g17(sel.integrated.at(m)) << '\n';
        }
        outputs.write("report.csv", csv.str());

        nlohmann::ordered_json meta;
        meta["command"] = "select";
        meta["criterion"] = to_string(kind);
        meta["m_star"] = sel.m_star;
        nlohmann::ordered_json integrated = nlohmann::ordered_json::object();
        for (const auto& [m, value] : sel.integrated) integrated[std::to_string(m)] = value;
        meta["integrated"] = std::move(integrated);
        meta["skipped_candidates"] = sel.skipped;
        outputs.write("report.json", meta.dump(2));
        return 0;
    } catch (const Error& e) {
        return fail(tracker, e);
    } catch (const std::exception& e) {
        return fail_internal(tracker, e);
    }
}

int run_simulate(const GlobalOptions& options) {
    OutputTracker* tracker = nullptr;
    try {
        apply_threads(options.threads);
        StudyConfig cfg = parse_study_config(read_file(options.config_path));
        if (options.seed_override) cfg.seed = *options.seed_override;

        StudyOptions study_options;
        study_options.n_fresh = cfg.n_fresh;
        study_options.rule = cfg.rule;
        study_options.criterion_candidates = cfg.criterion_candidates;

        StudyReport report =
            run_study(make_design_specs(cfg), cfg.policies, cfg.repetitions, study_options);

        std::vector<std::pair<RateTarget, RateCheck>> rates;
        for (RateTarget target : cfg.rate_targets) rates.emplace_back(target, rate_check(report, target));

        OutputTracker outputs(options.out_dir);
        tracker = &outputs;
        outputs.write("report.csv", report_to_csv(report));
        outputs.write("report.json", report_to_json(report, rates));
        return 0;
    } catch (const Error& e) {
        return fail(tracker, e);
    } catch (const std::exception& e) {
        return fail_internal(tracker, e);
    }
}

int run_command(const std::string& command, const GlobalOptions& options) {
    if (command == "fit") return run_fit(options);
    if (command == "predict") return run_predict(options);
    if (command == "select") return run_select(options);
    if (command == "simulate") return run_simulate(options);
    return fail(nullptr, Error(ErrorKind::validation, "unknown command '" + command + "'"));
}

}  // namespace fqr::cli
