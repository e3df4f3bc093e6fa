#include "fqr/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fqr/errors.hpp"
#include "fqr/openmp.hpp"

namespace fqr {

int FqrModel::level_index(double u) const {
    const std::vector<double>& lv = levels.levels();
    auto it = std::lower_bound(lv.begin(), lv.end(), u);
    if (it == lv.end() || *it != u)
        throw_validation("level u = " + std::to_string(u) + " was not fitted");
    return static_cast<int>(it - lv.begin());
}

FqrModel fit_fqr(const std::vector<DiscreteCurve>& curves, const Eigen::VectorXd& responses,
                 const QuantileIndexSet& levels, int m, InterpolationRule rule, int grid_size) {
    std::vector<GridFunction> on_grid;
    on_grid.reserve(curves.size());
    for (const DiscreteCurve& c : curves) on_grid.push_back(interpolate(c, rule, grid_size));
    return fit_fqr_on_grid(on_grid, responses, levels, m, rule);
}

FqrModel fit_fqr_on_grid(const std::vector<GridFunction>& curves, const Eigen::VectorXd& responses,
                         const QuantileIndexSet& levels, int m, InterpolationRule rule) {
    const int n = static_cast<int>(curves.size());
    if (n == 0) throw_validation("fit: no curves");
    if (responses.size() != n) throw_validation("fit: responses length must match curve count");
    if (!responses.allFinite()) throw_validation("fit: non-finite response");
    if (m < 1) throw_validation("fit: m must be >= 1");
    if (n < m + 2) throw_validation("fit: needs n >= m + 2");

    FqrModel model(levels);
    model.grid_size = curves.front().grid_size;
    model.rule = rule;
    model.m = m;
    model.mean_curve = curve_mean(curves);

    KernelOnGrid kernel = empirical_kernel(curves);
    EigenSystem eig = eigendecompose(kernel, std::min(m, kernel.grid_size));
    ScoresMatrix scores = compute_scores(curves, eig, m);  // checks the usable spectrum

    model.eigenvalues = eig.eigenvalues;
    model.eigenfunctions = eig.eigenfunctions;

    const int K = levels.size();
    model.fits.resize(static_cast<std::size_t>(K));
    std::vector<std::string> failures(static_cast<std::size_t>(K));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < K; ++k) {
        try {
            model.fits[static_cast<std::size_t>(k)] = solve_check_loss(scores.scores, responses, levels[k]);
        } catch (const Error& e) {
            failures[static_cast<std::size_t>(k)] = e.what();
        }
    }
    for (const std::string& msg : failures)
        if (!msg.empty()) throw_solver("fit: " + msg);

    model.training_scores = std::move(scores);
    model.training_responses = responses;
    return model;
}

SlopeSurface slope_surface(const FqrModel& model) {
    SlopeSurface surface(model.levels);
    surface.grid_size = model.grid_size;
    surface.values.reserve(model.fits.size());
    for (const QrSolution& fit : model.fits) {
        GridFunction b = GridFunction::zeros(model.grid_size);
        for (int j = 1; j <= model.m; ++j) {
            const double coef = fit.coefficients(j);
            const GridFunction& phi = model.eigenfunctions[static_cast<std::size_t>(j - 1)];
            for (int g = 0; g < model.grid_size; ++g) b[g] += coef * phi[g];
        }
        surface.values.push_back(std::move(b));
    }
    return surface;
}

double predict_quantile(const FqrModel& model, const GridFunction& x, double u) {
    const int k = model.level_index(u);
    if (x.grid_size != model.grid_size) throw_validation("predict: grid size mismatch");
    const QrSolution& fit = model.fits[static_cast<std::size_t>(k)];
    GridFunction centered = x - model.mean_curve;
    double q = fit.coefficients(0);
    for (int j = 1; j <= model.m; ++j)
        q += fit.coefficients(j) * l2_inner(centered, model.eigenfunctions[static_cast<std::size_t>(j - 1)]);
    return q;
}

double predict_quantile(const FqrModel& model, const DiscreteCurve& x, double u) {
    return predict_quantile(model, interpolate(x, model.rule, model.grid_size), u);
}

double normal_equation_residual(const FqrModel& model, double u) {
    const int k = model.level_index(u);
    if (!model.training_scores || !model.training_responses)
        throw_validation("normal_equation_residual: training data not available on this model");
    const QrSolution& fit = model.fits[static_cast<std::size_t>(k)];
    Eigen::VectorXd grad = subgradient_vector(model.training_scores->scores, *model.training_responses,
                                              fit.coefficients, u);
    return grad.tail(model.m).norm();
}

namespace {

nlohmann::ordered_json grid_to_json(const GridFunction& f) { return nlohmann::ordered_json(f.values); }

GridFunction grid_from_json(const nlohmann::json& j, int grid_size) {
    std::vector<double> v = j.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != grid_size) throw_parse("model JSON: grid length mismatch");
    return GridFunction(grid_size, std::move(v));
}

}  // namespace

std::string model_to_json(const FqrModel& model) {
    nlohmann::ordered_json j;
    j["format"] = "fqr-model";
    j["version"] = 1;
    j["grid_size"] = model.grid_size;
    j["rule"] = to_string(model.rule);
    j["m"] = model.m;
    j["levels"] = model.levels.levels();
    j["mean_curve"] = grid_to_json(model.mean_curve);
    j["eigenvalues"] = model.eigenvalues;
    nlohmann::ordered_json phis = nlohmann::ordered_json::array();
    for (const GridFunction& phi : model.eigenfunctions) phis.push_back(grid_to_json(phi));
    j["eigenfunctions"] = std::move(phis);
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (const QrSolution& fit : model.fits) {
        nlohmann::ordered_json f;
        f["u"] = fit.u;
        f["coefficients"] = std::vector<double>(fit.coefficients.data(),
                                                fit.coefficients.data() + fit.coefficients.size());
        f["objective"] = fit.objective;
        f["subgradient_norm"] = fit.subgradient_norm;
        fits.push_back(std::move(f));
    }
    j["fits"] = std::move(fits);
    return j.dump(2);
}

FqrModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw_parse(std::string("model JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "fqr-model") throw_parse("model JSON: unexpected format tag");
        FqrModel model(QuantileIndexSet(j.at("levels").get<std::vector<double>>()));
        model.grid_size = j.at("grid_size").get<int>();
        model.rule = interpolation_rule_from_string(j.at("rule").get<std::string>());
        model.m = j.at("m").get<int>();
        model.mean_curve = grid_from_json(j.at("mean_curve"), model.grid_size);
        model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        for (const auto& p : j.at("eigenfunctions")) model.eigenfunctions.push_back(grid_from_json(p, model.grid_size));
        if (static_cast<int>(model.eigenfunctions.size()) != model.m)
            throw_parse("model JSON: eigenfunction count must equal m");
        for (const auto& f : j.at("fits")) {
            QrSolution fit;
            fit.u = f.at("u").get<double>();
            std::vector<double> coef = f.at("coefficients").get<std::vector<double>>();
            if (static_cast<int>(coef.size()) != model.m + 1)
                throw_parse("model JSON: coefficient length must equal m + 1");
            fit.coefficients = Eigen::Map<Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
            fit.objective = f.at("objective").get<double>();
            fit.subgradient_norm = f.at("subgradient_norm").get<double>();
            model.fits.push_back(std::move(fit));
        }
        if (model.fits.size() != static_cast<std::size_t>(model.levels.size()))
            throw_parse("model JSON: fit count must equal level count");
        for (std::size_t k = 0; k < model.fits.size(); ++k)
            if (model.fits[k].u != model.levels.levels()[k])
                throw_parse("model JSON: fit levels out of order");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw_parse(std::string("model JSON: ") + e.what());
    }
}

}  // namespace fqr
