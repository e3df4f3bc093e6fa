#include "fqr/curves.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "fqr/errors.hpp"

namespace fqr {

void DiscreteCurve::validate() const {
    if (times.size() != values.size())
        throw_validation("curve '" + subject_id + "': times and values length mismatch");
    if (times.size() < 2)
        throw_validation("curve '" + subject_id + "': needs at least 2 observations");
    if (times.front() != 0.0)
        throw_validation("curve '" + subject_id + "': first sampling point must be t = 0");
    if (times.back() != 1.0)
        throw_validation("curve '" + subject_id + "': last sampling point must be t = 1");
    for (std::size_t l = 0; l + 1 < times.size(); ++l)
        if (!(times[l] < times[l + 1]))
            throw_validation("curve '" + subject_id + "': sampling points must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v))
            throw_validation("curve '" + subject_id + "': non-finite observation");
}

const char* to_string(InterpolationRule rule) {
    return rule == InterpolationRule::left_step ? "left_step" : "midpoint_step";
}

InterpolationRule interpolation_rule_from_string(const std::string& name) {
    if (name == "left_step") return InterpolationRule::left_step;
    if (name == "midpoint_step") return InterpolationRule::midpoint_step;
    throw_validation("unknown interpolation rule '" + name + "'");
}

std::vector<double> uniform_grid(int grid_size) {
    if (grid_size < 2) throw_validation("grid_size must be >= 2");
    std::vector<double> t(static_cast<std::size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) t[static_cast<std::size_t>(g)] = static_cast<double>(g) / (grid_size - 1);
    return t;
}

std::vector<double> trapezoid_weights(int grid_size) {
    if (grid_size < 2) throw_validation("grid_size must be >= 2");
    const double h = 1.0 / (grid_size - 1);
    std::vector<double> w(static_cast<std::size_t>(grid_size), h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

namespace {

double parse_field(const std::string& field, int line_no, const char* what) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw_parse("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + field + "'");
    return out;
}

}  // namespace

std::vector<DiscreteCurve> load_curves(std::istream& source) {
    std::string line;
    if (!std::getline(source, line)) throw_parse("empty curve CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "subject_id,t,value")
        throw_parse("curve CSV header must be 'subject_id,t,value', got '" + line + "'");

    std::vector<DiscreteCurve> curves;
    std::map<std::string, std::size_t> index;

    int line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::size_t c1 = line.find(',');
        std::size_t c2 = (c1 == std::string::npos) ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw_parse("line " + std::to_string(line_no) + ": expected 3 comma-separated fields");

        std::string id = line.substr(0, c1);
        if (id.empty()) throw_parse("line " + std::to_string(line_no) + ": empty subject_id");
        double t = parse_field(line.substr(c1 + 1, c2 - c1 - 1), line_no, "t");
        double v = parse_field(line.substr(c2 + 1), line_no, "value");

        auto [it, inserted] = index.try_emplace(id, curves.size());
        if (inserted) curves.push_back(DiscreteCurve{id, {}, {}});
        DiscreteCurve& c = curves[it->second];
        c.times.push_back(t);
        c.values.push_back(v);
    }

    for (DiscreteCurve& c : curves) {
        std::vector<std::size_t> order(c.times.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return c.times[a] < c.times[b]; });
        std::vector<double> t(c.times.size()), v(c.values.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            t[k] = c.times[order[k]];
            v[k] = c.values[order[k]];
        }
        for (std::size_t k = 0; k + 1 < t.size(); ++k)
            if (t[k] == t[k + 1])
                throw_validation("subject '" + c.subject_id + "': duplicate sampling point t = " +
                                 std::to_string(t[k]));
        c.times = std::move(t);
        c.values = std::move(v);
        c.validate();
    }
    return curves;
}

GridFunction interpolate(const DiscreteCurve& curve, InterpolationRule rule, int grid_size) {
    curve.validate();
    if (grid_size < 2) throw_validation("grid_size must be >= 2");

    const std::size_t nseg = curve.times.size() - 1;
    GridFunction out = GridFunction::zeros(grid_size);
    std::size_t seg = 0;
    for (int g = 0; g < grid_size; ++g) {
        const double t = static_cast<double>(g) / (grid_size - 1);
        while (seg + 1 < nseg && t >= curve.times[seg + 1]) ++seg;
        // t in [times[seg], times[seg+1]) except t = 1, which extends the last segment.
        if (rule == InterpolationRule::left_step)
            out[g] = curve.values[seg];
        else
            out[g] = 0.5 * (curve.values[seg] + curve.values[seg + 1]);
    }
    return out;
}

GridFunction curve_mean(const std::vector<GridFunction>& curves) {
    if (curves.empty()) throw_validation("curve_mean: empty input");
    const int grid = curves.front().grid_size;
    GridFunction out = GridFunction::zeros(grid);
    for (const GridFunction& c : curves) {
        if (c.grid_size != grid) throw_validation("curve_mean: grid size mismatch");
        for (int g = 0; g < grid; ++g) out[g] += c[g];
    }
    const double inv = 1.0 / static_cast<double>(curves.size());
    for (int g = 0; g < grid; ++g) out[g] *= inv;
    return out;
}

double l2_inner(const GridFunction& f, const GridFunction& g) {
    if (f.grid_size != g.grid_size) throw_validation("l2_inner: grid size mismatch");
    const int G = f.grid_size;
    const double h = 1.0 / (G - 1);
    double acc = 0.5 * (f[0] * g[0] + f[G - 1] * g[G - 1]);
    for (int i = 1; i + 1 < G; ++i) acc += f[i] * g[i];
    return acc * h;
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    if (a.grid_size != b.grid_size) throw_validation("grid size mismatch");
    GridFunction out = a;
    for (int g = 0; g < a.grid_size; ++g) out[g] += b[g];
    return out;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    if (a.grid_size != b.grid_size) throw_validation("grid size mismatch");
    GridFunction out = a;
    for (int g = 0; g < a.grid_size; ++g) out[g] -= b[g];
    return out;
}

GridFunction operator*(double s, const GridFunction& f) {
    GridFunction out = f;
    for (int g = 0; g < f.grid_size; ++g) out[g] *= s;
    return out;
}

}  // namespace fqr
