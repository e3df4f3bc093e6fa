#include "fqr/monotonize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fqr/errors.hpp"

namespace fqr {

QuantileIndexSet::QuantileIndexSet(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw_validation("quantile index set must be nonempty");
    for (double u : levels_)
        if (!(u >= 0.01 && u <= 0.99))
            throw_validation("quantile level " + std::to_string(u) + " outside [0.01, 0.99]");
    for (std::size_t i = 0; i + 1 < levels_.size(); ++i)
        if (!(levels_[i] < levels_[i + 1]))
            throw_validation("quantile levels must be strictly increasing (duplicates rejected)");
}

bool QuantileIndexSet::contains(double u) const {
    return std::binary_search(levels_.begin(), levels_.end(), u);
}

QuantileIndexSet QuantileIndexSet::linspace(double start, double stop, double step) {
    if (!(step > 0.0)) throw_validation("linspace: step must be positive");
    std::vector<double> out;
    for (int k = 0;; ++k) {
        const double u = start + k * step;
        if (u > stop + 0.5 * step) break;
        out.push_back(u);
    }
    return QuantileIndexSet(std::move(out));
}

QuantileCurve::QuantileCurve(QuantileIndexSet lv, std::vector<double> v)
    : levels(std::move(lv)), values(std::move(v)) {
    if (static_cast<int>(values.size()) != levels.size())
        throw_validation("quantile curve: levels and values length mismatch");
    for (double x : values)
        if (!std::isfinite(x)) throw_validation("quantile curve: non-finite value");
}

QuantileCurve rearrange(const QuantileCurve& curve) {
    QuantileCurve out = curve;
    std::sort(out.values.begin(), out.values.end());
    return out;
}

QuantileCurve isotonize_pava(const QuantileCurve& curve) {
    QuantileCurve out = curve;
    const std::size_t n = out.values.size();

    // Blocks carry (sum, count); adjacent blocks merge while their means violate order.
    std::vector<double> sum(n);
    std::vector<std::size_t> count(n);
    std::size_t top = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum[top] = curve.values[i];
        count[top] = 1;
        while (top > 0 && sum[top - 1] * static_cast<double>(count[top]) >=
                              sum[top] * static_cast<double>(count[top - 1])) {
            sum[top - 1] += sum[top];
            count[top - 1] += count[top];
            --top;
        }
        ++top;
    }
    std::size_t pos = 0;
    for (std::size_t b = 0; b < top; ++b) {
        const double mean = sum[b] / static_cast<double>(count[b]);
        for (std::size_t k = 0; k < count[b]; ++k) out.values[pos++] = mean;
    }
    return out;
}

QuantileCurve blend(const QuantileCurve& a, const QuantileCurve& b, double lambda) {
    if (a.levels.levels() != b.levels.levels()) throw_validation("blend: level mismatch");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw_validation("blend: lambda must lie in [0,1]");
    QuantileCurve out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = lambda * a.values[i] + (1.0 - lambda) * b.values[i];
    return out;
}

double lq_error(const QuantileCurve& estimate, const QuantileCurve& truth, double q) {
    if (estimate.levels.levels() != truth.levels.levels()) throw_validation("lq_error: level mismatch");
    if (!(q >= 1.0)) throw_validation("lq_error: q must be >= 1");
    const std::size_t n = estimate.values.size();
    if (std::isinf(q)) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::fabs(estimate.values[i] - truth.values[i]));
        return worst;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += std::pow(std::fabs(estimate.values[i] - truth.values[i]), q);
    return std::pow(acc / static_cast<double>(n), 1.0 / q);
}

}  // namespace fqr
