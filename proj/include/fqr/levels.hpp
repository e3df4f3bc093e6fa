#pragma once

#include <vector>

namespace fqr {

/// The set of quantile indices a model is fitted at. Strictly increasing and
/// kept away from the endpoints: every level lies in [0.01, 0.99].
class QuantileIndexSet {
public:
    explicit QuantileIndexSet(std::vector<double> levels);

    const std::vector<double>& levels() const { return levels_; }
    int size() const { return static_cast<int>(levels_.size()); }
    double operator[](int i) const { return levels_[static_cast<std::size_t>(i)]; }

    bool contains(double u) const;

    /// Evenly spaced levels start, start+step, ..., up to stop (inclusive
    /// within a half-step tolerance).
    static QuantileIndexSet linspace(double start, double stop, double step);

private:
    std::vector<double> levels_;
};

}  // namespace fqr
