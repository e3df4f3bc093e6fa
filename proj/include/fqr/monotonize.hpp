#pragma once

#include <vector>

#include "fqr/levels.hpp"

namespace fqr {

/// A conditional quantile curve u -> Q(u|x) sampled on a level grid.
struct QuantileCurve {
    QuantileIndexSet levels;
    std::vector<double> values;

    QuantileCurve(QuantileIndexSet lv, std::vector<double> v);
};

/// Monotone rearrangement: sort the values, keep the levels.
QuantileCurve rearrange(const QuantileCurve& curve);

/// L2 projection onto nondecreasing sequences (uniform weights), computed by
/// pool-adjacent-violators with left-to-right merging.
QuantileCurve isotonize_pava(const QuantileCurve& curve);

/// Pointwise convex combination lambda * a + (1 - lambda) * b.
QuantileCurve blend(const QuantileCurve& a, const QuantileCurve& b, double lambda);

/// Discrete Lq distance between curves on the same levels: uniform average of
/// |diff|^q over the grid, to the power 1/q; q may be infinity (max |diff|).
double lq_error(const QuantileCurve& estimate, const QuantileCurve& truth, double q);

}  // namespace fqr
