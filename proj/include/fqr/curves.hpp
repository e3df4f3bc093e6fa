#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fqr {

/// One subject's sampled covariate path. Times are strictly increasing and
/// span [0,1] exactly: the first sampling point is 0 and the last is 1.
struct DiscreteCurve {
    std::string subject_id;
    std::vector<double> times;
    std::vector<double> values;

    /// Throws a validation error if any invariant is violated.
    void validate() const;
};

enum class InterpolationRule { left_step, midpoint_step };

const char* to_string(InterpolationRule rule);
InterpolationRule interpolation_rule_from_string(const std::string& name);

/// A function sampled on the uniform grid t_g = g/(G-1), g = 0..G-1,
/// integrated with the trapezoid rule.
struct GridFunction {
    int grid_size = 0;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(int g, std::vector<double> v) : grid_size(g), values(std::move(v)) {}
    static GridFunction zeros(int g) { return GridFunction(g, std::vector<double>(g, 0.0)); }

    double operator[](int g) const { return values[static_cast<std::size_t>(g)]; }
    double& operator[](int g) { return values[static_cast<std::size_t>(g)]; }
};

/// Grid abscissae t_g = g/(G-1).
std::vector<double> uniform_grid(int grid_size);

/// Trapezoid quadrature weights for the uniform grid on [0,1].
std::vector<double> trapezoid_weights(int grid_size);

/// Parse curve CSV (header subject_id,t,value) into per-subject curves,
/// ordered by first appearance. Rows may arrive unsorted within a subject.
std::vector<DiscreteCurve> load_curves(std::istream& source);

/// Sample the step interpolant of `curve` onto the uniform grid.
/// left_step carries each observation forward over its segment; midpoint_step
/// uses the segment-endpoint average. The value at t = 1 extends the last
/// segment (the step rules define the interpolant on [0,1) only).
GridFunction interpolate(const DiscreteCurve& curve, InterpolationRule rule, int grid_size);

/// Pointwise mean of curves on a common grid.
GridFunction curve_mean(const std::vector<GridFunction>& curves);

/// Trapezoid approximation of the L2 inner product on [0,1].
double l2_inner(const GridFunction& f, const GridFunction& g);

GridFunction operator+(const GridFunction& a, const GridFunction& b);
GridFunction operator-(const GridFunction& a, const GridFunction& b);
GridFunction operator*(double s, const GridFunction& f);

}  // namespace fqr
