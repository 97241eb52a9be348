#pragma once

#include <functional>
#include <span>
#include <vector>

namespace chfuq::engine {

/// Compares an analytic gradient against central finite differences of a
/// scalar function. Returns max over coordinates of
/// |analytic - central| / max(1, |analytic|).
///
/// `f` must be a pure function of the point; it is evaluated 2*n times.
double finite_difference_check(const std::function<double(std::span<const double>)>& f,
                               std::span<const double> analytic_grad,
                               std::span<const double> point, double step);

}  // namespace chfuq::engine
