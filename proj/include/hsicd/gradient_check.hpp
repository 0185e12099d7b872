#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace hsicd {

// |a - n| / max(|a| + |n|, floor). The floor keeps vanishing gradients from
// turning rounding noise into large relative errors.
double relative_error(double analytic, double numeric, double floor = 1e-6);

struct GradientCheckResult {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

// Compares analytic[i] with the central difference of `loss` around params[i]
// for each listed index. If a coordinate disagrees at `step`, it is retried
// at step/10 and step/100 (a ReLU kink inside the stencil breaks the
// difference quotient, not the gradient). params are restored afterwards.
GradientCheckResult check_gradient(std::span<double> params, std::span<const double> analytic,
                                   std::span<const std::size_t> indices, const std::function<double()>& loss,
                                   double step, double tolerance);

}  // namespace hsicd
