#include "hsicd/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsicd {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

GradientCheckResult check_gradient(std::span<double> params, std::span<const double> analytic,
                                   std::span<const std::size_t> indices, const std::function<double()>& loss,
                                   double step, double tolerance) {
  if (params.size() != analytic.size()) {
    throw std::invalid_argument("check_gradient: parameter and gradient sizes differ");
  }
  GradientCheckResult result;
  for (const std::size_t i : indices) {
    const double saved = params[i];
    double best = 0.0;
    double h = step;
    for (int attempt = 0; attempt < 3; ++attempt, h /= 10.0) {
      params[i] = saved + h;
      const double up = loss();
      params[i] = saved - h;
      const double down = loss();
      params[i] = saved;
      const double err = relative_error(analytic[i], (up - down) / (2.0 * h));
      best = attempt == 0 ? err : std::min(best, err);
      if (best < tolerance) break;
    }
    ++result.checked;
    if (best > result.max_relative_error) {
      result.max_relative_error = best;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace hsicd
