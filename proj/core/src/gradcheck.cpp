#include "pmw/gradcheck.hpp"

#include <cmath>
#include <string>

namespace pmw {

FdCheckResult fd_check(
    const std::function<double(const std::vector<TensorD>&)>& scalar_fn,
    std::vector<TensorD> inputs, const std::vector<TensorD>& analytic,
    double eps, double denom_floor) {
  if (inputs.size() != analytic.size()) {
    throw ShapeError("fd_check: " + std::to_string(inputs.size()) +
                     " inputs vs " + std::to_string(analytic.size()) +
                     " analytic gradients");
  }
  FdCheckResult result;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    if (!inputs[t].same_shape(analytic[t])) {
      throw ShapeError("fd_check: analytic gradient " + std::to_string(t) +
                       " shape " + shape_str(analytic[t].shape()) +
                       " != input shape " + shape_str(inputs[t].shape()));
    }
    for (std::int64_t i = 0; i < inputs[t].size(); ++i) {
      const double saved = inputs[t][i];
      inputs[t][i] = saved + eps;
      const double fp = scalar_fn(inputs);
      inputs[t][i] = saved - eps;
      const double fm = scalar_fn(inputs);
      inputs[t][i] = saved;

      const double fd = (fp - fm) / (2.0 * eps);
      const double an = analytic[t][i];
      const double denom = std::max({std::fabs(fd), std::fabs(an), denom_floor});
      const double rel = std::fabs(fd - an) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.input_index = static_cast<int>(t);
        result.element = i;
        result.fd = fd;
        result.analytic = an;
      }
    }
  }
  return result;
}

}  // namespace pmw
