#pragma once

#include <functional>
#include <vector>

#include "pmw/tensor.hpp"

namespace pmw {

// Central-difference gradient verification. `scalar_fn` evaluates a scalar
// loss from the given inputs; `analytic` holds the claimed d(loss)/d(input)
// for each input tensor. Every element is perturbed by +/-eps in f64 and the
// worst relative error is returned:
//   rel = |fd - analytic| / max(|fd|, |analytic|, denom_floor).
struct FdCheckResult {
  double max_rel_error = 0.0;
  // location of the worst element, for diagnostics
  int input_index = -1;
  std::int64_t element = -1;
  double fd = 0.0, analytic = 0.0;
};

FdCheckResult fd_check(
    const std::function<double(const std::vector<TensorD>&)>& scalar_fn,
    std::vector<TensorD> inputs, const std::vector<TensorD>& analytic,
    double eps = 1e-5, double denom_floor = 1e-6);

}  // namespace pmw
