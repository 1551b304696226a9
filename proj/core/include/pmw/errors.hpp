#pragma once

#include <stdexcept>
#include <string>

namespace pmw {

// Tensor shapes or layer wiring do not line up.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or missing input: files, manifests, configs, weight blobs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf or other numerical breakdown during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pmw
