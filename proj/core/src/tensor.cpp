#include "pmw/tensor.hpp"

#include <cmath>
#include <sstream>

namespace pmw {

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + std::to_string(d));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)),
      data_(static_cast<std::size_t>(shape_numel(shape_)), T(0)) {}

template <typename T>
Tensor<T>::Tensor(std::vector<int> shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str(shape_));
  }
}

template <typename T>
Tensor<T> Tensor<T>::full(std::vector<int> shape, T value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

template <typename T>
int Tensor<T>::dim(int i) const {
  if (i < 0 || i >= rank()) {
    throw ShapeError("dim index " + std::to_string(i) + " out of range for rank " +
                     std::to_string(rank()));
  }
  return shape_[static_cast<std::size_t>(i)];
}

template <typename T>
bool Tensor<T>::all_finite() const {
  for (const T& v : data_) {
    if (!std::isfinite(static_cast<double>(v))) return false;
  }
  return true;
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace pmw
