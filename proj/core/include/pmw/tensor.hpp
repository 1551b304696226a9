#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmw/errors.hpp"

namespace pmw {

enum class Mode { Train, Infer };

// Dense N-dimensional array, row-major, owning its storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<T> data);

  static Tensor full(std::vector<int> shape, T value);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const;
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const {
    return data_[static_cast<std::size_t>(i)];
  }

  // Convenience accessors for the common ranks; row-major index math.
  T& at(int i0) { return data_[static_cast<std::size_t>(i0)]; }
  T& at(int i0, int i1) {
    return data_[static_cast<std::size_t>(i0) * shape_[1] + i1];
  }
  T& at(int i0, int i1, int i2) {
    return data_[(static_cast<std::size_t>(i0) * shape_[1] + i1) * shape_[2] +
                 i2];
  }
  T& at(int i0, int i1, int i2, int i3) {
    return data_[((static_cast<std::size_t>(i0) * shape_[1] + i1) * shape_[2] +
                  i2) *
                     shape_[3] +
                 i3];
  }
  const T& at(int i0) const { return const_cast<Tensor*>(this)->at(i0); }
  const T& at(int i0, int i1) const {
    return const_cast<Tensor*>(this)->at(i0, i1);
  }
  const T& at(int i0, int i1, int i2) const {
    return const_cast<Tensor*>(this)->at(i0, i1, i2);
  }
  const T& at(int i0, int i1, int i2, int i3) const {
    return const_cast<Tensor*>(this)->at(i0, i1, i2, i3);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(T value);

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  std::vector<To> out(t.vec().begin(), t.vec().end());
  return Tensor<To>(t.shape(), std::move(out));
}

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace pmw
