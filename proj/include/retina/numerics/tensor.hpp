#ifndef RETINA_NUMERICS_TENSOR_HPP
#define RETINA_NUMERICS_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "retina/errors.hpp"

namespace retina::numerics {

// Dense row-major tensor of doubles.  Immutable by convention once published:
// operations return new tensors rather than mutating inputs.  No implicit
// broadcasting anywhere; all shape adaptation is explicit.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  // Validates length(values) == product(shape) and finiteness.
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);
  static Tensor scalar(double value) { return from({1}, {value}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double at2(std::size_t i, std::size_t j) const { return values_[i * shape_[1] + j]; }
  double& at2(std::size_t i, std::size_t j) { return values_[i * shape_[1] + j]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  // Total-order equality, used by determinism tests.
  bool bit_equal(const Tensor& other) const;

  // Throws ContractError if any element is NaN or infinite.
  void check_finite(const char* context) const;

  // Shape-preserving view with a new shape of equal element count.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace retina::numerics

#endif  // RETINA_NUMERICS_TENSOR_HPP
