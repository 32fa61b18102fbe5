#include "retina/numerics/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace retina::numerics {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor extents must be positive");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.values_.assign(shape_product(t.shape_), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& v : t.values_) v = value;
  t.check_finite("Tensor::full");
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor extents must be positive");
  }
  if (shape_product(shape) != values.size()) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape product " +
                         std::to_string(shape_product(shape)));
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.values_ = std::move(values);
  t.check_finite("Tensor::from");
  return t;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

bool Tensor::bit_equal(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  return std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(double)) == 0;
}

void Tensor::check_finite(const char* context) const {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw ContractError(std::string(context) + ": non-finite tensor value");
    }
  }
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  if (shape_product(new_shape) != values_.size()) {
    throw DimensionError("reshape to " + std::to_string(shape_product(new_shape)) +
                         " elements from " + std::to_string(values_.size()));
  }
  Tensor t;
  t.shape_ = std::move(new_shape);
  t.values_ = values_;
  return t;
}

}  // namespace retina::numerics
