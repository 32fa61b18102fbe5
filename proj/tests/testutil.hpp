#ifndef RETINA_TESTS_TESTUTIL_HPP
#define RETINA_TESTS_TESTUTIL_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "retina/numerics/rng.hpp"
#include "retina/numerics/tensor.hpp"

namespace testutil {

using retina::numerics::Rng;
using retina::numerics::Tensor;

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Reference cross-correlation: direct summation over the receptive field.
inline Tensor conv2d_oracle(const Tensor& input, const Tensor& kernels, int stride,
                            int padding) {
  std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  std::size_t K = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  std::size_t oh = (H + 2 * padding - kh) / stride + 1;
  std::size_t ow = (W + 2 * padding - kw) / stride + 1;
  Tensor out = Tensor::zeros({K, oh, ow});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t dy = 0; dy < kh; ++dy)
            for (std::size_t dx = 0; dx < kw; ++dx) {
              long iy = static_cast<long>(y) * stride - padding + static_cast<long>(dy);
              long ix = static_cast<long>(x) * stride - padding + static_cast<long>(dx);
              if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W))
                continue;
              acc += input[(c * H + iy) * W + ix] *
                     kernels[((k * C + c) * kh + dy) * kw + dx];
            }
        out[(k * oh + y) * ow + x] = acc;
      }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 gen{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() /
            ("retina_test_" + tag + "_" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

#endif  // RETINA_TESTS_TESTUTIL_HPP
