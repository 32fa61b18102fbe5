#include "retina/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

namespace retina::numerics::ops {

namespace {

struct ConvDims {
  std::size_t batch, in_c, in_h, in_w;
  std::size_t out_c, kh, kw;
  std::size_t out_h, out_w;
  bool batched;
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernels, int stride, int padding) {
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  if (padding < 0) throw ContractError("conv2d: padding must be >= 0");
  if (kernels.rank() != 4) {
    throw DimensionError("conv2d: kernels must be rank 4 [K,C,kh,kw], got " +
                         kernels.shape_string());
  }
  ConvDims d{};
  if (input.rank() == 3) {
    d.batched = false;
    d.batch = 1;
    d.in_c = input.dim(0);
    d.in_h = input.dim(1);
    d.in_w = input.dim(2);
  } else if (input.rank() == 4) {
    d.batched = true;
    d.batch = input.dim(0);
    d.in_c = input.dim(1);
    d.in_h = input.dim(2);
    d.in_w = input.dim(3);
  } else {
    throw DimensionError("conv2d: input must be rank 3 [C,H,W] or 4 [B,C,H,W], got " +
                         input.shape_string());
  }
  d.out_c = kernels.dim(0);
  d.kh = kernels.dim(2);
  d.kw = kernels.dim(3);
  if (kernels.dim(1) != d.in_c) {
    throw DimensionError("conv2d: kernel channel axis " + std::to_string(kernels.dim(1)) +
                         " != input channel axis " + std::to_string(d.in_c));
  }
  std::size_t padded_h = d.in_h + 2 * static_cast<std::size_t>(padding);
  std::size_t padded_w = d.in_w + 2 * static_cast<std::size_t>(padding);
  if (d.kh > padded_h || d.kw > padded_w) {
    throw DimensionError("conv2d: kernel " + std::to_string(d.kh) + "x" + std::to_string(d.kw) +
                         " exceeds padded input " + std::to_string(padded_h) + "x" +
                         std::to_string(padded_w));
  }
  d.out_h = (padded_h - d.kh) / static_cast<std::size_t>(stride) + 1;
  d.out_w = (padded_w - d.kw) / static_cast<std::size_t>(stride) + 1;
  return d;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
  ConvDims d = conv_dims(input, kernels, stride, padding);
  std::vector<std::size_t> out_shape =
      d.batched ? std::vector<std::size_t>{d.batch, d.out_c, d.out_h, d.out_w}
                : std::vector<std::size_t>{d.out_c, d.out_h, d.out_w};
  Tensor out = Tensor::zeros(out_shape);

  const double* in = input.data();
  const double* ker = kernels.data();
  double* o = out.data();
  const std::size_t in_plane = d.in_h * d.in_w;
  const std::size_t out_plane = d.out_h * d.out_w;
  const long s = stride, p = padding;

  for (std::size_t b = 0; b < d.batch; ++b) {
    const double* in_b = in + b * d.in_c * in_plane;
    double* out_b = o + b * d.out_c * out_plane;
    for (std::size_t k = 0; k < d.out_c; ++k) {
      double* out_k = out_b + k * out_plane;
      for (std::size_t c = 0; c < d.in_c; ++c) {
        const double* in_c = in_b + c * in_plane;
        const double* ker_kc = ker + (k * d.in_c + c) * d.kh * d.kw;
        for (std::size_t dy = 0; dy < d.kh; ++dy) {
          for (std::size_t dx = 0; dx < d.kw; ++dx) {
            const double w = ker_kc[dy * d.kw + dx];
            if (w == 0.0) continue;
            for (std::size_t y = 0; y < d.out_h; ++y) {
              long iy = static_cast<long>(y) * s - p + static_cast<long>(dy);
              if (iy < 0 || iy >= static_cast<long>(d.in_h)) continue;
              const double* in_row = in_c + static_cast<std::size_t>(iy) * d.in_w;
              double* out_row = out_k + y * d.out_w;
              for (std::size_t x = 0; x < d.out_w; ++x) {
                long ix = static_cast<long>(x) * s - p + static_cast<long>(dx);
                if (ix < 0 || ix >= static_cast<long>(d.in_w)) continue;
                out_row[x] += w * in_row[static_cast<std::size_t>(ix)];
              }
            }
          }
        }
      }
    }
  }
  out.check_finite("conv2d");
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, int stride, int padding,
                     const Tensor& out_grad, Tensor* input_grad, Tensor* kernel_grad) {
  ConvDims d = conv_dims(input, kernels, stride, padding);
  const double* in = input.data();
  const double* ker = kernels.data();
  const double* og = out_grad.data();
  const std::size_t in_plane = d.in_h * d.in_w;
  const std::size_t out_plane = d.out_h * d.out_w;
  const long s = stride, p = padding;

  for (std::size_t b = 0; b < d.batch; ++b) {
    const double* in_b = in + b * d.in_c * in_plane;
    const double* og_b = og + b * d.out_c * out_plane;
    for (std::size_t k = 0; k < d.out_c; ++k) {
      const double* og_k = og_b + k * out_plane;
      for (std::size_t c = 0; c < d.in_c; ++c) {
        const double* in_c = in_b + c * in_plane;
        double* ig_c = input_grad ? input_grad->data() + (b * d.in_c + c) * in_plane : nullptr;
        const std::size_t ker_base = (k * d.in_c + c) * d.kh * d.kw;
        for (std::size_t dy = 0; dy < d.kh; ++dy) {
          for (std::size_t dx = 0; dx < d.kw; ++dx) {
            const double w = ker[ker_base + dy * d.kw + dx];
            double kg_acc = 0.0;
            for (std::size_t y = 0; y < d.out_h; ++y) {
              long iy = static_cast<long>(y) * s - p + static_cast<long>(dy);
              if (iy < 0 || iy >= static_cast<long>(d.in_h)) continue;
              const double* og_row = og_k + y * d.out_w;
              const double* in_row = in_c + static_cast<std::size_t>(iy) * d.in_w;
              double* ig_row = ig_c ? ig_c + static_cast<std::size_t>(iy) * d.in_w : nullptr;
              for (std::size_t x = 0; x < d.out_w; ++x) {
                long ix = static_cast<long>(x) * s - p + static_cast<long>(dx);
                if (ix < 0 || ix >= static_cast<long>(d.in_w)) continue;
                const double g = og_row[x];
                kg_acc += g * in_row[static_cast<std::size_t>(ix)];
                if (ig_row) ig_row[static_cast<std::size_t>(ix)] += g * w;
              }
            }
            if (kernel_grad) kernel_grad->data()[ker_base + dy * d.kw + dx] += kg_acc;
          }
        }
      }
    }
  }
}

Tensor bias_channels(const Tensor& input, const Tensor& bias) {
  if (bias.rank() != 1) throw DimensionError("bias_channels: bias must be rank 1");
  std::size_t batch = 1, offset = 0;
  if (input.rank() == 4) {
    batch = input.dim(0);
    offset = 1;
  } else if (input.rank() != 3) {
    throw DimensionError("bias_channels: input must be rank 3 or 4, got " +
                         input.shape_string());
  }
  std::size_t channels = input.dim(offset);
  if (channels != bias.dim(0)) {
    throw DimensionError("bias_channels: channel axis " + std::to_string(channels) +
                         " != bias extent " + std::to_string(bias.dim(0)));
  }
  std::size_t plane = input.dim(offset + 1) * input.dim(offset + 2);
  Tensor out = input;
  double* o = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double bv = bias[c];
      double* row = o + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) row[i] += bv;
    }
  }
  out.check_finite("bias_channels");
  return out;
}

void bias_channels_backward(const Tensor& input, const Tensor& out_grad, Tensor* input_grad,
                            Tensor* bias_grad) {
  std::size_t batch = 1, offset = 0;
  if (input.rank() == 4) {
    batch = input.dim(0);
    offset = 1;
  }
  std::size_t channels = input.dim(offset);
  std::size_t plane = input.dim(offset + 1) * input.dim(offset + 2);
  const double* og = out_grad.data();
  if (input_grad) {
    double* ig = input_grad->data();
    for (std::size_t i = 0; i < out_grad.size(); ++i) ig[i] += og[i];
  }
  if (bias_grad) {
    double* bg = bias_grad->data();
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double* row = og + (b * channels + c) * plane;
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += row[i];
        bg[c] += acc;
      }
    }
  }
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw DimensionError("dense: weights must be rank 2 [m,n]");
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
    throw DimensionError("dense: bias extent " + bias.shape_string() +
                         " != weight row count " + std::to_string(weights.dim(0)));
  }
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  std::size_t batch;
  bool batched;
  if (input.rank() == 1) {
    batched = false;
    batch = 1;
  } else if (input.rank() == 2) {
    batched = true;
    batch = input.dim(0);
  } else {
    throw DimensionError("dense: input must be rank 1 [n] or 2 [B,n], got " +
                         input.shape_string());
  }
  if (input.dim(batched ? 1 : 0) != n) {
    throw DimensionError("dense: input extent " + std::to_string(input.dim(batched ? 1 : 0)) +
                         " != weight column count " + std::to_string(n));
  }
  Tensor out = batched ? Tensor::zeros({batch, m}) : Tensor::zeros({m});
  const double* in = input.data();
  const double* w = weights.data();
  double* o = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* in_b = in + b * n;
    double* out_b = o + b * m;
    for (std::size_t i = 0; i < m; ++i) {
      const double* w_row = w + i * n;
      double acc = bias[i];
      for (std::size_t j = 0; j < n; ++j) acc += w_row[j] * in_b[j];
      out_b[i] = acc;
    }
  }
  out.check_finite("dense");
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& out_grad,
                    Tensor* input_grad, Tensor* weight_grad, Tensor* bias_grad) {
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  const bool batched = input.rank() == 2;
  const std::size_t batch = batched ? input.dim(0) : 1;
  const double* in = input.data();
  const double* w = weights.data();
  const double* og = out_grad.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* in_b = in + b * n;
    const double* og_b = og + b * m;
    for (std::size_t i = 0; i < m; ++i) {
      const double g = og_b[i];
      if (bias_grad) bias_grad->data()[i] += g;
      if (g == 0.0) continue;
      const double* w_row = w + i * n;
      if (input_grad) {
        double* ig_b = input_grad->data() + b * n;
        for (std::size_t j = 0; j < n; ++j) ig_b[j] += g * w_row[j];
      }
      if (weight_grad) {
        double* wg_row = weight_grad->data() + i * n;
        for (std::size_t j = 0; j < n; ++j) wg_row[j] += g * in_b[j];
      }
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) {
    // Branch avoids overflow in exp for large |v|.
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  out.check_finite("sigmoid");
  return out;
}

Tensor softmax(const Tensor& x) {
  std::size_t rows, cols;
  if (x.rank() == 1) {
    rows = 1;
    cols = x.dim(0);
  } else if (x.rank() == 2) {
    rows = x.dim(0);
    cols = x.dim(1);
  } else {
    throw DimensionError("softmax: input must be rank 1 or 2, got " + x.shape_string());
  }
  if (cols < 1) throw ContractError("softmax: input length must be >= 1");
  Tensor out = x;
  double* o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = o + r * cols;
    double mx = row[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      denom += row[j];
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= denom;
  }
  out.check_finite("softmax");
  return out;
}

Tensor meanpool2(const Tensor& x) {
  if (x.rank() < 2) throw DimensionError("meanpool2: input rank must be >= 2");
  std::size_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("meanpool2: spatial extents must be even, got " + x.shape_string());
  }
  std::vector<std::size_t> out_shape = x.shape();
  out_shape[x.rank() - 2] = h / 2;
  out_shape[x.rank() - 1] = w / 2;
  Tensor out = Tensor::zeros(out_shape);
  std::size_t planes = x.size() / (h * w);
  const double* in = x.data();
  double* o = out.data();
  const std::size_t oh = h / 2, ow = w / 2;
  for (std::size_t p = 0; p < planes; ++p) {
    const double* ip = in + p * h * w;
    double* op = o + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x2 = 0; x2 < ow; ++x2) {
        const double* r0 = ip + (2 * y) * w + 2 * x2;
        const double* r1 = r0 + w;
        op[y * ow + x2] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
    }
  }
  return out;
}

void meanpool2_backward(const Tensor& x, const Tensor& out_grad, Tensor* input_grad) {
  if (!input_grad) return;
  std::size_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  std::size_t planes = x.size() / (h * w);
  const std::size_t oh = h / 2, ow = w / 2;
  const double* og = out_grad.data();
  double* ig = input_grad->data();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* ogp = og + p * oh * ow;
    double* igp = ig + p * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x2 = 0; x2 < ow; ++x2) {
        const double g = 0.25 * ogp[y * ow + x2];
        double* r0 = igp + (2 * y) * w + 2 * x2;
        double* r1 = r0 + w;
        r0[0] += g;
        r0[1] += g;
        r1[0] += g;
        r1[1] += g;
      }
    }
  }
}

namespace {
void attention_dims(const Tensor& features, const Tensor& weights, std::size_t* batch,
                    std::size_t* channels, std::size_t* cells, bool* batched) {
  if (features.rank() == 4) {
    *batched = true;
    *batch = features.dim(0);
    *channels = features.dim(1);
    *cells = features.dim(2) * features.dim(3);
    if (weights.rank() != 2 || weights.dim(0) != *batch || weights.dim(1) != *cells) {
      throw DimensionError("attention_pool: weights " + weights.shape_string() +
                           " do not match features " + features.shape_string());
    }
  } else if (features.rank() == 3) {
    *batched = false;
    *batch = 1;
    *channels = features.dim(0);
    *cells = features.dim(1) * features.dim(2);
    if (weights.rank() != 1 || weights.dim(0) != *cells) {
      throw DimensionError("attention_pool: weights " + weights.shape_string() +
                           " do not match features " + features.shape_string());
    }
  } else {
    throw DimensionError("attention_pool: features must be rank 3 or 4");
  }
}
}  // namespace

Tensor attention_pool(const Tensor& features, const Tensor& weights) {
  std::size_t batch, channels, cells;
  bool batched;
  attention_dims(features, weights, &batch, &channels, &cells, &batched);
  Tensor out = batched ? Tensor::zeros({batch, channels}) : Tensor::zeros({channels});
  const double* f = features.data();
  const double* w = weights.data();
  double* o = out.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* wb = w + b * cells;
    for (std::size_t c = 0; c < channels; ++c) {
      const double* fc = f + (b * channels + c) * cells;
      double acc = 0.0;
      for (std::size_t i = 0; i < cells; ++i) acc += fc[i] * wb[i];
      o[b * channels + c] = acc;
    }
  }
  out.check_finite("attention_pool");
  return out;
}

void attention_pool_backward(const Tensor& features, const Tensor& weights,
                             const Tensor& out_grad, Tensor* feature_grad,
                             Tensor* weight_grad) {
  std::size_t batch, channels, cells;
  bool batched;
  attention_dims(features, weights, &batch, &channels, &cells, &batched);
  const double* f = features.data();
  const double* w = weights.data();
  const double* og = out_grad.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* wb = w + b * cells;
    double* wg = weight_grad ? weight_grad->data() + b * cells : nullptr;
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = og[b * channels + c];
      const double* fc = f + (b * channels + c) * cells;
      double* fg = feature_grad ? feature_grad->data() + (b * channels + c) * cells : nullptr;
      for (std::size_t i = 0; i < cells; ++i) {
        if (fg) fg[i] += g * wb[i];
        if (wg) wg[i] += g * fc[i];
      }
    }
  }
}

}  // namespace retina::numerics::ops
