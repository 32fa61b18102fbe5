#ifndef RETINA_NUMERICS_OPS_HPP
#define RETINA_NUMERICS_OPS_HPP

#include "retina/numerics/tensor.hpp"

namespace retina::numerics::ops {

// Cross-correlation of input [C,H,W] or [B,C,H,W] with kernels [K,C,kh,kw].
// Output spatial extent: H' = floor((H + 2*padding - kh) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding);
void conv2d_backward(const Tensor& input, const Tensor& kernels, int stride, int padding,
                     const Tensor& out_grad, Tensor* input_grad, Tensor* kernel_grad);

// Adds bias[c] to every spatial position of channel c; input [C,H,W] or [B,C,H,W].
Tensor bias_channels(const Tensor& input, const Tensor& bias);
void bias_channels_backward(const Tensor& input, const Tensor& out_grad, Tensor* input_grad,
                            Tensor* bias_grad);

// output_i = sum_j weights[i,j] * input[j] + bias[i]; input [n] or batched [B,n].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& out_grad,
                    Tensor* input_grad, Tensor* weight_grad, Tensor* bias_grad);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Rowwise softmax over the last axis; rank 1 or 2.  Strictly positive, rows sum to 1.
Tensor softmax(const Tensor& x);
// Halves the two trailing spatial dims by 2x2 averaging; extents must be even.
Tensor meanpool2(const Tensor& x);
void meanpool2_backward(const Tensor& x, const Tensor& out_grad, Tensor* input_grad);

// out[b,c] = sum_cell features[b,c,cell] * weights[b,cell];
// features [B,C,h,w] (or [C,h,w]), weights [B,h*w] (or [h*w]).
Tensor attention_pool(const Tensor& features, const Tensor& weights);
void attention_pool_backward(const Tensor& features, const Tensor& weights,
                             const Tensor& out_grad, Tensor* feature_grad,
                             Tensor* weight_grad);

}  // namespace retina::numerics::ops

#endif  // RETINA_NUMERICS_OPS_HPP
