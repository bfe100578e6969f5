#pragma once

#include <vector>

#include "rega/tensor.hpp"

namespace rega::ops {

// Cross-correlation (no kernel flip), zero padding. input NCHW, kernel OIHW.
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride = 1, int padding = 0);

// Mean pooling with bin edges floor(i*H/out_h); identity when sizes match.
// Never enlarges: out_h <= H, out_w <= W.
Tensor adaptive_avg_pool2d(const Tensor& input, int out_h, int out_w);

// Binary elementwise ops accept equal shapes, or b of shape (N,C,1,1)
// broadcast over the spatial dims of a (N,C,H,W).
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor scale(const Tensor& a, double factor);

// Channel-axis concatenation of NCHW tensors sharing N, H, W.
Tensor concat_channels(const std::vector<Tensor>& parts);

Tensor sum(const Tensor& a);
Tensor reshape(const Tensor& a, Shape dims);

// x: NxC, w: KxC, b: K -> NxK.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Mean softmax cross-entropy over the batch; labels in [0, K).
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Per-channel affine parameters plus running statistics.
struct BatchNormState {
  Tensor gamma;         // {C}, trainable
  Tensor beta;          // {C}, trainable
  Tensor running_mean;  // {C}, buffer
  Tensor running_var;   // {C}, buffer
  double eps = 1e-5;
  double momentum = 0.1;

  static BatchNormState create(int channels);
};

// Training mode normalizes by batch statistics (per channel over N*H*W >= 2)
// and updates running stats; eval mode uses the running stats.
Tensor batch_norm2d(const Tensor& input, BatchNormState& state, bool training);

}  // namespace rega::ops
