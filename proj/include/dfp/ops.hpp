#pragma once

// Autodiff primitives over Tensor<T>. Every function computes eagerly and, if
// a Graph<T> is live and some input requires grad, records a backward closure.
// All reductions are order-deterministic: each output element is accumulated
// by exactly one thread in a fixed serial order.

#include <cstdint>
#include <utility>
#include <vector>

#include "dfp/tensor.hpp"

namespace dfp {

enum class Pad { same, valid };

// ---- elementwise ----
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> log_op(const Tensor<T>& a);
template <typename T> Tensor<T> exp_op(const Tensor<T>& a);
template <typename T> Tensor<T> reciprocal(const Tensor<T>& a);
template <typename T> Tensor<T> clamp_min(const Tensor<T>& a, T lo);

// ---- reductions ----
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
// mean of x over elements where mask != 0; mask is not differentiated.
// Empty mask yields 0 (denominator clamped to 1).
template <typename T> Tensor<T> masked_mean(const Tensor<T>& x, const Tensor<T>& mask);

// ---- shape ----
template <typename T> Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
// view-copy of rows [start, start+len) along dim 0
template <typename T> Tensor<T> narrow_batch(const Tensor<T>& a, int start, int len);
template <typename T> Tensor<T> stack_batch(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

// ---- dense layers ----
// input [N,C,H,W], kernel [F,C,kh,kw], bias [F] (may be undefined for none).
// same: H' = ceil(H/stride), asymmetric padding bottom/right-heavy.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride, Pad padding);
// x [N,Ci] * w [Co,Ci] + b [Co] -> [N,Co]
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, int groups, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps);
// whole-channel dropout, deterministic in seed; identity when !training or rate==0
template <typename T>
Tensor<T> spatial_dropout(const Tensor<T>& x, double rate, bool training, uint64_t seed);

// ---- resampling ----
template <typename T> Tensor<T> upsample_bilinear2x(const Tensor<T>& x);
template <typename T> Tensor<T> avg_pool2x(const Tensor<T>& x);        // 2x2 box mean, even dims
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& x);  // [N,C,H,W] -> [N,C]

// ---- sampling ----
// img [N,C,H,W] sampled at coords [N,2,Ho,Wo] (channel 0 = u/x, 1 = v/y).
// Out-of-bounds coordinates are border-clamped; valid is 1 where the
// untouched coordinate lies inside [0,W-1]x[0,H-1]. valid never carries grad.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> bilinear_sample(const Tensor<T>& img, const Tensor<T>& coords);

// corr(p,o) = <a(p), b(p+o)>/C for o in [-d,d]^2; channel index (oy+d)*(2d+1)+(ox+d);
// b out of range counts as zero features.
template <typename T>
Tensor<T> cost_volume(const Tensor<T>& a, const Tensor<T>& b, int max_disp);

// ---- optimizer ----
template <typename T>
struct AdamState {
    std::vector<T> m, v;
    int64_t step = 0;
};
// standard bias-corrected Adam on one parameter tensor; grads must be finite
template <typename T>
void adam_step(Tensor<T>& param, AdamState<T>& state, T lr, T beta1, T beta2, T eps);

}  // namespace dfp
