#pragma once

// Flow-field building blocks. Flow convention, fixed repo-wide:
// flow lives on the target grid and points into the source frame, i.e.
// source(p + flow(p)) aligns with target(p).

#include <utility>

#include "dfp/geometry.hpp"
#include "dfp/ops.hpp"

namespace dfp {

// bilinear_sample(x, grid + flow); validity marks in-bounds sample locations
template <typename T>
std::pair<Tensor<T>, Tensor<T>> flow_warp(const Tensor<T>& x, const Tensor<T>& flow);

// 2x bilinear upsampling with displacement values doubled (pixel units)
template <typename T>
Tensor<T> upsample_flow2x(const Tensor<T>& flow);

}  // namespace dfp
