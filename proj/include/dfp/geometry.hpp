#pragma once

// Differentiable pinhole geometry: the 6-DoF pose -> matrix map, the
// depth-based reprojection into the source view, and view synthesis that
// chains them with bilinear sampling.

#include <utility>
#include <vector>

#include "dfp/ops.hpp"
#include "dfp/se3.hpp"

namespace dfp {

// points projecting to z below this are flagged invalid
inline constexpr double kZMin = 1e-3;

// intrinsics for a batch: one per sample, or a single entry broadcast
using IntrinsicsBatch = std::vector<CameraIntrinsics>;

// constant [N,2,H,W] tensor of pixel coordinates (channel 0 = u, 1 = v)
template <typename T> Tensor<T> make_pixel_grid(int n, int h, int w);

// pose [N,6] (tx ty tz rx ry rz) -> [N,12] row-major 3x4 [R|t]
template <typename T> Tensor<T> pose_to_matrix(const Tensor<T>& pose);

// Reprojection p_s of every target pixel: lift by depth, apply [R|t], project
// with K. Returns coords [N,2,H,W] and a validity mask [N,1,H,W] that is 0
// where the transformed point has z <= kZMin (coords there use clamped z).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> project(const Tensor<T>& depth, const Tensor<T>& posemat,
                                        const IntrinsicsBatch& K);

// warp source into the target frame: pose_to_matrix -> project -> bilinear_sample;
// validity is the AND of projection and sampling masks
template <typename T>
std::pair<Tensor<T>, Tensor<T>> synthesize_view(const Tensor<T>& source, const Tensor<T>& depth,
                                                const Tensor<T>& pose6,
                                                const IntrinsicsBatch& K);

}  // namespace dfp
