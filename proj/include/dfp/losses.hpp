#pragma once

// Differentiable training losses. Spatial sums are masked means so the loss
// weights are resolution-independent; every term is bounded below by its
// eps^alpha floor.

#include <utility>
#include <vector>

#include "dfp/flow_ops.hpp"
#include "dfp/geometry.hpp"
#include "dfp/ops.hpp"

namespace dfp {

struct CharbonnierParams {
    double alpha = 0.45;
    double beta = 1.0;
    double eps = 1e-7;

    void validate() const {
        DFP_CHECK(alpha > 0 && alpha <= 1, "charbonnier: alpha must be in (0,1], got ", alpha);
        DFP_CHECK(beta > 0, "charbonnier: beta must be > 0, got ", beta);
        DFP_CHECK(eps > 0, "charbonnier: eps must be > 0, got ", eps);
    }
};

struct LossWeights {
    double lambda_vs = 1.0;
    double lambda_ir = 1.0;
    double lambda_sd = 1.0;   // value after the schedule switches on
    double lambda_p = 1.0;
    bool sd_schedule = true;  // zero smoothness weight for the first half of training

    void validate() const {
        DFP_CHECK(lambda_vs >= 0 && lambda_ir >= 0 && lambda_sd >= 0 && lambda_p >= 0,
                  "loss weights must be nonnegative");
    }
    double effective_sd(double epoch_fraction) const {
        return (sd_schedule && epoch_fraction < 0.5) ? 0.0 : lambda_sd;
    }
};

// Weighted contributions per step (total == vs + ir + sd + p), plus the raw
// per-pyramid-level means the aggregates came from.
struct LossReport {
    double total = 0, vs = 0, ir = 0, sd = 0, p = 0;
    double lambda_sd = 0;
    std::vector<double> vs_levels, ir_levels, sd_levels;
};

// masked mean of (beta*r^2 + eps)^alpha; mask may be undefined (all valid)
template <typename T>
Tensor<T> charbonnier(const Tensor<T>& residual, const CharbonnierParams& params,
                      const Tensor<T>& mask = {});

// charbonnier of I_t - synthesize_view(I_s, depth, pose6, K) over valid pixels
template <typename T>
Tensor<T> view_synthesis_loss(const Tensor<T>& I_t, const Tensor<T>& I_s,
                              const Tensor<T>& depth, const Tensor<T>& pose6,
                              const IntrinsicsBatch& K, const CharbonnierParams& params);

// occlusion-gated charbonnier of I_t - flow_warp(I_s, flow), plus the
// -0.1*mean(log occ) regularizer that keeps the mask from collapsing to zero
template <typename T>
Tensor<T> flow_reconstruction_loss(const Tensor<T>& I_s, const Tensor<T>& I_t,
                                   const Tensor<T>& flow, const Tensor<T>& occ,
                                   const CharbonnierParams& params);

// mean over interior pixels of (|d2x D| e^(-10|dx I|) + |d2y D| e^(-10|dy I|))/2;
// second differences on depth, centered first differences on the image
template <typename T>
Tensor<T> depth_smoothness_loss(const Tensor<T>& depth, const Tensor<T>& image);

// mean over the 16 entries of charbonnier(pose_matrix(fwd)*pose_matrix(bwd) - I4)
template <typename T>
Tensor<T> pose_consistency_loss(const Tensor<T>& fwd, const Tensor<T>& bwd,
                                const CharbonnierParams& params);

template <typename T>
struct LossTerms {
    Tensor<T> vs, ir, sd, p;  // scalar tensors; sd may be undefined when inactive
};

// weighted sum with the lambda_sd schedule applied at epoch_fraction
template <typename T>
std::pair<Tensor<T>, LossReport> composite_loss(const LossTerms<T>& terms,
                                                const LossWeights& weights,
                                                double epoch_fraction);

}  // namespace dfp
