#pragma once

// Evaluation metrics: Eigen-protocol depth errors, KITTI-convention flow
// outlier rate, and snippet-wise scale-aligned absolute trajectory error.
// All computed in double regardless of input precision.

#include <cstdint>
#include <vector>

#include "dfp/se3.hpp"

namespace dfp {

struct DepthMetrics {
    double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0, acc_delta = 0;
};

struct FlowMetrics {
    double epe = 0;  // mean endpoint error, px
    double er = 0;   // fraction with error > 3 px AND > 5% of |gt|
};

struct PoseMetrics {
    double ate = 0;
};

struct DepthEvalOptions {
    bool median_scale = true;   // pred *= median(gt)/median(pred) before scoring
    double min_depth = 1e-3;    // pred clamped into [min_depth, max_depth]
    double max_depth = 80.0;
};

// Scores over pixels with valid != 0 (gt must be > 0 there). Empty mask fails.
DepthMetrics depth_metrics(const std::vector<float>& pred, const std::vector<float>& gt,
                           const std::vector<uint8_t>& valid, const DepthEvalOptions& opt = {});

// pred/gt are interleaved (u,v); epe/er over valid pixels. Empty mask fails.
FlowMetrics flow_metrics(const std::vector<float>& pred, const std::vector<float>& gt,
                         const std::vector<uint8_t>& valid);

// Sequences of per-pair relative poses in the network's output convention
// (point transform frame t -> t+1). Each snippet integrates snippet_len
// consecutive poses into snippet_len+1 camera positions, least-squares
// scale-aligns predicted to ground-truth translation (s = <p,g>/<p,p>, s = 1
// when degenerate), and scores position RMSE; the result is the mean over all
// sliding snippets.
PoseMetrics ate(const std::vector<Pose6>& pred, const std::vector<Pose6>& gt,
                int snippet_len = 5);

}  // namespace dfp
