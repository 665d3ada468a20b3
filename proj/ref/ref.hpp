#pragma once

// Naive serial double-precision reference kernels, used as oracles in the
// test suite and as baselines in the benchmark. Written directly from the
// documented contracts; intentionally shares no code with the main library.

#include <vector>

namespace ref {

// x [N,C,H,W], w [O,C,kh,kw], b [O] or empty. same_pad: out = ceil(in/stride)
// with bottom/right-heavy padding; otherwise valid. Returns [N,O,oh,ow].
std::vector<double> conv2d(const std::vector<double>& x, int N, int C, int H, int W,
                           const std::vector<double>& w, int O, int kh, int kw,
                           const std::vector<double>& b, int stride, bool same_pad, int& oh,
                           int& ow);

// per-sample, per-group normalization; gamma/beta are per channel
std::vector<double> group_norm(const std::vector<double>& x, int N, int C, int H, int W,
                               int groups, const std::vector<double>& gamma,
                               const std::vector<double>& beta, double eps);

// img [N,C,H,W] at coords [N,2,Ho,Wo] (channel 0 = x, 1 = y); border-clamped.
// valid[n,p] = 1 where the untouched coordinate is inside [0,W-1]x[0,H-1].
void bilinear_sample(const std::vector<double>& img, int N, int C, int H, int W,
                     const std::vector<double>& coords, int Ho, int Wo,
                     std::vector<double>& out, std::vector<double>& valid);

// corr(p,o) = <a(p), b(p+o)>/C, channel (oy+d)*(2d+1)+(ox+d), zero outside
std::vector<double> cost_volume(const std::vector<double>& a, const std::vector<double>& b,
                                int N, int C, int H, int W, int max_disp);

// sample img at p + flow(p); flow [N,2,H,W]
void flow_warp(const std::vector<double>& img, int N, int C, int H, int W,
               const std::vector<double>& flow, std::vector<double>& out,
               std::vector<double>& valid);

double charbonnier_mean(const std::vector<double>& residual, double alpha, double beta,
                        double eps);

// mean over interior pixels of (|d2x D| e^{-10|dx I|} + |d2y D| e^{-10|dy I|})/2,
// second differences on depth, centered first differences on the image;
// depth/img are [N,1,H,W]
double smoothness(const std::vector<double>& depth, const std::vector<double>& img, int N,
                  int H, int W);

struct DepthScores {
    double abs_rel = 0, sq_rel = 0, rmse = 0, rmse_log = 0, acc_delta = 0;
};
// median-scaled (if median_scale), clamped to [lo, hi], standard formulas
DepthScores depth_scores(std::vector<double> pred, const std::vector<double>& gt,
                         bool median_scale, double lo, double hi);

struct FlowScores {
    double epe = 0, er = 0;
};
// interleaved (u,v); er counts error > 3 px and > 5% of |gt|
FlowScores flow_scores(const std::vector<double>& pred, const std::vector<double>& gt);

}  // namespace ref
