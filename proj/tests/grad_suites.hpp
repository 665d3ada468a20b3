#pragma once

// The finite-difference suites behind both tests/test_gradcheck.cpp and the
// acceptance gate: one named builder per differentiable primitive, geometry
// and flow op, and loss term. Builders pick inputs that stay clear of the
// handful of genuine non-smooth points (ReLU kinks, |.| at zero, bilinear
// cell boundaries, log at zero) so the central-difference probe measures the
// derivative and not the kink.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "dfp/flow_ops.hpp"
#include "dfp/geometry.hpp"
#include "dfp/losses.hpp"
#include "dfp/ops.hpp"
#include "gradcheck.hpp"

namespace gradsuites {

using dfp::Graph;
using dfp::IntrinsicsBatch;
using dfp::Pad;
using dfp::Rng;
using dfp::Shape;
using dfp::Tensor;
using gradcheck::LossFn;
using gradcheck::MakeInstance;

struct NamedSuite {
    std::string name;
    MakeInstance make;
};

// ---- input constructors ----

// elementwise values with |x| in [lo, hi]: keeps leaky_relu / clamp / |.|
// probes away from their kinks
inline Tensor<double> signed_away_from_zero(Shape shape, Rng& rng, double lo = 0.05,
                                            double hi = 1.5) {
    Tensor<double> t = Tensor<double>::zeros(shape);
    for (double& v : t.values()) v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo, hi);
    return t;
}

// band-limited surface: smooth enough that bilinear resampling behaves
inline Tensor<double> smooth_image(int n, int c, int h, int w, Rng& rng) {
    Tensor<double> t = Tensor<double>::zeros({n, c, h, w});
    double* p = t.data();
    for (int i = 0; i < n * c; ++i) {
        const double ax = rng.uniform(0.15, 0.45), ay = rng.uniform(0.15, 0.45);
        const double ph1 = rng.uniform(0.0, 6.28), ph2 = rng.uniform(0.0, 6.28);
        const double base = rng.uniform(0.3, 0.7);
        const double a1 = rng.uniform(0.10, 0.25), a2 = rng.uniform(0.05, 0.15);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                p[(i * h + y) * w + x] = base + a1 * std::sin(ax * x + ay * y + ph1) +
                                         a2 * std::cos(ax * y - ay * x + ph2);
    }
    return t;
}

// sampling coordinates with fractional part in [0.25, 0.75], strictly inside
// the image: an FD step of 1e-5 cannot cross a bilinear cell boundary
inline Tensor<double> off_lattice_coords(int n, int ho, int wo, int img_h, int img_w, Rng& rng) {
    Tensor<double> t = Tensor<double>::zeros({n, 2, ho, wo});
    double* p = t.data();
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < ho * wo; ++i) {
            p[(s * 2 + 0) * ho * wo + i] = rng.uniform_int(0, img_w - 2) + rng.uniform(0.25, 0.75);
            p[(s * 2 + 1) * ho * wo + i] = rng.uniform_int(0, img_h - 2) + rng.uniform(0.25, 0.75);
        }
    return t;
}

// flow whose target coordinates are off-lattice and interior
inline Tensor<double> off_lattice_flow(int n, int h, int w, Rng& rng) {
    Tensor<double> coords = off_lattice_coords(n, h, w, h, w, rng);
    double* p = coords.data();
    for (int s = 0; s < n; ++s)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                p[((s * 2 + 0) * h + y) * w + x] -= x;
                p[((s * 2 + 1) * h + y) * w + x] -= y;
            }
    return coords;
}

// monotone exponential surfaces: first and second differences bounded away
// from zero everywhere, so the |.| terms in the smoothness loss never sit on
// their kink during an FD probe
inline std::pair<Tensor<double>, Tensor<double>> smoothness_safe_pair(int h, int w, Rng& rng) {
    Tensor<double> depth = Tensor<double>::zeros({1, 1, h, w});
    Tensor<double> img = Tensor<double>::zeros({1, 1, h, w});
    const double bd = rng.uniform(0.18, 0.30), cd = rng.uniform(0.15, 0.25);
    const double bi = rng.uniform(0.08, 0.14), ci = rng.uniform(0.07, 0.12);
    const double ad = rng.uniform(0.3, 0.6), ai = rng.uniform(0.15, 0.3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            depth.data()[y * w + x] = 2.0 + ad * std::exp(bd * x + cd * y);
            img.data()[y * w + x] = 0.4 + ai * std::exp(bi * x + ci * y);
        }
    return {depth, img};
}

inline Tensor<double> small_pose(int n, Rng& rng, double tmax = 0.05, double rmax = 0.02) {
    Tensor<double> t = Tensor<double>::zeros({n, 6});
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < 6; ++i)
            t.data()[s * 6 + i] = rng.uniform(i < 3 ? -tmax : -rmax, i < 3 ? tmax : rmax);
    return t;
}

inline IntrinsicsBatch test_intrinsics(int h, int w) {
    dfp::CameraIntrinsics k;
    k.fx = 0.9 * w;
    k.fy = 0.9 * w;
    k.cx = (w - 1) / 2.0;
    k.cy = (h - 1) / 2.0;
    return {k};
}

// True when every reprojected coordinate keeps a safe distance from the
// bilinear cell boundaries (integers, including the border clamp), so an FD
// step of 1e-5 cannot straddle a kink.
inline bool reprojection_off_kinks(const Tensor<double>& depth, const Tensor<double>& pose,
                                   const IntrinsicsBatch& K) {
    Tensor<double> coords = dfp::project(depth, dfp::pose_to_matrix(pose), K).first;
    for (double u : coords.values())
        if (std::abs(u - std::round(u)) < 1e-3) return false;
    return true;
}

// depth/pose pair for view synthesis, redrawn until the geometry is kink-safe
inline std::pair<Tensor<double>, Tensor<double>> synth_depth_pose(int h, int w,
                                                                  const IntrinsicsBatch& K,
                                                                  Rng& rng) {
    for (;;) {
        Tensor<double> depth = Tensor<double>::uniform({1, 1, h, w}, rng, 2.0, 3.5);
        Tensor<double> pose = small_pose(1, rng, 0.03, 0.01);
        if (reprojection_off_kinks(depth, pose, K)) return {depth, pose};
    }
}

// fixed random weighting of a non-scalar output; plain sums would let
// transposed/mirrored gradients slip through
inline LossFn weighted_sum(std::function<Tensor<double>(std::vector<Tensor<double>>&)> op,
                           Tensor<double> w) {
    return [op = std::move(op), w = std::move(w)](std::vector<Tensor<double>>& in) {
        return dfp::sum(dfp::mul(op(in), w));
    };
}

inline Tensor<double> like(const Tensor<double>& t, Rng& rng) {
    return Tensor<double>::uniform(t.shape(), rng, -1.0, 1.0);
}

// ---- the suites ----

inline std::vector<NamedSuite> all_grad_suites() {
    std::vector<NamedSuite> s;
    auto add = [&](std::string name, MakeInstance make) {
        s.push_back({std::move(name), std::move(make)});
    };

    using In = std::vector<Tensor<double>>;

    add("add", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng), Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::add(i[0], i[1]); }, w), in};
    });
    add("sub", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng), Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::sub(i[0], i[1]); }, w), in};
    });
    add("mul", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng), Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::mul(i[0], i[1]); }, w), in};
    });
    add("scale", [](Rng& rng) {
        In in = {Tensor<double>::randn({3, 5}, rng)};
        Tensor<double> w = like(in[0], rng);
        const double k = rng.uniform(-2.0, 2.0);
        return std::pair{weighted_sum([k](In& i) { return dfp::scale(i[0], k); }, w), in};
    });
    add("add_scalar", [](Rng& rng) {
        In in = {Tensor<double>::randn({3, 5}, rng)};
        Tensor<double> w = like(in[0], rng);
        const double k = rng.uniform(-2.0, 2.0);
        return std::pair{weighted_sum([k](In& i) { return dfp::add_scalar(i[0], k); }, w), in};
    });
    add("leaky_relu", [](Rng& rng) {
        In in = {signed_away_from_zero({2, 3, 4}, rng)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::leaky_relu(i[0], 0.1); }, w), in};
    });
    add("sigmoid", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::sigmoid(i[0]); }, w), in};
    });
    add("log", [](Rng& rng) {
        In in = {Tensor<double>::uniform({2, 3, 4}, rng, 0.2, 3.0)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::log_op(i[0]); }, w), in};
    });
    add("exp", [](Rng& rng) {
        In in = {Tensor<double>::uniform({2, 3, 4}, rng, -2.0, 2.0)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::exp_op(i[0]); }, w), in};
    });
    add("reciprocal", [](Rng& rng) {
        In in = {signed_away_from_zero({2, 3, 4}, rng, 0.3, 2.0)};
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::reciprocal(i[0]); }, w), in};
    });
    add("clamp_min", [](Rng& rng) {
        In in = {signed_away_from_zero({2, 3, 4}, rng)};  // clamp at 0, values off the kink
        Tensor<double> w = like(in[0], rng);
        return std::pair{weighted_sum([](In& i) { return dfp::clamp_min(i[0], 0.0); }, w), in};
    });
    add("sum", [](Rng& rng) {
        In in = {Tensor<double>::randn({4, 5}, rng)};
        return std::pair{LossFn([](In& i) { return dfp::sum(i[0]); }), in};
    });
    add("mean", [](Rng& rng) {
        In in = {Tensor<double>::randn({4, 5}, rng)};
        return std::pair{LossFn([](In& i) { return dfp::mean(i[0]); }), in};
    });
    add("masked_mean", [](Rng& rng) {
        In in = {Tensor<double>::randn({4, 5}, rng)};
        Tensor<double> mask = Tensor<double>::zeros({4, 5});
        for (double& v : mask.values()) v = rng.uniform() < 0.6 ? 1.0 : 0.0;
        mask.data()[0] = 1.0;  // never empty
        return std::pair{LossFn([mask](In& i) { return dfp::masked_mean(i[0], mask); }), in};
    });
    add("concat_channels", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 1, 3, 4}, rng), Tensor<double>::randn({2, 2, 3, 4}, rng)};
        Tensor<double> w = Tensor<double>::uniform({2, 3, 3, 4}, rng, -1.0, 1.0);
        return std::pair{
            weighted_sum([](In& i) { return dfp::concat_channels<double>({i[0], i[1]}); }, w), in};
    });
    add("narrow_batch", [](Rng& rng) {
        In in = {Tensor<double>::randn({4, 2, 3, 3}, rng)};
        Tensor<double> w = Tensor<double>::uniform({2, 2, 3, 3}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::narrow_batch(i[0], 1, 2); }, w), in};
    });
    add("stack_batch", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 2, 3, 3}, rng), Tensor<double>::randn({2, 2, 3, 3}, rng)};
        Tensor<double> w = Tensor<double>::uniform({4, 2, 3, 3}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::stack_batch(i[0], i[1]); }, w), in};
    });
    add("reshape", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> w = Tensor<double>::uniform({6, 4}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::reshape(i[0], {6, 4}); }, w), in};
    });
    add("conv2d_same", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 2, 5, 6}, rng), Tensor<double>::randn({3, 2, 3, 3}, rng),
                 Tensor<double>::randn({3}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 3, 5, 6}, rng, -1.0, 1.0);
        return std::pair{
            weighted_sum([](In& i) { return dfp::conv2d(i[0], i[1], i[2], 1, Pad::same); }, w),
            in};
    });
    add("conv2d_valid_stride2", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 2, 6, 7}, rng), Tensor<double>::randn({2, 2, 3, 3}, rng),
                 Tensor<double>::randn({2}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, 2, 3}, rng, -1.0, 1.0);
        return std::pair{
            weighted_sum([](In& i) { return dfp::conv2d(i[0], i[1], i[2], 2, Pad::valid); }, w),
            in};
    });
    add("linear", [](Rng& rng) {
        In in = {Tensor<double>::randn({3, 4}, rng), Tensor<double>::randn({2, 4}, rng),
                 Tensor<double>::randn({2}, rng)};
        Tensor<double> w = Tensor<double>::uniform({3, 2}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::linear(i[0], i[1], i[2]); }, w), in};
    });
    add("group_norm", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 4, 3, 3}, rng), Tensor<double>::randn({4}, rng),
                 Tensor<double>::randn({4}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 4, 3, 3}, rng, -1.0, 1.0);
        return std::pair{
            weighted_sum([](In& i) { return dfp::group_norm(i[0], 2, i[1], i[2], 1e-5); }, w), in};
    });
    add("spatial_dropout", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 6, 3, 3}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 6, 3, 3}, rng, -1.0, 1.0);
        const uint64_t seed = rng.next_u64();  // same pattern for every FD probe
        return std::pair{
            weighted_sum([seed](In& i) { return dfp::spatial_dropout(i[0], 0.5, true, seed); }, w),
            in};
    });
    add("upsample_bilinear2x", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 2, 3, 4}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, 6, 8}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::upsample_bilinear2x(i[0]); }, w), in};
    });
    add("avg_pool2x", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 2, 4, 6}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, 2, 3}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::avg_pool2x(i[0]); }, w), in};
    });
    add("global_avg_pool", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4, 5}, rng)};
        Tensor<double> w = Tensor<double>::uniform({2, 3}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::global_avg_pool(i[0]); }, w), in};
    });
    add("bilinear_sample", [](Rng& rng) {
        const int H = 5, W = 6;
        In in = {smooth_image(1, 2, H, W, rng), off_lattice_coords(1, 3, 4, H, W, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, 3, 4}, rng, -1.0, 1.0);
        return std::pair{
            weighted_sum([](In& i) { return dfp::bilinear_sample(i[0], i[1]).first; }, w), in};
    });
    add("cost_volume", [](Rng& rng) {
        const int d = 1 + (rng.uniform() < 0.5);
        In in = {Tensor<double>::randn({1, 3, 5, 5}, rng), Tensor<double>::randn({1, 3, 5, 5}, rng)};
        const int side = 2 * d + 1;
        Tensor<double> w = Tensor<double>::uniform({1, side * side, 5, 5}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([d](In& i) { return dfp::cost_volume(i[0], i[1], d); }, w),
                         in};
    });
    add("flow_warp", [](Rng& rng) {
        const int H = 5, W = 6;
        In in = {smooth_image(1, 2, H, W, rng), off_lattice_flow(1, H, W, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, H, W}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::flow_warp(i[0], i[1]).first; }, w),
                         in};
    });
    add("upsample_flow2x", [](Rng& rng) {
        In in = {Tensor<double>::randn({1, 2, 3, 4}, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, 6, 8}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::upsample_flow2x(i[0]); }, w), in};
    });
    add("pose_to_matrix", [](Rng& rng) {
        In in = {Tensor<double>::uniform({2, 6}, rng, -0.5, 0.5)};
        Tensor<double> w = Tensor<double>::uniform({2, 12}, rng, -1.0, 1.0);
        return std::pair{weighted_sum([](In& i) { return dfp::pose_to_matrix(i[0]); }, w), in};
    });
    add("project", [](Rng& rng) {
        const int H = 4, W = 6;
        const IntrinsicsBatch K = test_intrinsics(H, W);
        In in = {Tensor<double>::uniform({1, 1, H, W}, rng, 1.5, 4.0), small_pose(1, rng)};
        Tensor<double> w = Tensor<double>::uniform({1, 2, H, W}, rng, -1.0, 1.0);
        return std::pair{weighted_sum(
                             [K](In& i) {
                                 return dfp::project(i[0], dfp::pose_to_matrix(i[1]), K).first;
                             },
                             w),
                         in};
    });
    add("synthesize_view", [](Rng& rng) {
        const int H = 6, W = 8;
        const IntrinsicsBatch K = test_intrinsics(H, W);
        auto [depth, pose] = synth_depth_pose(H, W, K, rng);
        In in = {smooth_image(1, 1, H, W, rng), depth, pose};
        Tensor<double> w = Tensor<double>::uniform({1, 1, H, W}, rng, -1.0, 1.0);
        return std::pair{weighted_sum(
                             [K](In& i) {
                                 return dfp::synthesize_view(i[0], i[1], i[2], K).first;
                             },
                             w),
                         in};
    });
    add("charbonnier", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng)};
        const dfp::CharbonnierParams prm;
        return std::pair{LossFn([prm](In& i) { return dfp::charbonnier(i[0], prm); }), in};
    });
    add("charbonnier_masked", [](Rng& rng) {
        In in = {Tensor<double>::randn({2, 3, 4}, rng)};
        Tensor<double> mask = Tensor<double>::zeros({2, 3, 4});
        for (double& v : mask.values()) v = rng.uniform() < 0.7 ? 1.0 : 0.0;
        mask.data()[0] = 1.0;
        const dfp::CharbonnierParams prm;
        return std::pair{LossFn([prm, mask](In& i) { return dfp::charbonnier(i[0], prm, mask); }),
                         in};
    });
    add("view_synthesis_loss", [](Rng& rng) {
        const int H = 6, W = 8;
        const IntrinsicsBatch K = test_intrinsics(H, W);
        auto [depth, pose] = synth_depth_pose(H, W, K, rng);
        In in = {smooth_image(1, 1, H, W, rng), smooth_image(1, 1, H, W, rng), depth, pose};
        const dfp::CharbonnierParams prm;
        return std::pair{LossFn([K, prm](In& i) {
                             return dfp::view_synthesis_loss(i[0], i[1], i[2], i[3], K, prm);
                         }),
                         in};
    });
    add("flow_reconstruction_loss", [](Rng& rng) {
        const int H = 5, W = 6;
        In in = {smooth_image(1, 1, H, W, rng), smooth_image(1, 1, H, W, rng),
                 off_lattice_flow(1, H, W, rng),
                 Tensor<double>::uniform({1, 1, H, W}, rng, 0.3, 0.9)};
        const dfp::CharbonnierParams prm;
        return std::pair{LossFn([prm](In& i) {
                             return dfp::flow_reconstruction_loss(i[0], i[1], i[2], i[3], prm);
                         }),
                         in};
    });
    add("depth_smoothness_loss", [](Rng& rng) {
        auto [depth, img] = smoothness_safe_pair(5, 6, rng);
        In in = {depth, img};
        return std::pair{LossFn([](In& i) { return dfp::depth_smoothness_loss(i[0], i[1]); }), in};
    });
    add("pose_consistency_loss", [](Rng& rng) {
        In in = {Tensor<double>::uniform({1, 6}, rng, -0.3, 0.3),
                 Tensor<double>::uniform({1, 6}, rng, -0.3, 0.3)};
        const dfp::CharbonnierParams prm;
        return std::pair{
            LossFn([prm](In& i) { return dfp::pose_consistency_loss(i[0], i[1], prm); }), in};
    });
    add("composite_loss", [](Rng& rng) {
        In in = {Tensor<double>::randn({3, 4}, rng), Tensor<double>::randn({3, 4}, rng),
                 Tensor<double>::randn({3, 4}, rng), Tensor<double>::randn({3, 4}, rng)};
        const dfp::CharbonnierParams prm;
        dfp::LossWeights wts;
        wts.lambda_vs = rng.uniform(0.5, 1.5);
        wts.lambda_ir = rng.uniform(0.5, 1.5);
        wts.lambda_sd = rng.uniform(0.5, 1.5);
        wts.lambda_p = rng.uniform(0.5, 1.5);
        return std::pair{LossFn([prm, wts](In& i) {
                             dfp::LossTerms<double> terms;
                             terms.vs = dfp::charbonnier(i[0], prm);
                             terms.ir = dfp::charbonnier(i[1], prm);
                             terms.sd = dfp::charbonnier(i[2], prm);
                             terms.p = dfp::charbonnier(i[3], prm);
                             return dfp::composite_loss(terms, wts, 0.75).first;
                         }),
                         in};
    });
    return s;
}

}  // namespace gradsuites
