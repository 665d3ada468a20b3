#include "dfp/model.hpp"

#include <cmath>

#include "dfp/flow_ops.hpp"

namespace dfp {

void DFPNetConfig::validate() const {
    DFP_CHECK(levels >= 2, "model: need at least 2 pyramid levels, got ", levels);
    DFP_CHECK(static_cast<int>(channels_per_level.size()) == levels,
              "model: channels_per_level has ", channels_per_level.size(), " entries for ",
              levels, " levels");
    for (int c : channels_per_level)
        DFP_CHECK(c >= 1, "model: channel counts must be positive, got ", c);
    const int div = 1 << (levels - 1);
    DFP_CHECK(input_height % div == 0 && input_width % div == 0, "model: input ",
              input_height, "x", input_width, " not divisible by 2^(levels-1) = ", div);
    DFP_CHECK(max_disp >= 1, "model: max_disp must be >= 1, got ", max_disp);
    DFP_CHECK(dropout_rate >= 0.0 && dropout_rate < 1.0, "model: dropout_rate must be in [0,1), got ",
              dropout_rate);
    DFP_CHECK(min_depth > 0 && min_depth < max_depth, "model: need 0 < min_depth < max_depth, got ",
              min_depth, " .. ", max_depth);
}

namespace {

int norm_groups(int channels) {
    int g = channels < 8 ? channels : 8;
    while (channels % g != 0) --g;
    return g;
}

// [n,2,h,w] pixel coordinates normalized to [-1,1]; constant, no gradient
Tensor<float> coord_channels(int n, int h, int w) {
    Tensor<float> t = Tensor<float>::zeros({n, 2, h, w});
    float* d = t.data();
    for (int b = 0; b < n; ++b)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                d[((b * 2 + 0) * h + y) * w + x] = w > 1 ? 2.0f * x / (w - 1) - 1.0f : 0.0f;
                d[((b * 2 + 1) * h + y) * w + x] = h > 1 ? 2.0f * y / (h - 1) - 1.0f : 0.0f;
            }
    return t;
}

}  // namespace

Tensor<float> ConvBlock::apply(const Tensor<float>& x) const {
    Tensor<float> y = conv2d(x, w, b, stride, Pad::same);
    if (norm_act) {
        y = group_norm(y, groups, gn_gamma, gn_beta, 1e-5f);
        y = leaky_relu(y, 0.1f);
    }
    return y;
}

Tensor<float> DFPNet::register_param(const std::string& name, Shape shape, float init_std,
                                     Rng& rng) {
    Tensor<float> t = init_std > 0 ? Tensor<float>::randn(shape, rng, init_std)
                                   : Tensor<float>::zeros(shape);
    t.set_requires_grad(true);
    params_.emplace_back(name, t);
    return t;
}

ConvBlock DFPNet::make_conv(const std::string& name, int cin, int cout, int stride,
                            bool norm_act, Rng& rng) {
    ConvBlock cb;
    const float std = std::sqrt(2.0f / (9.0f * cin));  // He, fan-in, 3x3
    cb.w = register_param(name + ".w", {cout, cin, 3, 3}, std, rng);
    cb.b = register_param(name + ".b", {cout}, 0.0f, rng);
    cb.stride = stride;
    cb.norm_act = norm_act;
    if (norm_act) {
        cb.groups = norm_groups(cout);
        cb.gn_gamma = register_param(name + ".gn.g", {cout}, 0.0f, rng);
        float* g = cb.gn_gamma.data();
        for (int i = 0; i < cout; ++i) g[i] = 1.0f;
        cb.gn_beta = register_param(name + ".gn.b", {cout}, 0.0f, rng);
    }
    return cb;
}

DFPNet::DFPNet(const DFPNetConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed_mix(init_seed, 0x6d6f64656cULL));  // "model"
    const int L = cfg_.levels;
    const auto& ch = cfg_.channels_per_level;

    enc_.resize(L);
    for (int l = 0; l < L; ++l) {
        const int cin = l == 0 ? 1 : ch[l - 1];
        const std::string base = "enc.l" + std::to_string(l);
        enc_[l].push_back(make_conv(base + ".c0", cin, ch[l], l == 0 ? 1 : 2, true, rng));
        enc_[l].push_back(make_conv(base + ".c1", ch[l], ch[l], 1, true, rng));
        enc_[l].push_back(make_conv(base + ".c2", ch[l], ch[l], 1, true, rng));
    }

    dd_.resize(L);
    for (int l = L - 1; l >= 0; --l) {
        const int h = cfg_.hidden_width(l);
        const int cin = ch[l] + (l == L - 1 ? 0 : 1);  // + upsampled prev disparity
        const std::string base = "dd.l" + std::to_string(l);
        dd_[l].push_back(make_conv(base + ".c0", cin, h, 1, true, rng));
        dd_[l].push_back(make_conv(base + ".c1", h, h, 1, true, rng));
        dd_[l].push_back(make_conv(base + ".head", h, 1, 1, false, rng));
    }

    fd_compress_.resize(L);
    fd_.resize(L);
    const int cv_ch = (2 * cfg_.max_disp + 1) * (2 * cfg_.max_disp + 1);
    for (int l = L - 1; l >= 1; --l) {
        const int h = cfg_.hidden_width(l);
        const std::string base = "fd.l" + std::to_string(l);
        {  // 1x1 compression of the cost volume
            ConvBlock cb;
            const float std = std::sqrt(2.0f / cv_ch);
            cb.w = register_param(base + ".cv.w", {DFPNetConfig::kCostChannels, cv_ch, 1, 1},
                                  std, rng);
            cb.b = register_param(base + ".cv.b", {DFPNetConfig::kCostChannels}, 0.0f, rng);
            cb.norm_act = false;
            fd_compress_[l] = cb;
        }
        const int cin = ch[l] + DFPNetConfig::kCostChannels + 2;  // feat + cost + flow
        fd_[l].push_back(make_conv(base + ".c0", cin, h, 1, true, rng));
        fd_[l].push_back(make_conv(base + ".c1", h, h, 1, true, rng));
        fd_[l].push_back(make_conv(base + ".head", h, 2, 1, false, rng));
    }
    fd_occ_ = make_conv("fd.occ", cfg_.hidden_width(1), 1, 1, false, rng);

    const int pose_levels = std::min(DFPNetConfig::kPoseLevels, L - 1);
    pd_.resize(pose_levels);
    pd_fc_.resize(pose_levels);
    for (int i = 0; i < pose_levels; ++i) {
        const int l = pose_levels - i;  // mid-pyramid, coarse to fine
        const int h = DFPNetConfig::kPoseHidden;
        const std::string base = "pd.l" + std::to_string(l);
        pd_[i].push_back(make_conv(base + ".c0", cv_ch + 2, h, 2, true, rng));
        pd_[i].push_back(make_conv(base + ".c1", h, h, 1, true, rng));
        // zero init: the network starts out predicting identity motion
        pd_fc_[i].first = register_param(base + ".fc.w", {6, h}, 0.0f, rng);
        pd_fc_[i].second = register_param(base + ".fc.b", {6}, 0.0f, rng);
    }
}

Tensor<float> DFPNet::parameter(const std::string& name) const {
    for (const auto& [n, t] : params_)
        if (n == name) return t;
    fail("model: no parameter named '", name, "'");
}

int64_t DFPNet::parameter_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
}

std::pair<FeaturePyramid, FeaturePyramid> DFPNet::encode(const Tensor<float>& img_t,
                                                         const Tensor<float>& img_s,
                                                         bool training, uint64_t seed) const {
    const Shape want = {img_t.shape().empty() ? 0 : img_t.shape()[0], 1, cfg_.input_height,
                        cfg_.input_width};
    DFP_CHECK(img_t.shape() == want && img_s.shape() == want,
              "encode: expected two [N,1,", cfg_.input_height, ",", cfg_.input_width,
              "] frames, got ", shape_str(img_t.shape()), " and ", shape_str(img_s.shape()));
    const int N = img_t.shape()[0];
    Tensor<float> x = stack_batch(img_t, img_s);  // frames share the encoder
    FeaturePyramid pt, ps;
    for (int l = 0; l < cfg_.levels; ++l) {
        for (const ConvBlock& cb : enc_[l]) x = cb.apply(x);
        if (cfg_.dropout_rate > 0)
            x = spatial_dropout(x, cfg_.dropout_rate, training, seed_mix(seed, 0xd0, l));
        pt.levels.push_back(narrow_batch(x, 0, N));
        ps.levels.push_back(narrow_batch(x, N, N));
    }
    return {std::move(pt), std::move(ps)};
}

std::vector<Tensor<float>> DFPNet::decode_depth(const FeaturePyramid& pyr_t) const {
    const int L = cfg_.levels;
    DFP_CHECK(static_cast<int>(pyr_t.levels.size()) == L, "decode_depth: pyramid has ",
              pyr_t.levels.size(), " levels, config wants ", L);
    std::vector<Tensor<float>> depth(L);
    Tensor<float> disp_up;  // previous level's sigmoid output, upsampled
    const float inv_max = static_cast<float>(1.0 / cfg_.max_depth);
    const float log_span = std::log(static_cast<float>(cfg_.max_depth / cfg_.min_depth));
    for (int l = L - 1; l >= 0; --l) {
        Tensor<float> x = l == L - 1 ? pyr_t.levels[l]
                                     : concat_channels<float>({pyr_t.levels[l], disp_up});
        for (const ConvBlock& cb : dd_[l]) x = cb.apply(x);
        // The 0.25 logit gain slows this head down. Early training wants more
        // parallax than the (still near-identity) pose provides, and the
        // depth/translation ambiguity lets disparity supply it; if the depth
        // head outruns the pose head it saturates the sigmoid at the near
        // clamp and the map goes irrecoverably flat. Adam steps weights at
        // ~lr regardless of downstream gain, so the gain sets output speed.
        Tensor<float> dn = sigmoid(scale(x, 0.25f));
        // disparity in [1/max_depth, 1/min_depth], interpolated in log space:
        // zero logits land on the geometric mean of the depth range, leaving
        // symmetric multiplicative headroom instead of starting one octave
        // off the near clamp (where the sigmoid saturates and learning stalls).
        Tensor<float> disparity = scale(exp_op(scale(dn, log_span)), inv_max);
        depth[l] = reciprocal(disparity);
        if (l > 0) disp_up = upsample_bilinear2x(dn);
    }
    return depth;
}

DFPNet::FlowDecode DFPNet::decode_flow(const FeaturePyramid& pyr_t,
                                       const FeaturePyramid& pyr_s) const {
    const int L = cfg_.levels;
    DFP_CHECK(static_cast<int>(pyr_t.levels.size()) == L &&
                  static_cast<int>(pyr_s.levels.size()) == L,
              "decode_flow: pyramid level count mismatch");
    FlowDecode out;
    out.flow.resize(L);
    out.occ.resize(L);
    Tensor<float> occ_hidden;
    for (int l = L - 1; l >= 1; --l) {
        const Tensor<float>& ft = pyr_t.levels[l];
        const Shape& fs_shape = ft.shape();
        Tensor<float> flow_up;
        Tensor<float> warped_s;
        if (l == L - 1) {
            flow_up = Tensor<float>::zeros({fs_shape[0], 2, fs_shape[2], fs_shape[3]});
            warped_s = pyr_s.levels[l];
        } else {
            flow_up = upsample_flow2x(out.flow[l + 1]);
            warped_s = flow_warp(pyr_s.levels[l], flow_up).first;
        }
        Tensor<float> cv = cost_volume(ft, warped_s, cfg_.max_disp);
        Tensor<float> cvc = leaky_relu(
            conv2d(cv, fd_compress_[l].w, fd_compress_[l].b, 1, Pad::same), 0.1f);
        Tensor<float> x = concat_channels<float>({ft, cvc, flow_up});
        x = fd_[l][0].apply(x);
        x = fd_[l][1].apply(x);
        Tensor<float> delta = fd_[l][2].apply(x);
        out.flow[l] = add(flow_up, delta);
        if (l == 1) occ_hidden = x;
    }
    out.flow[0] = upsample_flow2x(out.flow[1]);
    out.occ[1] = sigmoid(fd_occ_.apply(occ_hidden));
    out.occ[0] = upsample_bilinear2x(out.occ[1]);
    for (int l = 2; l < L; ++l) out.occ[l] = avg_pool2x(out.occ[l - 1]);
    return out;
}

Tensor<float> DFPNet::decode_pose(const FeaturePyramid& pyr_t,
                                  const FeaturePyramid& pyr_s) const {
    const int n_pose = static_cast<int>(pd_.size());
    Tensor<float> acc;
    for (int i = 0; i < n_pose; ++i) {
        const int l = n_pose - i;
        // Correlate against the other frame instead of concatenating raw
        // features: at desk-scale motion the per-level feature maps shift by
        // around a pixel, which a cost volume turns into an explicit, trainable
        // displacement signal. The coordinate channels let the pooled readout
        // resolve position-dependent flow patterns (forward translation shows
        // up as radial expansion, which is invisible to a translation-
        // equivariant stack after global pooling).
        Tensor<float> cv = cost_volume(pyr_t.levels[l], pyr_s.levels[l], cfg_.max_disp);
        const Shape& s = cv.shape();
        Tensor<float> x = concat_channels<float>({cv, coord_channels(s[0], s[2], s[3])});
        x = pd_[i][0].apply(x);
        x = pd_[i][1].apply(x);
        Tensor<float> delta = linear(global_avg_pool(x), pd_fc_[i].first, pd_fc_[i].second);
        acc = acc.defined() ? add(acc, delta) : delta;
    }
    // Output scale trades warp stability right after init against how far
    // the zero-initialized head can move within a short training budget. It
    // must be generous: the pose head has to reach the true translation scale
    // before the depth head saturates trying to compensate for it.
    return scale(acc, 0.3f);
}

DFPOutput DFPNet::forward(const Tensor<float>& img_t, const Tensor<float>& img_s,
                          bool training, uint64_t seed) const {
    auto [pt, ps] = encode(img_t, img_s, training, seed);
    DFPOutput out;
    out.depth = decode_depth(pt);
    auto fd = decode_flow(pt, ps);
    out.flow = std::move(fd.flow);
    out.occ = std::move(fd.occ);
    out.pose = decode_pose(pt, ps);
    return out;
}

DFPNet::PairOutput DFPNet::forward_pair(const Tensor<float>& img_t, const Tensor<float>& img_s,
                                        bool training, uint64_t seed) const {
    auto [pt, ps] = encode(img_t, img_s, training, seed);
    const int N = img_t.shape()[0];
    FeaturePyramid a, b;  // a: reference frames [t;s], b: the opposite frames
    for (int l = 0; l < cfg_.levels; ++l) {
        a.levels.push_back(stack_batch(pt.levels[l], ps.levels[l]));
        b.levels.push_back(stack_batch(ps.levels[l], pt.levels[l]));
    }
    std::vector<Tensor<float>> depth = decode_depth(a);
    FlowDecode fl = decode_flow(a, b);
    Tensor<float> pose = decode_pose(a, b);
    PairOutput out;
    for (int l = 0; l < cfg_.levels; ++l) {
        out.fwd.depth.push_back(narrow_batch(depth[l], 0, N));
        out.bwd.depth.push_back(narrow_batch(depth[l], N, N));
        out.fwd.flow.push_back(narrow_batch(fl.flow[l], 0, N));
        out.bwd.flow.push_back(narrow_batch(fl.flow[l], N, N));
        out.fwd.occ.push_back(narrow_batch(fl.occ[l], 0, N));
        out.bwd.occ.push_back(narrow_batch(fl.occ[l], N, N));
    }
    out.fwd.pose = narrow_batch(pose, 0, N);
    out.bwd.pose = narrow_batch(pose, N, N);
    return out;
}

}  // namespace dfp
