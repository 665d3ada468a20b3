#include "dfp/losses.hpp"

#include <cmath>

namespace dfp {

template <typename T>
Tensor<T> charbonnier(const Tensor<T>& residual, const CharbonnierParams& params,
                      const Tensor<T>& mask) {
    params.validate();
    if (mask.defined())
        DFP_CHECK(mask.shape() == residual.shape(), "charbonnier: mask shape ",
                  shape_str(mask.shape()), " != residual ", shape_str(residual.shape()));
    const T alpha = static_cast<T>(params.alpha);
    const T beta = static_cast<T>(params.beta);
    const T eps = static_cast<T>(params.eps);
    const T* pr = residual.data();
    const T* pm = mask.defined() ? mask.data() : nullptr;
    const int64_t n = residual.numel();
    T acc = T(0), cnt = T(0);
    for (int64_t i = 0; i < n; ++i) {
        if (pm && pm[i] == T(0)) continue;
        acc += std::pow(beta * pr[i] * pr[i] + eps, alpha);
        cnt += T(1);
    }
    const T denom = cnt > T(0) ? cnt : T(1);
    Tensor<T> out = Tensor<T>::scalar(acc / denom);
    const bool has_mask = mask.defined();
    if (tracing<T>({&residual})) {
        std::vector<Tensor<T>> inputs = {residual};
        if (has_mask) inputs.push_back(mask);
        record<T>("charbonnier", inputs, out,
                  [residual = residual, mask = mask, out, alpha, beta, eps, denom,
                   has_mask]() mutable {
                      const T g = out.grad()[0] / denom;
                      const T* pr = residual.values().data();
                      const T* pm = has_mask ? mask.values().data() : nullptr;
                      T* gr = residual.grad().data();
                      for (int64_t i = 0; i < residual.numel(); ++i) {
                          if (pm && pm[i] == T(0)) continue;
                          const T base = beta * pr[i] * pr[i] + eps;
                          gr[i] += g * alpha * T(2) * beta * pr[i] *
                                   std::pow(base, alpha - T(1));
                      }
                  });
    }
    return out;
}

template <typename T>
Tensor<T> view_synthesis_loss(const Tensor<T>& I_t, const Tensor<T>& I_s,
                              const Tensor<T>& depth, const Tensor<T>& pose6,
                              const IntrinsicsBatch& K, const CharbonnierParams& params) {
    DFP_CHECK(I_t.shape() == I_s.shape(), "view_synthesis_loss: image shapes differ: ",
              shape_str(I_t.shape()), " vs ", shape_str(I_s.shape()));
    auto [warped, valid] = synthesize_view(I_s, depth, pose6, K);
    return charbonnier(sub(I_t, warped), params, valid);
}

template <typename T>
Tensor<T> flow_reconstruction_loss(const Tensor<T>& I_s, const Tensor<T>& I_t,
                                   const Tensor<T>& flow, const Tensor<T>& occ,
                                   const CharbonnierParams& params) {
    DFP_CHECK(I_s.shape() == I_t.shape() && occ.shape() == I_t.shape(),
              "flow_reconstruction_loss: shape mismatch");
    auto [warped, valid] = flow_warp(I_s, flow);
    Tensor<T> gated = mul(occ, sub(I_t, warped));
    Tensor<T> data = charbonnier(gated, params, valid);
    Tensor<T> reg = scale(mean(log_op(clamp_min(occ, T(1e-6)))), T(-0.1));
    return add(data, reg);
}

template <typename T>
Tensor<T> depth_smoothness_loss(const Tensor<T>& depth, const Tensor<T>& image) {
    const Shape& s = depth.shape();
    DFP_CHECK(s.size() == 4 && s[1] == 1, "depth_smoothness_loss: depth must be [N,1,H,W], got ",
              shape_str(s));
    DFP_CHECK(image.shape() == s, "depth_smoothness_loss: image shape ",
              shape_str(image.shape()), " != depth ", shape_str(s));
    const int N = s[0], H = s[2], W = s[3];
    DFP_CHECK(H >= 3 && W >= 3, "depth_smoothness_loss: spatial dims must be >= 3, got ",
              shape_str(s));
    const int64_t plane = int64_t(H) * W;
    const int64_t cnt = int64_t(N) * (H - 2) * (W - 2);
    const T* pd = depth.data();
    const T* pi = image.data();
    T acc = T(0);
    for (int n = 0; n < N; ++n) {
        const T* dp = pd + n * plane;
        const T* ip = pi + n * plane;
        for (int y = 1; y < H - 1; ++y) {
            for (int x = 1; x < W - 1; ++x) {
                const int64_t i = int64_t(y) * W + x;
                const T d2x = dp[i + 1] - T(2) * dp[i] + dp[i - 1];
                const T d2y = dp[i + W] - T(2) * dp[i] + dp[i - W];
                const T dxi = (ip[i + 1] - ip[i - 1]) * T(0.5);
                const T dyi = (ip[i + W] - ip[i - W]) * T(0.5);
                acc += std::abs(d2x) * std::exp(T(-10) * std::abs(dxi)) +
                       std::abs(d2y) * std::exp(T(-10) * std::abs(dyi));
            }
        }
    }
    Tensor<T> out = Tensor<T>::scalar(acc / (T(2) * static_cast<T>(cnt)));
    if (tracing<T>({&depth, &image})) {
        record<T>("depth_smoothness", {depth, image}, out,
                  [depth = depth, image = image, out, N, H, W, plane, cnt]() mutable {
                      const T g = out.grad()[0] / (T(2) * static_cast<T>(cnt));
                      const T* pd = depth.values().data();
                      const T* pi = image.values().data();
                      T* gd = depth.grad().data();
                      T* gi = image.grad().data();
                      const bool need_d = depth.requires_grad();
                      const bool need_i = image.requires_grad();
                      auto sgn = [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); };
                      for (int n = 0; n < N; ++n) {
                          const T* dp = pd + n * plane;
                          const T* ip = pi + n * plane;
                          T* gdp = gd + n * plane;
                          T* gip = gi + n * plane;
                          for (int y = 1; y < H - 1; ++y) {
                              for (int x = 1; x < W - 1; ++x) {
                                  const int64_t i = int64_t(y) * W + x;
                                  const T d2x = dp[i + 1] - T(2) * dp[i] + dp[i - 1];
                                  const T d2y = dp[i + W] - T(2) * dp[i] + dp[i - W];
                                  const T dxi = (ip[i + 1] - ip[i - 1]) * T(0.5);
                                  const T dyi = (ip[i + W] - ip[i - W]) * T(0.5);
                                  const T wx = std::exp(T(-10) * std::abs(dxi));
                                  const T wy = std::exp(T(-10) * std::abs(dyi));
                                  if (need_d) {
                                      const T cx = g * wx * sgn(d2x);
                                      gdp[i + 1] += cx;
                                      gdp[i] -= T(2) * cx;
                                      gdp[i - 1] += cx;
                                      const T cy = g * wy * sgn(d2y);
                                      gdp[i + W] += cy;
                                      gdp[i] -= T(2) * cy;
                                      gdp[i - W] += cy;
                                  }
                                  if (need_i) {
                                      const T ex = g * std::abs(d2x) * wx * T(-10) * sgn(dxi) *
                                                   T(0.5);
                                      gip[i + 1] += ex;
                                      gip[i - 1] -= ex;
                                      const T ey = g * std::abs(d2y) * wy * T(-10) * sgn(dyi) *
                                                   T(0.5);
                                      gip[i + W] += ey;
                                      gip[i - W] -= ey;
                                  }
                              }
                          }
                      }
                  });
    }
    return out;
}

namespace {

// error matrix E = pose(f)*pose(b) - I4 for one sample, plus its factors
template <typename T>
void pose_product_error(const T* f, const T* b, Mat3& Ra, Mat3& Rb, Vec3& ta, Vec3& tb,
                        double e[16]) {
    ta = {double(f[0]), double(f[1]), double(f[2])};
    tb = {double(b[0]), double(b[1]), double(b[2])};
    Ra = rotation_from_axis_angle({double(f[3]), double(f[4]), double(f[5])});
    Rb = rotation_from_axis_angle({double(b[3]), double(b[4]), double(b[5])});
    const Mat3 Rab = Ra * Rb;
    const Vec3 tab = Ra * tb + ta;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) e[i * 4 + j] = Rab(i, j) - (i == j ? 1.0 : 0.0);
        e[i * 4 + 3] = tab[i];
    }
    e[12] = e[13] = e[14] = 0.0;
    e[15] = 0.0;
}

}  // namespace

template <typename T>
Tensor<T> pose_consistency_loss(const Tensor<T>& fwd, const Tensor<T>& bwd,
                                const CharbonnierParams& params) {
    params.validate();
    const Shape& s = fwd.shape();
    DFP_CHECK(s.size() == 2 && s[1] == 6 && bwd.shape() == s,
              "pose_consistency_loss: expected matching [N,6], got ", shape_str(s), " and ",
              shape_str(bwd.shape()));
    const int N = s[0];
    const double alpha = params.alpha, beta = params.beta, eps = params.eps;
    const T* pf = fwd.data();
    const T* pb = bwd.data();

    double acc = 0;
    for (int n = 0; n < N; ++n) {
        Mat3 Ra, Rb;
        Vec3 ta, tb;
        double e[16];
        pose_product_error(pf + n * 6, pb + n * 6, Ra, Rb, ta, tb, e);
        for (double v : e) acc += std::pow(beta * v * v + eps, alpha);
    }
    Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc / (16.0 * N)));
    if (tracing<T>({&fwd, &bwd})) {
        record<T>("pose_consistency", {fwd, bwd}, out,
                  [fwd = fwd, bwd = bwd, out, N, alpha, beta, eps]() mutable {
                      const double g = double(out.grad()[0]) / (16.0 * N);
                      const T* pf = fwd.values().data();
                      const T* pb = bwd.values().data();
                      T* gf = fwd.grad().data();
                      T* gb = bwd.grad().data();
                      for (int n = 0; n < N; ++n) {
                          Mat3 Ra, Rb;
                          Vec3 ta, tb;
                          double e[16];
                          pose_product_error(pf + n * 6, pb + n * 6, Ra, Rb, ta, tb, e);
                          double ge[16];
                          for (int i = 0; i < 16; ++i)
                              ge[i] = g * alpha * 2.0 * beta * e[i] *
                                      std::pow(beta * e[i] * e[i] + eps, alpha - 1.0);
                          // split the top 3x4 of dL/dM into rotation and translation parts
                          Mat3 gR;  // dL/d(Ra*Rb)
                          Vec3 gt;  // dL/d(Ra*tb + ta)
                          for (int i = 0; i < 3; ++i) {
                              for (int j = 0; j < 3; ++j) gR(i, j) = ge[i * 4 + j];
                          }
                          gt = {ge[3], ge[7], ge[11]};
                          // dL/dta = gt; dL/dtb = Ra^T gt
                          // dL/dRa = gR Rb^T + gt tb^T; dL/dRb = Ra^T gR
                          const Mat3 gRa_rot = gR * Rb.transposed();
                          Mat3 gRa = gRa_rot;
                          for (int i = 0; i < 3; ++i)
                              for (int j = 0; j < 3; ++j) gRa(i, j) += gt[i] * tb[j];
                          const Mat3 gRb = Ra.transposed() * gR;
                          const Vec3 gtb = Ra.transposed() * gt;
                          const T* f = pf + n * 6;
                          const T* b = pb + n * 6;
                          const auto jf = rotation_jacobian(
                              {double(f[3]), double(f[4]), double(f[5])});
                          const auto jb = rotation_jacobian(
                              {double(b[3]), double(b[4]), double(b[5])});
                          for (int i = 0; i < 3; ++i) {
                              gf[n * 6 + i] += static_cast<T>(gt[i]);
                              gb[n * 6 + i] += static_cast<T>(gtb[i]);
                          }
                          for (int k = 0; k < 3; ++k) {
                              double af = 0, ab = 0;
                              for (int i = 0; i < 3; ++i)
                                  for (int j = 0; j < 3; ++j) {
                                      af += gRa(i, j) * jf[k](i, j);
                                      ab += gRb(i, j) * jb[k](i, j);
                                  }
                              gf[n * 6 + 3 + k] += static_cast<T>(af);
                              gb[n * 6 + 3 + k] += static_cast<T>(ab);
                          }
                      }
                  });
    }
    return out;
}

template <typename T>
std::pair<Tensor<T>, LossReport> composite_loss(const LossTerms<T>& terms,
                                                const LossWeights& weights,
                                                double epoch_fraction) {
    weights.validate();
    DFP_CHECK(epoch_fraction >= 0.0 && epoch_fraction <= 1.0,
              "composite_loss: epoch_fraction must be in [0,1], got ", epoch_fraction);
    DFP_CHECK(terms.vs.defined() && terms.ir.defined() && terms.p.defined(),
              "composite_loss: vs, ir and p terms are required");
    const double lsd = weights.effective_sd(epoch_fraction);

    Tensor<T> total = scale(terms.vs, static_cast<T>(weights.lambda_vs));
    total = add(total, scale(terms.ir, static_cast<T>(weights.lambda_ir)));
    if (lsd > 0.0) {
        DFP_CHECK(terms.sd.defined(), "composite_loss: lambda_sd active but sd term missing");
        total = add(total, scale(terms.sd, static_cast<T>(lsd)));
    }
    total = add(total, scale(terms.p, static_cast<T>(weights.lambda_p)));

    LossReport rep;
    rep.lambda_sd = lsd;
    rep.vs = weights.lambda_vs * double(terms.vs.item());
    rep.ir = weights.lambda_ir * double(terms.ir.item());
    rep.sd = lsd > 0.0 ? lsd * double(terms.sd.item()) : 0.0;
    rep.p = weights.lambda_p * double(terms.p.item());
    rep.total = double(total.item());
    return {total, rep};
}

#define DFP_INSTANTIATE(T)                                                                   \
    template Tensor<T> charbonnier(const Tensor<T>&, const CharbonnierParams&,              \
                                   const Tensor<T>&);                                        \
    template Tensor<T> view_synthesis_loss(const Tensor<T>&, const Tensor<T>&,              \
                                           const Tensor<T>&, const Tensor<T>&,              \
                                           const IntrinsicsBatch&, const CharbonnierParams&); \
    template Tensor<T> flow_reconstruction_loss(const Tensor<T>&, const Tensor<T>&,         \
                                                const Tensor<T>&, const Tensor<T>&,         \
                                                const CharbonnierParams&);                   \
    template Tensor<T> depth_smoothness_loss(const Tensor<T>&, const Tensor<T>&);           \
    template Tensor<T> pose_consistency_loss(const Tensor<T>&, const Tensor<T>&,            \
                                             const CharbonnierParams&);                     \
    template std::pair<Tensor<T>, LossReport> composite_loss(const LossTerms<T>&,           \
                                                             const LossWeights&, double);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
