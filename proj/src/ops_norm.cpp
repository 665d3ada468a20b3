#include <cmath>

#include "dfp/ops.hpp"

namespace dfp {

namespace {

// fixed-order 8-lane sum of a contiguous range
template <typename T>
T lane_sum(const T* p, int64_t n) {
    T lanes[8] = {};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
#pragma omp simd
        for (int k = 0; k < 8; ++k) lanes[k] += p[i + k];
    T tail = T(0);
    for (; i < n; ++i) tail += p[i];
    return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
           ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

}  // namespace

template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, int groups, const Tensor<T>& gamma,
                     const Tensor<T>& beta, T eps) {
    const Shape& s = x.shape();
    DFP_CHECK(s.size() == 4, "group_norm: input must be NCHW, got ", shape_str(s));
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    DFP_CHECK(groups >= 1 && C % groups == 0, "group_norm: C=", C, " not divisible by groups=",
              groups);
    DFP_CHECK(gamma.shape() == Shape{C} && beta.shape() == Shape{C},
              "group_norm: affine params must be [", C, "], got ", shape_str(gamma.shape()),
              " and ", shape_str(beta.shape()));
    const int Cg = C / groups;
    const int64_t plane = int64_t(H) * W;
    const int64_t gsize = Cg * plane;

    Tensor<T> out = Tensor<T>::zeros(s);
    // per-(n,group) statistics, kept for backward
    auto mu = std::make_shared<std::vector<T>>(size_t(N) * groups);
    auto istd = std::make_shared<std::vector<T>>(size_t(N) * groups);

    const T* px = x.data();
    const T* pg = gamma.data();
    const T* pb = beta.data();
    T* po = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int g = 0; g < groups; ++g) {
            const T* xp = px + (int64_t(n) * C + int64_t(g) * Cg) * plane;
            const T m = lane_sum(xp, gsize) / static_cast<T>(gsize);
            T lanes[8] = {};
            int64_t i = 0;
            for (; i + 8 <= gsize; i += 8)
#pragma omp simd
                for (int k = 0; k < 8; ++k) {
                    const T dxy = xp[i + k] - m;
                    lanes[k] += dxy * dxy;
                }
            T tail = T(0);
            for (; i < gsize; ++i) {
                const T dxy = xp[i] - m;
                tail += dxy * dxy;
            }
            const T var = (((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                           ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail) /
                          static_cast<T>(gsize);
            const T is = T(1) / std::sqrt(var + eps);
            (*mu)[size_t(n) * groups + g] = m;
            (*istd)[size_t(n) * groups + g] = is;
            T* op = po + (int64_t(n) * C + int64_t(g) * Cg) * plane;
            for (int c = 0; c < Cg; ++c) {
                const T ga = pg[g * Cg + c];
                const T be = pb[g * Cg + c];
                const T* xc = xp + int64_t(c) * plane;
                T* oc = op + int64_t(c) * plane;
#pragma omp simd
                for (int64_t j = 0; j < plane; ++j) oc[j] = ga * (xc[j] - m) * is + be;
            }
        }
    }

    if (tracing<T>({&x, &gamma, &beta})) {
        record<T>("group_norm", {x, gamma, beta}, out,
                  [x = x, gamma = gamma, beta = beta, out, mu, istd, N, C, groups, Cg, plane,
                   gsize]() mutable {
                      const T* g = out.grad().data();
                      const T* px = x.values().data();
                      const T* pg = gamma.values().data();
                      T* gx = x.grad().data();
                      T* ggam = gamma.grad().data();
                      T* gbet = beta.grad().data();
                      // dgamma/dbeta: serial over n for fixed channel order
                      for (int c = 0; c < C; ++c) {
                          const int grp = c / Cg;
                          T sg = T(0), sb = T(0);
                          for (int n = 0; n < N; ++n) {
                              const T m = (*mu)[size_t(n) * groups + grp];
                              const T is = (*istd)[size_t(n) * groups + grp];
                              const T* gp = g + (int64_t(n) * C + c) * plane;
                              const T* xp = px + (int64_t(n) * C + c) * plane;
                              T lanes[8] = {};
                              T lanesb[8] = {};
                              int64_t i = 0;
                              for (; i + 8 <= plane; i += 8)
#pragma omp simd
                                  for (int k = 0; k < 8; ++k) {
                                      lanes[k] += gp[i + k] * (xp[i + k] - m) * is;
                                      lanesb[k] += gp[i + k];
                                  }
                              for (; i < plane; ++i) {
                                  sg += gp[i] * (xp[i] - m) * is;
                                  sb += gp[i];
                              }
                              for (int k = 0; k < 8; ++k) {
                                  sg += lanes[k];
                                  sb += lanesb[k];
                              }
                          }
                          ggam[c] += sg;
                          gbet[c] += sb;
                      }
                      if (!x.requires_grad()) return;
#pragma omp parallel for collapse(2) schedule(static)
                      for (int n = 0; n < N; ++n) {
                          for (int grp = 0; grp < groups; ++grp) {
                              const T m = (*mu)[size_t(n) * groups + grp];
                              const T is = (*istd)[size_t(n) * groups + grp];
                              const T* xp = px + (int64_t(n) * C + int64_t(grp) * Cg) * plane;
                              const T* gp = g + (int64_t(n) * C + int64_t(grp) * Cg) * plane;
                              T* gxp = gx + (int64_t(n) * C + int64_t(grp) * Cg) * plane;
                              // sum over group of dxhat and dxhat*xhat
                              T s1 = T(0), s2 = T(0);
                              for (int c = 0; c < Cg; ++c) {
                                  const T ga = pg[grp * Cg + c];
                                  const T* gc = gp + int64_t(c) * plane;
                                  const T* xc = xp + int64_t(c) * plane;
                                  T l1[8] = {}, l2[8] = {};
                                  int64_t i = 0;
                                  for (; i + 8 <= plane; i += 8)
#pragma omp simd
                                      for (int k = 0; k < 8; ++k) {
                                          const T dxh = gc[i + k] * ga;
                                          l1[k] += dxh;
                                          l2[k] += dxh * (xc[i + k] - m) * is;
                                      }
                                  for (; i < plane; ++i) {
                                      const T dxh = gc[i] * ga;
                                      s1 += dxh;
                                      s2 += dxh * (xc[i] - m) * is;
                                  }
                                  for (int k = 0; k < 8; ++k) {
                                      s1 += l1[k];
                                      s2 += l2[k];
                                  }
                              }
                              const T inv_m = T(1) / static_cast<T>(gsize);
                              for (int c = 0; c < Cg; ++c) {
                                  const T ga = pg[grp * Cg + c];
                                  const T* gc = gp + int64_t(c) * plane;
                                  const T* xc = xp + int64_t(c) * plane;
                                  T* gxc = gxp + int64_t(c) * plane;
#pragma omp simd
                                  for (int64_t i = 0; i < plane; ++i) {
                                      const T xhat = (xc[i] - m) * is;
                                      gxc[i] +=
                                          is * (gc[i] * ga - inv_m * s1 - xhat * inv_m * s2);
                                  }
                              }
                          }
                      }
                  });
    }
    return out;
}

template <typename T>
Tensor<T> spatial_dropout(const Tensor<T>& x, double rate, bool training, uint64_t seed) {
    DFP_CHECK(rate >= 0.0 && rate < 1.0, "spatial_dropout: rate must be in [0,1), got ", rate);
    if (!training || rate == 0.0) return x;
    const Shape& s = x.shape();
    DFP_CHECK(s.size() == 4, "spatial_dropout: input must be NCHW, got ", shape_str(s));
    const int N = s[0], C = s[1];
    const int64_t plane = int64_t(s[2]) * s[3];
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<T>>(size_t(N) * C);
    Rng rng(seed);
    for (auto& mv : *mask) mv = rng.uniform() >= rate ? keep_scale : T(0);

    Tensor<T> out = Tensor<T>::zeros(s);
    const T* px = x.data();
    T* po = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const T mv = (*mask)[nc];
        const T* xp = px + nc * plane;
        T* op = po + nc * plane;
        if (mv == T(0)) continue;  // already zeros
#pragma omp simd
        for (int64_t i = 0; i < plane; ++i) op[i] = mv * xp[i];
    }
    if (tracing<T>({&x})) {
        record<T>("spatial_dropout", {x}, out, [x = x, out, mask, N, C, plane]() mutable {
            const T* g = out.grad().data();
            T* gx = x.grad().data();
#pragma omp parallel for schedule(static)
            for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
                const T mv = (*mask)[nc];
                if (mv == T(0)) continue;
                const T* gp = g + nc * plane;
                T* gxp = gx + nc * plane;
#pragma omp simd
                for (int64_t i = 0; i < plane; ++i) gxp[i] += mv * gp[i];
            }
        });
    }
    return out;
}

#define DFP_INSTANTIATE(T)                                                              \
    template Tensor<T> group_norm(const Tensor<T>&, int, const Tensor<T>&,              \
                                  const Tensor<T>&, T);                                 \
    template Tensor<T> spatial_dropout(const Tensor<T>&, double, bool, uint64_t);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
