#include <cmath>

#include "dfp/ops.hpp"

namespace dfp {

template <typename T>
std::pair<Tensor<T>, Tensor<T>> bilinear_sample(const Tensor<T>& img, const Tensor<T>& coords) {
    const Shape& is = img.shape();
    const Shape& cs = coords.shape();
    DFP_CHECK(is.size() == 4, "bilinear_sample: image must be NCHW, got ", shape_str(is));
    DFP_CHECK(cs.size() == 4 && cs[1] == 2, "bilinear_sample: coords must be [N,2,H,W], got ",
              shape_str(cs));
    DFP_CHECK(is[0] == cs[0], "bilinear_sample: batch mismatch ", is[0], " vs ", cs[0]);
    const int N = is[0], C = is[1], H = is[2], W = is[3];
    const int OH = cs[2], OW = cs[3];
    const int64_t iplane = int64_t(H) * W;
    const int64_t oplane = int64_t(OH) * OW;

    Tensor<T> out = Tensor<T>::zeros({N, C, OH, OW});
    Tensor<T> valid = Tensor<T>::zeros({N, 1, OH, OW});
    const T* pi = img.data();
    const T* pc = coords.data();
    T* po = out.data();
    T* pv = valid.data();
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        const T* cu = pc + int64_t(n) * 2 * oplane;
        const T* cv = cu + oplane;
        for (int64_t p = 0; p < oplane; ++p) {
            T u = cu[p];
            T v = cv[p];
            const bool inb = u >= T(0) && u <= T(W - 1) && v >= T(0) && v <= T(H - 1);
            pv[int64_t(n) * oplane + p] = inb ? T(1) : T(0);
            if (u < T(0)) u = T(0);
            if (u > T(W - 1)) u = T(W - 1);
            if (v < T(0)) v = T(0);
            if (v > T(H - 1)) v = T(H - 1);
            const int x0 = static_cast<int>(u);
            const int y0 = static_cast<int>(v);
            const int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
            const int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
            const T fx = u - static_cast<T>(x0);
            const T fy = v - static_cast<T>(y0);
            const T w00 = (T(1) - fy) * (T(1) - fx);
            const T w01 = (T(1) - fy) * fx;
            const T w10 = fy * (T(1) - fx);
            const T w11 = fy * fx;
            const T* ip = pi + int64_t(n) * C * iplane;
            T* op = po + int64_t(n) * C * oplane;
            for (int c = 0; c < C; ++c) {
                const T* cp = ip + int64_t(c) * iplane;
                op[int64_t(c) * oplane + p] = w00 * cp[int64_t(y0) * W + x0] +
                                              w01 * cp[int64_t(y0) * W + x1] +
                                              w10 * cp[int64_t(y1) * W + x0] +
                                              w11 * cp[int64_t(y1) * W + x1];
            }
        }
    }
    if (tracing<T>({&img, &coords})) {
        record<T>("bilinear_sample", {img, coords}, out,
                  [img = img, coords = coords, out, N, C, H, W, OH, OW, iplane,
                   oplane]() mutable {
                      const T* g = out.grad().data();
                      const T* pi = img.values().data();
                      const T* pc = coords.values().data();
                      T* gi = img.grad().data();
                      T* gc = coords.grad().data();
                      const bool need_img = img.requires_grad();
                      const bool need_coords = coords.requires_grad();
#pragma omp parallel for schedule(static)
                      for (int n = 0; n < N; ++n) {
                          const T* cu = pc + int64_t(n) * 2 * oplane;
                          const T* cv = cu + oplane;
                          T* gcu = gc + int64_t(n) * 2 * oplane;
                          T* gcv = gcu + oplane;
                          for (int64_t p = 0; p < oplane; ++p) {
                              T u = cu[p];
                              T v = cv[p];
                              const bool cu_in = u > T(0) && u < T(W - 1);
                              const bool cv_in = v > T(0) && v < T(H - 1);
                              if (u < T(0)) u = T(0);
                              if (u > T(W - 1)) u = T(W - 1);
                              if (v < T(0)) v = T(0);
                              if (v > T(H - 1)) v = T(H - 1);
                              const int x0 = static_cast<int>(u);
                              const int y0 = static_cast<int>(v);
                              const int x1 = x0 + 1 < W ? x0 + 1 : W - 1;
                              const int y1 = y0 + 1 < H ? y0 + 1 : H - 1;
                              const T fx = u - static_cast<T>(x0);
                              const T fy = v - static_cast<T>(y0);
                              T du = T(0), dv = T(0);
                              const T* ip = pi + int64_t(n) * C * iplane;
                              T* gip = gi + int64_t(n) * C * iplane;
                              const T* gp = g + int64_t(n) * C * oplane;
                              for (int c = 0; c < C; ++c) {
                                  const T gv = gp[int64_t(c) * oplane + p];
                                  const T* cp = ip + int64_t(c) * iplane;
                                  const T i00 = cp[int64_t(y0) * W + x0];
                                  const T i01 = cp[int64_t(y0) * W + x1];
                                  const T i10 = cp[int64_t(y1) * W + x0];
                                  const T i11 = cp[int64_t(y1) * W + x1];
                                  if (need_img) {
                                      T* gcp = gip + int64_t(c) * iplane;
                                      gcp[int64_t(y0) * W + x0] += (T(1) - fy) * (T(1) - fx) * gv;
                                      gcp[int64_t(y0) * W + x1] += (T(1) - fy) * fx * gv;
                                      gcp[int64_t(y1) * W + x0] += fy * (T(1) - fx) * gv;
                                      gcp[int64_t(y1) * W + x1] += fy * fx * gv;
                                  }
                                  du += gv * ((T(1) - fy) * (i01 - i00) + fy * (i11 - i10));
                                  dv += gv * ((T(1) - fx) * (i10 - i00) + fx * (i11 - i01));
                              }
                              if (need_coords) {
                                  if (cu_in) gcu[p] += du;
                                  if (cv_in) gcv[p] += dv;
                              }
                          }
                      }
                  });
    }
    return {out, valid};
}

template <typename T>
Tensor<T> cost_volume(const Tensor<T>& a, const Tensor<T>& b, int max_disp) {
    const Shape& s = a.shape();
    DFP_CHECK(s.size() == 4, "cost_volume: inputs must be NCHW, got ", shape_str(s));
    DFP_CHECK(a.shape() == b.shape(), "cost_volume: shape mismatch ", shape_str(a.shape()),
              " vs ", shape_str(b.shape()));
    DFP_CHECK(max_disp >= 0, "cost_volume: max_disp must be >= 0, got ", max_disp);
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int D = 2 * max_disp + 1;
    const int64_t plane = int64_t(H) * W;
    const T invC = T(1) / static_cast<T>(C);

    Tensor<T> out = Tensor<T>::zeros({N, D * D, H, W});
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int o = 0; o < D * D; ++o) {
            const int oy = o / D - max_disp;
            const int ox = o % D - max_disp;
            const int y_lo = oy < 0 ? -oy : 0;
            const int y_hi = oy > 0 ? H - oy : H;
            const int x_lo = ox < 0 ? -ox : 0;
            const int x_hi = ox > 0 ? W - ox : W;
            T* op = po + (int64_t(n) * D * D + o) * plane;
            const T* ap = pa + int64_t(n) * C * plane;
            const T* bp = pb + int64_t(n) * C * plane;
            for (int c = 0; c < C; ++c) {
                const T* ac = ap + int64_t(c) * plane;
                const T* bc = bp + int64_t(c) * plane;
                for (int y = y_lo; y < y_hi; ++y) {
                    const T* arow = ac + int64_t(y) * W;
                    const T* brow = bc + int64_t(y + oy) * W + ox;
                    T* orow = op + int64_t(y) * W;
#pragma omp simd
                    for (int x = x_lo; x < x_hi; ++x) orow[x] += arow[x] * brow[x];
                }
            }
            for (int64_t i = 0; i < plane; ++i) op[i] *= invC;
        }
    }
    if (tracing<T>({&a, &b})) {
        record<T>("cost_volume", {a, b}, out,
                  [a = a, b = b, out, N, C, H, W, D, max_disp, plane, invC]() mutable {
                      const T* g = out.grad().data();
                      const T* pa = a.values().data();
                      const T* pb = b.values().data();
                      T* ga = a.grad().data();
                      T* gb = b.grad().data();
#pragma omp parallel for schedule(static)
                      for (int n = 0; n < N; ++n) {
                          for (int o = 0; o < D * D; ++o) {
                              const int oy = o / D - max_disp;
                              const int ox = o % D - max_disp;
                              const int y_lo = oy < 0 ? -oy : 0;
                              const int y_hi = oy > 0 ? H - oy : H;
                              const int x_lo = ox < 0 ? -ox : 0;
                              const int x_hi = ox > 0 ? W - ox : W;
                              const T* gp = g + (int64_t(n) * D * D + o) * plane;
                              for (int c = 0; c < C; ++c) {
                                  const T* ac = pa + (int64_t(n) * C + c) * plane;
                                  const T* bc = pb + (int64_t(n) * C + c) * plane;
                                  T* gac = ga + (int64_t(n) * C + c) * plane;
                                  T* gbc = gb + (int64_t(n) * C + c) * plane;
                                  for (int y = y_lo; y < y_hi; ++y) {
                                      const T* grow = gp + int64_t(y) * W;
                                      const T* arow = ac + int64_t(y) * W;
                                      const T* brow = bc + int64_t(y + oy) * W + ox;
                                      T* garow = gac + int64_t(y) * W;
                                      T* gbrow = gbc + int64_t(y + oy) * W + ox;
#pragma omp simd
                                      for (int x = x_lo; x < x_hi; ++x) {
                                          garow[x] += invC * grow[x] * brow[x];
                                          gbrow[x] += invC * grow[x] * arow[x];
                                      }
                                  }
                              }
                          }
                      }
                  });
    }
    return out;
}

#define DFP_INSTANTIATE(T)                                                                \
    template std::pair<Tensor<T>, Tensor<T>> bilinear_sample(const Tensor<T>&,            \
                                                             const Tensor<T>&);           \
    template Tensor<T> cost_volume(const Tensor<T>&, const Tensor<T>&, int);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
