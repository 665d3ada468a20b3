#include <cmath>

#include "dfp/ops.hpp"

namespace dfp {

namespace {

// align-corners=false source position for 2x upsampling, clamped like the
// usual framework convention: src = max(0, (o+0.5)/2 - 0.5)
template <typename T>
inline void up2_src(int o, int size_in, int& i0, int& i1, T& w1) {
    T src = (static_cast<T>(o) + T(0.5)) * T(0.5) - T(0.5);
    if (src < T(0)) src = T(0);
    i0 = static_cast<int>(src);
    if (i0 > size_in - 1) i0 = size_in - 1;
    i1 = i0 + 1 < size_in ? i0 + 1 : size_in - 1;
    w1 = src - static_cast<T>(i0);
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear2x(const Tensor<T>& x) {
    const Shape& s = x.shape();
    DFP_CHECK(s.size() == 4 && s[2] >= 1 && s[3] >= 1, "upsample_bilinear2x: bad shape ",
              shape_str(s));
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int OH = 2 * H, OW = 2 * W;
    Tensor<T> out = Tensor<T>::zeros({N, C, OH, OW});
    const T* px = x.data();
    T* po = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const T* ip = px + nc * H * W;
        T* op = po + nc * int64_t(OH) * OW;
        for (int oy = 0; oy < OH; ++oy) {
            int y0, y1;
            T wy;
            up2_src(oy, H, y0, y1, wy);
            const T* r0 = ip + int64_t(y0) * W;
            const T* r1 = ip + int64_t(y1) * W;
            T* orow = op + int64_t(oy) * OW;
            for (int ox = 0; ox < OW; ++ox) {
                int x0, x1;
                T wx;
                up2_src(ox, W, x0, x1, wx);
                const T top = (T(1) - wx) * r0[x0] + wx * r0[x1];
                const T bot = (T(1) - wx) * r1[x0] + wx * r1[x1];
                orow[ox] = (T(1) - wy) * top + wy * bot;
            }
        }
    }
    if (tracing<T>({&x})) {
        record<T>("upsample_bilinear2x", {x}, out, [x = x, out, N, C, H, W, OH, OW]() mutable {
            const T* g = out.grad().data();
            T* gx = x.grad().data();
#pragma omp parallel for schedule(static)
            for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
                const T* gp = g + nc * int64_t(OH) * OW;
                T* gxp = gx + nc * H * W;
                for (int oy = 0; oy < OH; ++oy) {
                    int y0, y1;
                    T wy;
                    up2_src(oy, H, y0, y1, wy);
                    const T* grow = gp + int64_t(oy) * OW;
                    for (int ox = 0; ox < OW; ++ox) {
                        int x0, x1;
                        T wx;
                        up2_src(ox, W, x0, x1, wx);
                        const T gv = grow[ox];
                        gxp[int64_t(y0) * W + x0] += (T(1) - wy) * (T(1) - wx) * gv;
                        gxp[int64_t(y0) * W + x1] += (T(1) - wy) * wx * gv;
                        gxp[int64_t(y1) * W + x0] += wy * (T(1) - wx) * gv;
                        gxp[int64_t(y1) * W + x1] += wy * wx * gv;
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> avg_pool2x(const Tensor<T>& x) {
    const Shape& s = x.shape();
    DFP_CHECK(s.size() == 4, "avg_pool2x: input must be NCHW, got ", shape_str(s));
    DFP_CHECK(s[2] % 2 == 0 && s[3] % 2 == 0, "avg_pool2x: spatial dims must be even, got ",
              shape_str(s));
    const int N = s[0], C = s[1], H = s[2], W = s[3];
    const int OH = H / 2, OW = W / 2;
    Tensor<T> out = Tensor<T>::zeros({N, C, OH, OW});
    const T* px = x.data();
    T* po = out.data();
#pragma omp parallel for schedule(static)
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const T* ip = px + nc * H * W;
        T* op = po + nc * int64_t(OH) * OW;
        for (int oy = 0; oy < OH; ++oy) {
            const T* r0 = ip + int64_t(2 * oy) * W;
            const T* r1 = r0 + W;
            T* orow = op + int64_t(oy) * OW;
#pragma omp simd
            for (int ox = 0; ox < OW; ++ox)
                orow[ox] = (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]) * T(0.25);
        }
    }
    if (tracing<T>({&x})) {
        record<T>("avg_pool2x", {x}, out, [x = x, out, N, C, H, W, OH, OW]() mutable {
            const T* g = out.grad().data();
            T* gx = x.grad().data();
#pragma omp parallel for schedule(static)
            for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
                const T* gp = g + nc * int64_t(OH) * OW;
                T* gxp = gx + nc * H * W;
                for (int oy = 0; oy < OH; ++oy) {
                    const T* grow = gp + int64_t(oy) * OW;
                    T* r0 = gxp + int64_t(2 * oy) * W;
                    T* r1 = r0 + W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const T gv = grow[ox] * T(0.25);
                        r0[2 * ox] += gv;
                        r0[2 * ox + 1] += gv;
                        r1[2 * ox] += gv;
                        r1[2 * ox + 1] += gv;
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    const Shape& s = x.shape();
    DFP_CHECK(s.size() == 4, "global_avg_pool: input must be NCHW, got ", shape_str(s));
    const int N = s[0], C = s[1];
    const int64_t plane = int64_t(s[2]) * s[3];
    Tensor<T> out = Tensor<T>::zeros({N, C});
    const T* px = x.data();
    T* po = out.data();
    const T inv = T(1) / static_cast<T>(plane);
    for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
        const T* ip = px + nc * plane;
        T lanes[8] = {};
        int64_t i = 0;
        for (; i + 8 <= plane; i += 8)
#pragma omp simd
            for (int k = 0; k < 8; ++k) lanes[k] += ip[i + k];
        T tail = T(0);
        for (; i < plane; ++i) tail += ip[i];
        po[nc] = (((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
                  ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail) *
                 inv;
    }
    if (tracing<T>({&x})) {
        record<T>("global_avg_pool", {x}, out, [x = x, out, N, C, plane, inv]() mutable {
            const T* g = out.grad().data();
            T* gx = x.grad().data();
            for (int64_t nc = 0; nc < int64_t(N) * C; ++nc) {
                const T gv = g[nc] * inv;
                T* gxp = gx + nc * plane;
#pragma omp simd
                for (int64_t i = 0; i < plane; ++i) gxp[i] += gv;
            }
        });
    }
    return out;
}

#define DFP_INSTANTIATE(T)                                 \
    template Tensor<T> upsample_bilinear2x(const Tensor<T>&); \
    template Tensor<T> avg_pool2x(const Tensor<T>&);       \
    template Tensor<T> global_avg_pool(const Tensor<T>&);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
