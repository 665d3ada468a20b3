#include <cmath>

#include "dfp/ops.hpp"

namespace dfp {

namespace {

struct ConvDims {
    int N, C, H, W, F, KH, KW, OH, OW, pt, pl, stride;
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& input, const Tensor<T>& kernel, int stride, Pad padding) {
    const Shape& is = input.shape();
    const Shape& ks = kernel.shape();
    DFP_CHECK(is.size() == 4, "conv2d: input must be NCHW, got ", shape_str(is));
    DFP_CHECK(ks.size() == 4, "conv2d: kernel must be FCKhKw, got ", shape_str(ks));
    DFP_CHECK(is[1] == ks[1], "conv2d: input has ", is[1], " channels but kernel expects ",
              ks[1], " (input ", shape_str(is), ", kernel ", shape_str(ks), ")");
    // same-padding centers the kernel, which only makes sense for odd dims;
    // valid mode has no such constraint
    DFP_CHECK(padding == Pad::valid || (ks[2] % 2 == 1 && ks[3] % 2 == 1),
              "conv2d: same padding needs odd kernel dims, got ", shape_str(ks));
    DFP_CHECK(stride >= 1, "conv2d: stride must be >= 1, got ", stride);
    ConvDims d;
    d.N = is[0]; d.C = is[1]; d.H = is[2]; d.W = is[3];
    d.F = ks[0]; d.KH = ks[2]; d.KW = ks[3];
    d.stride = stride;
    if (padding == Pad::same) {
        d.OH = (d.H + stride - 1) / stride;
        d.OW = (d.W + stride - 1) / stride;
        const int pad_h = std::max(0, (d.OH - 1) * stride + d.KH - d.H);
        const int pad_w = std::max(0, (d.OW - 1) * stride + d.KW - d.W);
        d.pt = pad_h / 2;
        d.pl = pad_w / 2;
    } else {
        DFP_CHECK(d.H >= d.KH && d.W >= d.KW, "conv2d: input ", shape_str(is),
                  " smaller than kernel ", shape_str(ks), " with valid padding");
        d.OH = (d.H - d.KH) / stride + 1;
        d.OW = (d.W - d.KW) / stride + 1;
        d.pt = d.pl = 0;
    }
    return d;
}

// The kernels below run on zero-padded copies of the input so the hot loops
// carry no boundary logic. Per output element the accumulation order is the
// fixed serial c -> kh -> kw walk; filter blocking only shares input loads
// across independent outputs, so results are identical for any block width.

// Copies [N,C,H,W] into [N,C,HP,WP] zero-padded buffers at offset (pt, pl).
template <typename T>
std::vector<T> pad_nchw(const T* in, int N, int C, int H, int W, int pt, int pl, int HP,
                        int WP) {
    std::vector<T> out(size_t(N) * C * HP * WP, T(0));
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const T* src = in + (int64_t(n) * C + c) * H * W;
            T* dst = out.data() + (int64_t(n) * C + c) * HP * WP + int64_t(pt) * WP + pl;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) dst[int64_t(h) * WP + w] = src[int64_t(h) * W + w];
        }
    }
    return out;
}

struct CoreDims {
    int N, C, F, OH, OW, KH, KW, stride, HP, WP;
};

// One (sample, filter-block) task: FB output planes accumulated in registers,
// walking the padded input. wpack is [C*KH*KW][F] (filter index innermost).
template <typename T, int FB, int CH>
void conv_block(const CoreDims& d, const T* padin, const T* wpack, const T* bias, T* out,
                int n, int f0, bool add_to_out) {
    const int64_t plane_p = int64_t(d.HP) * d.WP;
    const int64_t plane_o = int64_t(d.OH) * d.OW;
    const T* in_n = padin + int64_t(n) * d.C * plane_p;
    const int taps = d.KH * d.KW;
    for (int oh = 0; oh < d.OH; ++oh) {
        T* orow0 = out + ((int64_t(n) * d.F + f0) * d.OH + oh) * d.OW;
        const int64_t row_p = int64_t(oh) * d.stride * d.WP;
        for (int ow0 = 0; ow0 < d.OW; ow0 += CH) {
            const int rem = std::min(CH, d.OW - ow0);
            T acc[FB][CH];
            for (int j = 0; j < FB; ++j) {
                const T init = bias ? bias[f0 + j] : T(0);
                for (int t = 0; t < CH; ++t) acc[j][t] = init;
            }
            const T* base = in_n + row_p + int64_t(ow0) * d.stride;
            if (rem == CH && d.stride == 1) {
                for (int c = 0; c < d.C; ++c) {
                    const T* cbase = base + c * plane_p;
                    const T* wc = wpack + int64_t(c) * taps * d.F + f0;
                    for (int kh = 0; kh < d.KH; ++kh) {
                        const T* prow = cbase + int64_t(kh) * d.WP;
                        for (int kw = 0; kw < d.KW; ++kw) {
                            const T* wv = wc + (kh * d.KW + kw) * d.F;
                            const T* src = prow + kw;
                            for (int j = 0; j < FB; ++j) {
                                const T w = wv[j];
#pragma omp simd
                                for (int t = 0; t < CH; ++t) acc[j][t] += w * src[t];
                            }
                        }
                    }
                }
            } else {
                for (int c = 0; c < d.C; ++c) {
                    const T* cbase = base + c * plane_p;
                    const T* wc = wpack + int64_t(c) * taps * d.F + f0;
                    for (int kh = 0; kh < d.KH; ++kh) {
                        const T* prow = cbase + int64_t(kh) * d.WP;
                        for (int kw = 0; kw < d.KW; ++kw) {
                            const T* wv = wc + (kh * d.KW + kw) * d.F;
                            const T* src = prow + kw;
                            for (int j = 0; j < FB; ++j) {
                                const T w = wv[j];
#pragma omp simd
                                for (int t = 0; t < rem; ++t)
                                    acc[j][t] += w * src[int64_t(t) * d.stride];
                            }
                        }
                    }
                }
            }
            for (int j = 0; j < FB; ++j) {
                T* orow = orow0 + j * plane_o + ow0;
                if (add_to_out)
                    for (int t = 0; t < rem; ++t) orow[t] += acc[j][t];
                else
                    for (int t = 0; t < rem; ++t) orow[t] = acc[j][t];
            }
        }
    }
}

template <typename T, int CH>
void conv_core_ch(const CoreDims& d, const T* padin, const T* wpack, const T* bias, T* out,
                  bool add_to_out) {
    const int nblocks = (d.F + 7) / 8;
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.N; ++n) {
        for (int bi = 0; bi < nblocks; ++bi) {
            int f0 = bi * 8;
            int left = std::min(8, d.F - f0);
            if (left == 8) {
                conv_block<T, 8, CH>(d, padin, wpack, bias, out, n, f0, add_to_out);
                continue;
            }
            if (left >= 4) {
                conv_block<T, 4, CH>(d, padin, wpack, bias, out, n, f0, add_to_out);
                f0 += 4;
                left -= 4;
            }
            if (left >= 2) {
                conv_block<T, 2, CH>(d, padin, wpack, bias, out, n, f0, add_to_out);
                f0 += 2;
                left -= 2;
            }
            if (left == 1) conv_block<T, 1, CH>(d, padin, wpack, bias, out, n, f0, add_to_out);
        }
    }
}

template <typename T>
void conv_core(const CoreDims& d, const T* padin, const T* wpack, const T* bias, T* out,
               bool add_to_out) {
    constexpr int kMax = sizeof(T) == 4 ? 16 : 8;
    if (kMax == 16 && d.OW >= 16)
        conv_core_ch<T, 16>(d, padin, wpack, bias, out, add_to_out);
    else if (d.OW >= 8)
        conv_core_ch<T, 8>(d, padin, wpack, bias, out, add_to_out);
    else
        conv_core_ch<T, 4>(d, padin, wpack, bias, out, add_to_out);
}

template <typename T>
void conv_forward(const ConvDims& d, const T* in, const T* w, const T* b, T* out) {
    const int HP = d.H + d.KH - 1, WP = d.W + d.KW - 1;
    std::vector<T> padin = pad_nchw(in, d.N, d.C, d.H, d.W, d.pt, d.pl, HP, WP);
    std::vector<T> wpack(size_t(d.F) * d.C * d.KH * d.KW);
    const int taps = d.KH * d.KW;
    for (int f = 0; f < d.F; ++f)
        for (int c = 0; c < d.C; ++c)
            for (int k = 0; k < taps; ++k)
                wpack[(int64_t(c) * taps + k) * d.F + f] = w[(int64_t(f) * d.C + c) * taps + k];
    CoreDims cd{d.N, d.C, d.F, d.OH, d.OW, d.KH, d.KW, d.stride, HP, WP};
    conv_core(cd, padin.data(), wpack.data(), b, out, false);
}

// d(loss)/d(input) is a stride-1 correlation of the zero-stuffed output grad
// with the spatially flipped kernel, swapping the filter/channel roles.
template <typename T>
void conv_backward_input(const ConvDims& d, const T* g, const T* w, T* gi) {
    const int HP = d.H + d.KH - 1, WP = d.W + d.KW - 1;
    std::vector<T> stuffed(size_t(d.N) * d.F * HP * WP, T(0));
    const int y0 = d.KH - 1 - d.pt, x0 = d.KW - 1 - d.pl;
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < d.N; ++n) {
        for (int f = 0; f < d.F; ++f) {
            const T* src = g + (int64_t(n) * d.F + f) * d.OH * d.OW;
            T* dst = stuffed.data() + (int64_t(n) * d.F + f) * HP * WP;
            for (int oh = 0; oh < d.OH; ++oh) {
                T* drow = dst + int64_t(oh * d.stride + y0) * WP + x0;
                const T* srow = src + int64_t(oh) * d.OW;
                for (int ow = 0; ow < d.OW; ++ow) drow[int64_t(ow) * d.stride] = srow[ow];
            }
        }
    }
    const int taps = d.KH * d.KW;
    std::vector<T> wpack(size_t(d.F) * d.C * taps);
    for (int f = 0; f < d.F; ++f)
        for (int c = 0; c < d.C; ++c)
            for (int kh = 0; kh < d.KH; ++kh)
                for (int kw = 0; kw < d.KW; ++kw)
                    wpack[(int64_t(f) * taps + kh * d.KW + kw) * d.C + c] =
                        w[(int64_t(f) * d.C + c) * taps +
                          (d.KH - 1 - kh) * d.KW + (d.KW - 1 - kw)];
    CoreDims cd{d.N, d.F, d.C, d.H, d.W, d.KH, d.KW, 1, HP, WP};
    conv_core(cd, stuffed.data(), wpack.data(), static_cast<const T*>(nullptr), gi, true);
}

// Weight grads are per-filter dot products; the KH*KW tap accumulators advance
// together over each grad row in fixed-width blocks, so the reduction order
// never depends on threading.
template <typename T, int CH>
void conv_backward_weight_ch(const ConvDims& d, const T* g, const std::vector<T>& padin,
                             T* gw, T* gb) {
    const int HP = d.H + d.KH - 1, WP = d.W + d.KW - 1;
    const int64_t plane_p = int64_t(HP) * WP;
    const int64_t plane_o = int64_t(d.OH) * d.OW;
    const int taps = d.KH * d.KW;
#pragma omp parallel for schedule(static)
    for (int f = 0; f < d.F; ++f) {
        for (int c = 0; c < d.C; ++c) {
            T lanes[9][CH];
            for (int k = 0; k < taps; ++k)
                for (int t = 0; t < CH; ++t) lanes[k][t] = T(0);
            for (int n = 0; n < d.N; ++n) {
                const T* gp = g + (int64_t(n) * d.F + f) * plane_o;
                const T* ip = padin.data() + (int64_t(n) * d.C + c) * plane_p;
                for (int oh = 0; oh < d.OH; ++oh) {
                    const T* grow = gp + int64_t(oh) * d.OW;
                    const T* ibase = ip + int64_t(oh) * d.stride * WP;
                    for (int ow0 = 0; ow0 < d.OW; ow0 += CH) {
                        const int rem = std::min(CH, d.OW - ow0);
                        const T* gch = grow + ow0;
                        const T* isrc = ibase + int64_t(ow0) * d.stride;
                        if (rem == CH && d.stride == 1) {
                            for (int kh = 0; kh < d.KH; ++kh) {
                                const T* prow = isrc + int64_t(kh) * WP;
                                for (int kw = 0; kw < d.KW; ++kw) {
                                    T* lane = lanes[kh * d.KW + kw];
                                    const T* src = prow + kw;
#pragma omp simd
                                    for (int t = 0; t < CH; ++t) lane[t] += gch[t] * src[t];
                                }
                            }
                        } else {
                            for (int kh = 0; kh < d.KH; ++kh) {
                                const T* prow = isrc + int64_t(kh) * WP;
                                for (int kw = 0; kw < d.KW; ++kw) {
                                    T* lane = lanes[kh * d.KW + kw];
                                    const T* src = prow + kw;
                                    for (int t = 0; t < rem; ++t)
                                        lane[t] += gch[t] * src[int64_t(t) * d.stride];
                                }
                            }
                        }
                    }
                }
            }
            T* gwp = gw + (int64_t(f) * d.C + c) * taps;
            for (int k = 0; k < taps; ++k) {
                T s = T(0);
                for (int t = 0; t < CH; ++t) s += lanes[k][t];
                gwp[k] += s;
            }
        }
        if (gb) {
            T lanes[CH] = {};
            for (int n = 0; n < d.N; ++n) {
                const T* gp = g + (int64_t(n) * d.F + f) * plane_o;
                int64_t i = 0;
                for (; i + CH <= plane_o; i += CH)
#pragma omp simd
                    for (int t = 0; t < CH; ++t) lanes[t] += gp[i + t];
                for (int t = 0; i < plane_o; ++i, ++t) lanes[t] += gp[i];
            }
            T s = T(0);
            for (int t = 0; t < CH; ++t) s += lanes[t];
            gb[f] += s;
        }
    }
}

template <typename T>
void conv_backward_weight(const ConvDims& d, const T* g, const T* in, T* gw, T* gb) {
    DFP_CHECK(d.KH * d.KW <= 9, "conv2d backward: kernels larger than 3x3 are not supported");
    const int HP = d.H + d.KH - 1, WP = d.W + d.KW - 1;
    std::vector<T> padin = pad_nchw(in, d.N, d.C, d.H, d.W, d.pt, d.pl, HP, WP);
    constexpr int kMax = sizeof(T) == 4 ? 16 : 8;
    if (kMax == 16 && d.OW >= 16)
        conv_backward_weight_ch<T, 16>(d, g, padin, gw, gb);
    else if (d.OW >= 8)
        conv_backward_weight_ch<T, 8>(d, g, padin, gw, gb);
    else
        conv_backward_weight_ch<T, 4>(d, g, padin, gw, gb);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 int stride, Pad padding) {
    const ConvDims d = conv_dims(input, kernel, stride, padding);
    if (bias.defined())
        DFP_CHECK(bias.shape() == Shape{d.F}, "conv2d: bias shape ", shape_str(bias.shape()),
                  " does not match filter count ", d.F);
    Tensor<T> out = Tensor<T>::zeros({d.N, d.F, d.OH, d.OW});
    conv_forward(d, input.data(), kernel.data(), bias.defined() ? bias.data() : nullptr,
                 out.data());
    const bool has_bias = bias.defined();
    if ((has_bias && tracing<T>({&input, &kernel, &bias})) ||
        (!has_bias && tracing<T>({&input, &kernel}))) {
        std::vector<Tensor<T>> inputs = {input, kernel};
        if (has_bias) inputs.push_back(bias);
        record<T>("conv2d", inputs, out,
                  [input = input, kernel = kernel, bias = bias, out, d, has_bias]() mutable {
                      const T* g = out.grad().data();
                      if (input.requires_grad())
                          conv_backward_input(d, g, kernel.values().data(), input.grad().data());
                      if (kernel.requires_grad() || (has_bias && bias.requires_grad()))
                          conv_backward_weight(
                              d, g, input.values().data(), kernel.grad().data(),
                              has_bias && bias.requires_grad() ? bias.grad().data() : nullptr);
                  });
    }
    return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    DFP_CHECK(xs.size() == 2 && ws.size() == 2 && xs[1] == ws[1], "linear: x ", shape_str(xs),
              " incompatible with w ", shape_str(ws));
    const int N = xs[0], Ci = xs[1], Co = ws[0];
    if (b.defined())
        DFP_CHECK(b.shape() == Shape{Co}, "linear: bias shape ", shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros({N, Co});
    const T* px = x.data();
    const T* pw = w.data();
    T* po = out.data();
    for (int n = 0; n < N; ++n) {
        for (int o = 0; o < Co; ++o) {
            T acc = b.defined() ? b.data()[o] : T(0);
            const T* xr = px + int64_t(n) * Ci;
            const T* wr = pw + int64_t(o) * Ci;
            for (int i = 0; i < Ci; ++i) acc += xr[i] * wr[i];
            po[int64_t(n) * Co + o] = acc;
        }
    }
    const bool has_bias = b.defined();
    if ((has_bias && tracing<T>({&x, &w, &b})) || (!has_bias && tracing<T>({&x, &w}))) {
        std::vector<Tensor<T>> inputs = {x, w};
        if (has_bias) inputs.push_back(b);
        record<T>("linear", inputs, out, [x = x, w = w, b = b, out, N, Ci, Co,
                                          has_bias]() mutable {
            const T* g = out.grad().data();
            const T* px = x.values().data();
            const T* pw = w.values().data();
            T* gx = x.grad().data();
            T* gw = w.grad().data();
            for (int n = 0; n < N; ++n) {
                for (int o = 0; o < Co; ++o) {
                    const T go = g[int64_t(n) * Co + o];
                    const T* wr = pw + int64_t(o) * Ci;
                    const T* xr = px + int64_t(n) * Ci;
                    T* gxr = gx + int64_t(n) * Ci;
                    T* gwr = gw + int64_t(o) * Ci;
                    for (int i = 0; i < Ci; ++i) {
                        gxr[i] += go * wr[i];
                        gwr[i] += go * xr[i];
                    }
                }
            }
            if (has_bias && b.requires_grad()) {
                T* gb = b.grad().data();
                for (int o = 0; o < Co; ++o) {
                    T acc = T(0);
                    for (int n = 0; n < N; ++n) acc += g[int64_t(n) * Co + o];
                    gb[o] += acc;
                }
            }
        });
    }
    return out;
}

template <typename T>
void adam_step(Tensor<T>& param, AdamState<T>& state, T lr, T beta1, T beta2, T eps) {
    const int64_t n = param.numel();
    if (state.m.empty()) {
        state.m.assign(static_cast<size_t>(n), T(0));
        state.v.assign(static_cast<size_t>(n), T(0));
    }
    DFP_CHECK(static_cast<int64_t>(state.m.size()) == n, "adam_step: state size mismatch");
    std::span<const T> g = param.grad();
    for (int64_t i = 0; i < n; ++i)
        DFP_CHECK(std::isfinite(static_cast<double>(g[i])),
                  "adam_step: non-finite gradient at index ", i);
    state.step += 1;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1),
                                                 static_cast<double>(state.step)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2),
                                                 static_cast<double>(state.step)));
    T* p = param.data();
    for (int64_t i = 0; i < n; ++i) {
        state.m[i] = beta1 * state.m[i] + (T(1) - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (T(1) - beta2) * g[i] * g[i];
        const T mhat = state.m[i] / bc1;
        const T vhat = state.v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

#define DFP_INSTANTIATE(T)                                                                    \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, Pad); \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
    template void adam_step(Tensor<T>&, AdamState<T>&, T, T, T, T);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
