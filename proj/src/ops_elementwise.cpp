#include <cmath>

#include "dfp/ops.hpp"

namespace dfp {

namespace {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    DFP_CHECK(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
              shape_str(b.shape()));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "add");
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    if (tracing<T>({&a, &b})) {
        record<T>("add", {a, b}, out, [a = a, b = b, out]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            T* gb = b.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "sub");
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] - pb[i];
    if (tracing<T>({&a, &b})) {
        record<T>("sub", {a, b}, out, [a = a, b = b, out]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            T* gb = b.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) {
                ga[i] += g[i];
                gb[i] -= g[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "mul");
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] * pb[i];
    if (tracing<T>({&a, &b})) {
        record<T>("mul", {a, b}, out, [a = a, b = b, out]() mutable {
            const T* g = out.grad().data();
            const T* pa = a.values().data();
            const T* pb = b.values().data();
            T* ga = a.grad().data();
            T* gb = b.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) {
                ga[i] += g[i] * pb[i];
                gb[i] += g[i] * pa[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] * s;
    if (tracing<T>({&a})) {
        record<T>("scale", {a}, out, [a = a, out, s]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i] * s;
        });
    }
    return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] + s;
    if (tracing<T>({&a})) {
        record<T>("add_scalar", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
    DFP_CHECK(slope > T(0) && slope < T(1), "leaky_relu: slope must be in (0,1), got ", slope);
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] >= T(0) ? pa[i] : slope * pa[i];
    if (tracing<T>({&a})) {
        record<T>("leaky_relu", {a}, out, [a = a, out, slope]() mutable {
            const T* g = out.grad().data();
            const T* pa = a.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i)
                ga[i] += pa[i] >= T(0) ? g[i] : slope * g[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
    for (int64_t i = 0; i < nel; ++i) po[i] = T(1) / (T(1) + std::exp(-pa[i]));
    if (tracing<T>({&a})) {
        record<T>("sigmoid", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            const T* po = out.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i] * po[i] * (T(1) - po[i]);
        });
    }
    return out;
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
    for (int64_t i = 0; i < nel; ++i) po[i] = std::log(pa[i]);
    if (tracing<T>({&a})) {
        record<T>("log", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            const T* pa = a.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i] / pa[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
    for (int64_t i = 0; i < nel; ++i) po[i] = std::exp(pa[i]);
    if (tracing<T>({&a})) {
        record<T>("exp", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            const T* po = out.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i] * po[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> reciprocal(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
    for (int64_t i = 0; i < nel; ++i) po[i] = T(1) / pa[i];
    if (tracing<T>({&a})) {
        record<T>("reciprocal", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            const T* po = out.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] -= g[i] * po[i] * po[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T lo) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t nel = a.numel();
#pragma omp simd
    for (int64_t i = 0; i < nel; ++i) po[i] = pa[i] < lo ? lo : pa[i];
    if (tracing<T>({&a})) {
        record<T>("clamp_min", {a}, out, [a = a, out, lo]() mutable {
            const T* g = out.grad().data();
            const T* pa = a.values().data();
            T* ga = a.grad().data();
            const int64_t nel = out.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i)
                if (pa[i] >= lo) ga[i] += g[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    // 8-lane blocked accumulation: fixed association order, vectorizable
    const T* pa = a.data();
    const int64_t n = a.numel();
    T lanes[8] = {};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int k = 0; k < 8; ++k) lanes[k] += pa[i + k];
    T tail = T(0);
    for (; i < n; ++i) tail += pa[i];
    T total = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
              ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
    Tensor<T> out = Tensor<T>::scalar(total);
    if (tracing<T>({&a})) {
        record<T>("sum", {a}, out, [a = a, out]() mutable {
            const T g = out.grad()[0];
            T* ga = a.grad().data();
            const int64_t nel = a.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    DFP_CHECK(a.numel() > 0, "mean of empty tensor");
    Tensor<T> s = sum(a);
    return scale(s, T(1) / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> masked_mean(const Tensor<T>& x, const Tensor<T>& mask) {
    check_same_shape(x, mask, "masked_mean");
    const T* px = x.data();
    const T* pm = mask.data();
    const int64_t n = x.numel();
    T acc = T(0), cnt = T(0);
    for (int64_t i = 0; i < n; ++i) {
        if (pm[i] != T(0)) {
            acc += px[i];
            cnt += T(1);
        }
    }
    const T denom = cnt > T(0) ? cnt : T(1);
    Tensor<T> out = Tensor<T>::scalar(acc / denom);
    if (tracing<T>({&x})) {
        record<T>("masked_mean", {x, mask}, out, [x = x, mask = mask, out, denom]() mutable {
            const T g = out.grad()[0] / denom;
            const T* pm = mask.values().data();
            T* gx = x.grad().data();
            const int64_t nel = x.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i)
                if (pm[i] != T(0)) gx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    DFP_CHECK(!parts.empty(), "concat_channels: no inputs");
    const Shape& s0 = parts[0].shape();
    DFP_CHECK(s0.size() == 4, "concat_channels expects NCHW, got ", shape_str(s0));
    int ctotal = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        DFP_CHECK(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
                  "concat_channels: incompatible shape ", shape_str(s), " vs ", shape_str(s0));
        ctotal += s[1];
    }
    const int N = s0[0], H = s0[2], W = s0[3];
    const int64_t hw = int64_t(H) * W;
    Tensor<T> out = Tensor<T>::zeros({N, ctotal, H, W});
    T* po = out.data();
    for (int n = 0; n < N; ++n) {
        int64_t coff = 0;
        for (const auto& p : parts) {
            const int c = p.shape()[1];
            const T* pp = p.data() + int64_t(n) * c * hw;
            T* dst = po + (int64_t(n) * ctotal + coff) * hw;
#pragma omp simd
            for (int64_t i = 0; i < int64_t(c) * hw; ++i) dst[i] = pp[i];
            coff += c;
        }
    }
    bool trace = false;
    if (Graph<T>::current())
        for (const auto& p : parts)
            if (p.requires_grad()) trace = true;
    if (trace) {
        std::vector<Tensor<T>> held(parts.begin(), parts.end());
        record<T>("concat_channels", parts, out, [held, out, N, ctotal, hw]() mutable {
            const T* g = out.grad().data();
            for (int n = 0; n < N; ++n) {
                int64_t coff = 0;
                for (auto& p : held) {
                    const int c = p.shape()[1];
                    T* gp = p.grad().data() + int64_t(n) * c * hw;
                    const T* src = g + (int64_t(n) * ctotal + coff) * hw;
#pragma omp simd
                    for (int64_t i = 0; i < int64_t(c) * hw; ++i) gp[i] += src[i];
                    coff += c;
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> narrow_batch(const Tensor<T>& a, int start, int len) {
    const Shape& s = a.shape();
    DFP_CHECK(!s.empty() && start >= 0 && len >= 1 && start + len <= s[0],
              "narrow_batch: rows [", start, ",", start + len, ") out of range for ",
              shape_str(s));
    Shape so = s;
    so[0] = len;
    const int64_t row = a.numel() / s[0];
    Tensor<T> out = Tensor<T>::zeros(so);
    const T* pa = a.data() + start * row;
    T* po = out.data();
#pragma omp simd
    for (int64_t i = 0; i < len * row; ++i) po[i] = pa[i];
    if (tracing<T>({&a})) {
        record<T>("narrow_batch", {a}, out, [a = a, out, start, len, row]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data() + start * row;
#pragma omp simd
            for (int64_t i = 0; i < len * row; ++i) ga[i] += g[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> stack_batch(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b, "stack_batch");
    Shape so = a.shape();
    so[0] *= 2;
    Tensor<T> out = Tensor<T>::zeros(so);
    const int64_t n = a.numel();
    T* po = out.data();
    const T* pa = a.data();
    const T* pb = b.data();
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i];
#pragma omp simd
    for (int64_t i = 0; i < n; ++i) po[n + i] = pb[i];
    if (tracing<T>({&a, &b})) {
        record<T>("stack_batch", {a, b}, out, [a = a, b = b, out, n]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            T* gb = b.grad().data();
#pragma omp simd
            for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
#pragma omp simd
            for (int64_t i = 0; i < n; ++i) gb[i] += g[n + i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    DFP_CHECK(shape_numel(shape) == a.numel(), "reshape: ", shape_str(a.shape()), " -> ",
              shape_str(shape), " changes element count");
    Tensor<T> out = Tensor<T>::from(std::move(shape), {a.values().begin(), a.values().end()});
    if (tracing<T>({&a})) {
        record<T>("reshape", {a}, out, [a = a, out]() mutable {
            const T* g = out.grad().data();
            T* ga = a.grad().data();
            const int64_t nel = a.numel();
#pragma omp simd
            for (int64_t i = 0; i < nel; ++i) ga[i] += g[i];
        });
    }
    return out;
}

#define DFP_INSTANTIATE(T)                                                       \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                  \
    template Tensor<T> scale(const Tensor<T>&, T);                               \
    template Tensor<T> add_scalar(const Tensor<T>&, T);                          \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                          \
    template Tensor<T> sigmoid(const Tensor<T>&);                                \
    template Tensor<T> log_op(const Tensor<T>&);                                 \
    template Tensor<T> exp_op(const Tensor<T>&);                                 \
    template Tensor<T> reciprocal(const Tensor<T>&);                             \
    template Tensor<T> clamp_min(const Tensor<T>&, T);                           \
    template Tensor<T> sum(const Tensor<T>&);                                    \
    template Tensor<T> mean(const Tensor<T>&);                                   \
    template Tensor<T> masked_mean(const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);           \
    template Tensor<T> narrow_batch(const Tensor<T>&, int, int);                 \
    template Tensor<T> stack_batch(const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> reshape(const Tensor<T>&, Shape);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
