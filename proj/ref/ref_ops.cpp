#include "ref.hpp"

#include <algorithm>
#include <cmath>

namespace ref {

std::vector<double> conv2d(const std::vector<double>& x, int N, int C, int H, int W,
                           const std::vector<double>& w, int O, int kh, int kw,
                           const std::vector<double>& b, int stride, bool same_pad, int& oh,
                           int& ow) {
    int pad_top = 0, pad_left = 0;
    if (same_pad) {
        oh = (H + stride - 1) / stride;
        ow = (W + stride - 1) / stride;
        // total padding split top/bottom with the extra row at the bottom
        const int ph = std::max(0, (oh - 1) * stride + kh - H);
        const int pw = std::max(0, (ow - 1) * stride + kw - W);
        pad_top = ph / 2;
        pad_left = pw / 2;
    } else {
        oh = (H - kh) / stride + 1;
        ow = (W - kw) / stride + 1;
    }
    std::vector<double> out(static_cast<size_t>(N) * O * oh * ow, 0.0);
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
            for (int y = 0; y < oh; ++y)
                for (int xo = 0; xo < ow; ++xo) {
                    double acc = b.empty() ? 0.0 : b[o];
                    for (int c = 0; c < C; ++c)
                        for (int ky = 0; ky < kh; ++ky)
                            for (int kx = 0; kx < kw; ++kx) {
                                const int iy = y * stride - pad_top + ky;
                                const int ix = xo * stride - pad_left + kx;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += x[((static_cast<size_t>(n) * C + c) * H + iy) * W + ix] *
                                       w[((static_cast<size_t>(o) * C + c) * kh + ky) * kw + kx];
                            }
                    out[((static_cast<size_t>(n) * O + o) * oh + y) * ow + xo] = acc;
                }
    return out;
}

std::vector<double> group_norm(const std::vector<double>& x, int N, int C, int H, int W,
                               int groups, const std::vector<double>& gamma,
                               const std::vector<double>& beta, double eps) {
    const int cg = C / groups;
    const size_t hw = static_cast<size_t>(H) * W;
    std::vector<double> out(x.size());
    for (int n = 0; n < N; ++n)
        for (int g = 0; g < groups; ++g) {
            double sum = 0, sq = 0;
            const size_t count = cg * hw;
            for (int c = g * cg; c < (g + 1) * cg; ++c)
                for (size_t p = 0; p < hw; ++p) {
                    const double v = x[(static_cast<size_t>(n) * C + c) * hw + p];
                    sum += v;
                    sq += v * v;
                }
            const double mean = sum / count;
            const double var = sq / count - mean * mean;
            const double inv = 1.0 / std::sqrt(var + eps);
            for (int c = g * cg; c < (g + 1) * cg; ++c)
                for (size_t p = 0; p < hw; ++p) {
                    const size_t i = (static_cast<size_t>(n) * C + c) * hw + p;
                    out[i] = (x[i] - mean) * inv * gamma[c] + beta[c];
                }
        }
    return out;
}

void bilinear_sample(const std::vector<double>& img, int N, int C, int H, int W,
                     const std::vector<double>& coords, int Ho, int Wo,
                     std::vector<double>& out, std::vector<double>& valid) {
    const size_t ohw = static_cast<size_t>(Ho) * Wo;
    out.assign(static_cast<size_t>(N) * C * ohw, 0.0);
    valid.assign(static_cast<size_t>(N) * ohw, 0.0);
    for (int n = 0; n < N; ++n)
        for (size_t p = 0; p < ohw; ++p) {
            const double u = coords[(static_cast<size_t>(n) * 2 + 0) * ohw + p];
            const double v = coords[(static_cast<size_t>(n) * 2 + 1) * ohw + p];
            valid[n * ohw + p] = (u >= 0 && u <= W - 1 && v >= 0 && v <= H - 1) ? 1.0 : 0.0;
            const double uc = std::min(std::max(u, 0.0), double(W - 1));
            const double vc = std::min(std::max(v, 0.0), double(H - 1));
            const int x0 = std::min(int(std::floor(uc)), W - 2 < 0 ? 0 : W - 2);
            const int y0 = std::min(int(std::floor(vc)), H - 2 < 0 ? 0 : H - 2);
            const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
            const double fx = uc - x0, fy = vc - y0;
            for (int c = 0; c < C; ++c) {
                const size_t base = (static_cast<size_t>(n) * C + c) * H * W;
                const double top = (1 - fx) * img[base + static_cast<size_t>(y0) * W + x0] +
                                   fx * img[base + static_cast<size_t>(y0) * W + x1];
                const double bot = (1 - fx) * img[base + static_cast<size_t>(y1) * W + x0] +
                                   fx * img[base + static_cast<size_t>(y1) * W + x1];
                out[(static_cast<size_t>(n) * C + c) * ohw + p] = (1 - fy) * top + fy * bot;
            }
        }
}

std::vector<double> cost_volume(const std::vector<double>& a, const std::vector<double>& b,
                                int N, int C, int H, int W, int max_disp) {
    const int d = max_disp, span = 2 * d + 1;
    const size_t hw = static_cast<size_t>(H) * W;
    std::vector<double> out(static_cast<size_t>(N) * span * span * hw, 0.0);
    for (int n = 0; n < N; ++n)
        for (int oy = -d; oy <= d; ++oy)
            for (int ox = -d; ox <= d; ++ox) {
                const int ch = (oy + d) * span + (ox + d);
                for (int y = 0; y < H; ++y)
                    for (int x = 0; x < W; ++x) {
                        const int sy = y + oy, sx = x + ox;
                        if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                        double acc = 0;
                        for (int c = 0; c < C; ++c)
                            acc += a[(static_cast<size_t>(n) * C + c) * hw + y * W + x] *
                                   b[(static_cast<size_t>(n) * C + c) * hw + sy * W + sx];
                        out[(static_cast<size_t>(n) * span * span + ch) * hw + y * W + x] =
                            acc / C;
                    }
            }
    return out;
}

void flow_warp(const std::vector<double>& img, int N, int C, int H, int W,
               const std::vector<double>& flow, std::vector<double>& out,
               std::vector<double>& valid) {
    const size_t hw = static_cast<size_t>(H) * W;
    std::vector<double> coords(static_cast<size_t>(N) * 2 * hw);
    for (int n = 0; n < N; ++n)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const size_t p = static_cast<size_t>(y) * W + x;
                coords[(static_cast<size_t>(n) * 2 + 0) * hw + p] =
                    x + flow[(static_cast<size_t>(n) * 2 + 0) * hw + p];
                coords[(static_cast<size_t>(n) * 2 + 1) * hw + p] =
                    y + flow[(static_cast<size_t>(n) * 2 + 1) * hw + p];
            }
    bilinear_sample(img, N, C, H, W, coords, H, W, out, valid);
}

double charbonnier_mean(const std::vector<double>& residual, double alpha, double beta,
                        double eps) {
    double sum = 0;
    for (double r : residual) sum += std::pow(beta * r * r + eps, alpha);
    return sum / static_cast<double>(residual.size());
}

double smoothness(const std::vector<double>& depth, const std::vector<double>& img, int N,
                  int H, int W) {
    double sum = 0;
    size_t count = 0;
    for (int n = 0; n < N; ++n) {
        const size_t base = static_cast<size_t>(n) * H * W;
        for (int y = 1; y + 1 < H; ++y)
            for (int x = 1; x + 1 < W; ++x) {
                const size_t p = base + static_cast<size_t>(y) * W + x;
                const double d2x = depth[p - 1] - 2 * depth[p] + depth[p + 1];
                const double d2y = depth[p - W] - 2 * depth[p] + depth[p + W];
                const double ix = (img[p + 1] - img[p - 1]) * 0.5;
                const double iy = (img[p + W] - img[p - W]) * 0.5;
                sum += 0.5 * (std::abs(d2x) * std::exp(-10.0 * std::abs(ix)) +
                              std::abs(d2y) * std::exp(-10.0 * std::abs(iy)));
                ++count;
            }
    }
    return sum / static_cast<double>(count);
}

}  // namespace ref
