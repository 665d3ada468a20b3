#include "ref.hpp"

#include <algorithm>
#include <cmath>

namespace ref {

namespace {
double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

DepthScores depth_scores(std::vector<double> pred, const std::vector<double>& gt,
                         bool median_scale, double lo, double hi) {
    if (median_scale) {
        const double s = median({gt.begin(), gt.end()}) / median(pred);
        for (double& p : pred) p *= s;
    }
    DepthScores r;
    const size_t n = pred.size();
    for (size_t i = 0; i < n; ++i) {
        const double p = std::min(std::max(pred[i], lo), hi), g = gt[i];
        r.abs_rel += std::abs(p - g) / g;
        r.sq_rel += (p - g) * (p - g) / g;
        r.rmse += (p - g) * (p - g);
        r.rmse_log += (std::log(p) - std::log(g)) * (std::log(p) - std::log(g));
        const double ratio = std::max(p / g, g / p);
        if (ratio < 1.25) r.acc_delta += 1;
    }
    r.abs_rel /= n;
    r.sq_rel /= n;
    r.rmse = std::sqrt(r.rmse / n);
    r.rmse_log = std::sqrt(r.rmse_log / n);
    r.acc_delta /= n;
    return r;
}

FlowScores flow_scores(const std::vector<double>& pred, const std::vector<double>& gt) {
    FlowScores r;
    const size_t n = pred.size() / 2;
    for (size_t i = 0; i < n; ++i) {
        const double du = pred[2 * i] - gt[2 * i], dv = pred[2 * i + 1] - gt[2 * i + 1];
        const double err = std::sqrt(du * du + dv * dv);
        const double mag =
            std::sqrt(gt[2 * i] * gt[2 * i] + gt[2 * i + 1] * gt[2 * i + 1]);
        r.epe += err;
        if (err > 3.0 && err > 0.05 * mag) r.er += 1;
    }
    r.epe /= n;
    r.er /= n;
    return r;
}

}  // namespace ref
