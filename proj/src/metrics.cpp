#include "dfp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dfp/check.hpp"

namespace dfp {

namespace {

double median(std::vector<double> v) {
    const size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double m = v[n / 2];
    if (n % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
        m = 0.5 * (m + v[n / 2 - 1]);
    }
    return m;
}

}  // namespace

DepthMetrics depth_metrics(const std::vector<float>& pred, const std::vector<float>& gt,
                           const std::vector<uint8_t>& valid, const DepthEvalOptions& opt) {
    DFP_CHECK(pred.size() == gt.size() && pred.size() == valid.size(),
              "depth_metrics: size mismatch (", pred.size(), ", ", gt.size(), ", ", valid.size(),
              ")");
    std::vector<double> p, g;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (!valid[i]) continue;
        DFP_CHECK(gt[i] > 0, "depth_metrics: non-positive gt ", gt[i], " at valid pixel ", i);
        p.push_back(pred[i]);
        g.push_back(gt[i]);
    }
    DFP_CHECK(!p.empty(), "depth_metrics: empty valid mask");

    double s = 1.0;
    if (opt.median_scale) {
        const double mp = median(p);
        DFP_CHECK(mp > 0, "depth_metrics: non-positive prediction median ", mp);
        s = median(g) / mp;
    }
    DepthMetrics m;
    for (size_t i = 0; i < p.size(); ++i) {
        const double pi = std::clamp(p[i] * s, opt.min_depth, opt.max_depth);
        const double d = pi - g[i];
        m.abs_rel += std::abs(d) / g[i];
        m.sq_rel += d * d / g[i];
        m.rmse += d * d;
        const double dl = std::log(pi) - std::log(g[i]);
        m.rmse_log += dl * dl;
        if (std::max(pi / g[i], g[i] / pi) < 1.25) m.acc_delta += 1.0;
    }
    const double n = double(p.size());
    m.abs_rel /= n;
    m.sq_rel /= n;
    m.rmse = std::sqrt(m.rmse / n);
    m.rmse_log = std::sqrt(m.rmse_log / n);
    m.acc_delta /= n;
    return m;
}

FlowMetrics flow_metrics(const std::vector<float>& pred, const std::vector<float>& gt,
                         const std::vector<uint8_t>& valid) {
    DFP_CHECK(pred.size() == gt.size(), "flow_metrics: pred/gt size mismatch");
    DFP_CHECK(pred.size() == valid.size() * 2, "flow_metrics: expected ", valid.size() * 2,
              " flow values, got ", pred.size());
    FlowMetrics m;
    int64_t n = 0;
    for (size_t i = 0; i < valid.size(); ++i) {
        if (!valid[i]) continue;
        const double du = double(pred[2 * i]) - gt[2 * i];
        const double dv = double(pred[2 * i + 1]) - gt[2 * i + 1];
        const double err = std::hypot(du, dv);
        const double mag = std::hypot(double(gt[2 * i]), double(gt[2 * i + 1]));
        m.epe += err;
        if (err > 3.0 && err > 0.05 * mag) m.er += 1.0;
        ++n;
    }
    DFP_CHECK(n > 0, "flow_metrics: empty valid mask");
    m.epe /= double(n);
    m.er /= double(n);
    return m;
}

PoseMetrics ate(const std::vector<Pose6>& pred, const std::vector<Pose6>& gt, int snippet_len) {
    DFP_CHECK(pred.size() == gt.size(), "ate: sequence length mismatch (", pred.size(), " vs ",
              gt.size(), ")");
    DFP_CHECK(snippet_len >= 1, "ate: snippet_len must be >= 1");
    DFP_CHECK(int(pred.size()) >= snippet_len, "ate: need >= ", snippet_len, " pose pairs, got ",
              pred.size());

    auto centers = [](const std::vector<Pose6>& poses, size_t start, int len) {
        // poses are t->t+1 point transforms; the camera-to-start transform
        // accumulates their inverses, and its translation is the camera center
        std::vector<Vec3> c(len + 1);
        SE3 w = SE3::identity();
        c[0] = {0, 0, 0};
        for (int i = 0; i < len; ++i) {
            w = w * poses[start + i].transform().inverse();
            c[i + 1] = w.t;
        }
        return c;
    };

    PoseMetrics m;
    const int snippets = int(pred.size()) - snippet_len + 1;
    for (int s0 = 0; s0 < snippets; ++s0) {
        const std::vector<Vec3> cp = centers(pred, s0, snippet_len);
        const std::vector<Vec3> cg = centers(gt, s0, snippet_len);
        double num = 0, den = 0;
        for (size_t i = 0; i < cp.size(); ++i) {
            num += cp[i].dot(cg[i]);
            den += cp[i].dot(cp[i]);
        }
        const double scale = den > 0 ? num / den : 1.0;
        double sq = 0;
        for (size_t i = 0; i < cp.size(); ++i) {
            const Vec3 d = cp[i] * scale - cg[i];
            sq += d.dot(d);
        }
        m.ate += std::sqrt(sq / double(cp.size()));
    }
    m.ate /= double(snippets);
    return m;
}

}  // namespace dfp
