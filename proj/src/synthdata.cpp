#include "dfp/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dfp/check.hpp"
#include "dfp/image_io.hpp"
#include "dfp/rng.hpp"

namespace dfp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPatchTol = 1e-12;  // containment slack for re-tested hit points
constexpr double kEdgeTol = 1e-9;    // frame-boundary slack (zero-motion reprojection noise)
constexpr double kDepthTestTol = 1e-9;  // relative slack of the occlusion depth test

std::array<double, 3> tex_eval(const PlaneSpec& pl, const Vec3& X) {
    const Vec3 q = X - pl.p0;
    const double u = q.dot(pl.e1), v = q.dot(pl.e2);
    const TextureSpec& t = pl.texture;
    std::array<double, 3> c;
    if (t.kind == TextureSpec::Kind::noise) {
        c = t.base;
        for (const TextureSpec::Wave& w : t.waves) {
            const double s = std::sin(2.0 * M_PI * (w.fu * u + w.fv * v) + w.phase);
            for (int k = 0; k < 3; ++k) c[k] += w.amp[k] * s;
        }
    } else {
        const double om = 2.0 * M_PI / t.period;
        const double s = 0.5 + 0.5 * std::tanh(std::sin(om * u) / t.softness) *
                                   std::tanh(std::sin(om * v) / t.softness);
        for (int k = 0; k < 3; ++k) c[k] = t.color_a[k] + (t.color_b[k] - t.color_a[k]) * s;
    }
    for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k], 0.0, 1.0);
    return c;
}

bool in_patch(const PlaneSpec& pl, const Vec3& X) {
    const Vec3 q = X - pl.p0;
    return std::abs(q.dot(pl.e1)) <= pl.half1 + kPatchTol &&
           std::abs(q.dot(pl.e2)) <= pl.half2 + kPatchTol;
}

struct Hit {
    double t = kInf;
    int plane = -1;
};

// Everything precomputed once per render: the t->s point transform and each
// plane re-expressed in frame-s coordinates (n_s = R_st^T n, d_s = d - n.t_st).
struct RenderCtx {
    const SyntheticScene* scene;
    SE3 T;     // frame t -> frame s
    SE3 Tinv;  // frame s -> frame t
    Pose6 pose_ts;
    std::vector<Vec3> n_s;
    std::vector<double> d_s;

    explicit RenderCtx(const SyntheticScene& sc) : scene(&sc) {
        pose_ts = sc.motion.inverse_motion();
        T = pose_ts.transform();
        Tinv = T.inverse();
        n_s.reserve(sc.planes.size());
        d_s.reserve(sc.planes.size());
        for (const PlaneSpec& pl : sc.planes) {
            n_s.push_back(Tinv.R.transposed() * pl.n);
            d_s.push_back(pl.d - pl.n.dot(Tinv.t));
        }
    }

    Vec3 ray(double x, double y) const {
        const CameraIntrinsics& k = scene->camera;
        return {(x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0};
    }

    Hit cast_target(const Vec3& r) const {
        Hit h;
        for (size_t i = 0; i < scene->planes.size(); ++i) {
            const PlaneSpec& pl = scene->planes[i];
            const double denom = pl.n.dot(r);
            if (denom <= 1e-12) continue;
            const double t = pl.d / denom;
            if (t <= 1e-9 || t >= h.t) continue;
            if (!in_patch(pl, r * t)) continue;
            h.t = t;
            h.plane = int(i);
        }
        return h;
    }

    Hit cast_source(const Vec3& r) const {
        Hit h;
        for (size_t i = 0; i < scene->planes.size(); ++i) {
            const double denom = n_s[i].dot(r);
            if (denom <= 1e-12) continue;
            const double t = d_s[i] / denom;
            if (t <= 1e-9 || t >= h.t) continue;
            if (!in_patch(scene->planes[i], Tinv * (r * t))) continue;
            h.t = t;
            h.plane = int(i);
        }
        return h;
    }

    // depth / flow / occlusion of one target pixel, all double
    PixelTruth pixel(int x, int y, int* plane_out = nullptr, Vec3* point_out = nullptr) const {
        const Vec3 r = ray(x, y);
        const Hit h = cast_target(r);
        DFP_CHECK(h.plane >= 0, "scene: pixel (", x, ",", y, ") sees no geometry");
        DFP_CHECK(h.t >= scene->min_depth && h.t <= scene->max_depth, "scene: pixel (", x, ",", y,
                  ") depth ", h.t, " outside [", scene->min_depth, ",", scene->max_depth, "]");
        if (plane_out) *plane_out = h.plane;
        const Vec3 X_t = r * h.t;
        if (point_out) *point_out = X_t;

        PixelTruth out;
        out.depth = h.t;  // ray z-component is 1, so the hit parameter is z-depth
        const Vec3 X_s = T * X_t;
        if (X_s.z < 1e-6) {
            out.occluded = true;
            return out;
        }
        const CameraIntrinsics& k = scene->camera;
        const double px = k.fx * (X_s.x / X_s.z) + k.cx;
        const double py = k.fy * (X_s.y / X_s.z) + k.cy;
        // subtract the reprojection of the same 3D point rather than the integer
        // pixel: identical arithmetic on both sides makes zero motion give
        // exactly zero flow
        const double qx = k.fx * (X_t.x / X_t.z) + k.cx;
        const double qy = k.fy * (X_t.y / X_t.z) + k.cy;
        out.du = px - qx;
        out.dv = py - qy;

        if (px < -kEdgeTol || px > scene->width - 1 + kEdgeTol || py < -kEdgeTol ||
            py > scene->height - 1 + kEdgeTol) {
            out.occluded = true;
            return out;
        }
        const Vec3 rs{X_s.x / X_s.z, X_s.y / X_s.z, 1.0};
        const Hit hs = cast_source(rs);
        if (hs.plane < 0 || hs.t < X_s.z * (1.0 - kDepthTestTol)) {
            out.occluded = true;
            return out;
        }
        // Bilinear sampling of image_s mixes up to four integer taps. A
        // footprint that straddles a silhouette edge blends another surface
        // into the lookup, so any positive-weight tap seeing a different
        // plane marks the pixel occluded. Zero-weight taps are skipped: with
        // zero motion the reprojection is exactly on-grid and the single
        // surviving tap is the pixel itself.
        const double ux = std::clamp(px, 0.0, double(scene->width - 1));
        const double uy = std::clamp(py, 0.0, double(scene->height - 1));
        const int x0 = std::max(0, std::min(int(std::floor(ux)), scene->width - 2));
        const int y0 = std::max(0, std::min(int(std::floor(uy)), scene->height - 2));
        const double wx = ux - x0, wy = uy - y0;
        for (int dy = 0; dy < 2 && !out.occluded; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                if ((dx ? wx : 1.0 - wx) * (dy ? wy : 1.0 - wy) <= 0.0) continue;
                if (cast_source(ray(x0 + dx, y0 + dy)).plane != h.plane) {
                    out.occluded = true;
                    break;
                }
            }
        return out;
    }
};

void validate_scene(const SyntheticScene& s) {
    DFP_CHECK(s.width > 0 && s.height > 0, "scene: bad dims ", s.width, "x", s.height);
    DFP_CHECK(s.camera.fx > 0 && s.camera.fy > 0, "scene: invalid intrinsics");
    DFP_CHECK(!s.planes.empty(), "scene: no geometry");
    DFP_CHECK(s.min_depth > 0 && s.min_depth < s.max_depth, "scene: bad depth band");
    for (size_t i = 0; i < s.planes.size(); ++i) {
        const PlaneSpec& pl = s.planes[i];
        DFP_CHECK(std::abs(pl.n.norm() - 1.0) < 1e-9, "scene: plane ", i, " normal not unit");
        DFP_CHECK(pl.n.z > 1e-6, "scene: plane ", i, " does not face the camera");
        DFP_CHECK(pl.d > 0, "scene: plane ", i, " has d <= 0");
        DFP_CHECK(std::abs(pl.n.dot(pl.p0) - pl.d) < 1e-9, "scene: plane ", i, " p0 off-plane");
    }
}

}  // namespace

void PlaneSpec::complete_frame() {
    if (std::abs(n.dot(p0) - d) > 1e-9) p0 = n * d;  // closest point to the origin
    const Vec3 up = std::abs(n.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    e1 = up.cross(n).normalized();
    e2 = n.cross(e1);
}

GroundTruthBundle render_pair(const SyntheticScene& scene) {
    validate_scene(scene);
    const RenderCtx ctx(scene);
    const int H = scene.height, W = scene.width;

    GroundTruthBundle b;
    b.height = H;
    b.width = W;
    b.camera = scene.camera;
    b.pose_ts = ctx.pose_ts;
    b.image_t.resize(size_t(H) * W * 3);
    b.image_s.resize(size_t(H) * W * 3);
    b.depth_t.resize(size_t(H) * W);
    b.flow_ts.resize(size_t(H) * W * 2);
    b.occlusion.resize(size_t(H) * W);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const size_t i = size_t(y) * W + x;
            int plane;
            Vec3 X_t;
            const PixelTruth px = ctx.pixel(x, y, &plane, &X_t);
            b.depth_t[i] = float(px.depth);
            b.flow_ts[2 * i] = float(px.du);
            b.flow_ts[2 * i + 1] = float(px.dv);
            b.occlusion[i] = px.occluded ? 1 : 0;
            const std::array<double, 3> c = tex_eval(scene.planes[plane], X_t);
            for (int k = 0; k < 3; ++k) b.image_t[3 * i + k] = float(c[k]);
        }

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const Vec3 r = ctx.ray(x, y);
            const Hit h = ctx.cast_source(r);
            DFP_CHECK(h.plane >= 0, "scene: source pixel (", x, ",", y, ") sees no geometry");
            DFP_CHECK(h.t >= scene.min_depth && h.t <= scene.max_depth, "scene: source pixel (", x,
                      ",", y, ") depth ", h.t, " outside band");
            const Vec3 X_t = ctx.Tinv * (r * h.t);
            const std::array<double, 3> c = tex_eval(scene.planes[h.plane], X_t);
            const size_t i = size_t(y) * W + x;
            for (int k = 0; k < 3; ++k) b.image_s[3 * i + k] = float(c[k]);
        }
    return b;
}

PixelTruth exact_pixel_truth(const SyntheticScene& scene, int x, int y) {
    validate_scene(scene);
    DFP_CHECK(x >= 0 && x < scene.width && y >= 0 && y < scene.height,
              "exact_pixel_truth: pixel out of range");
    return RenderCtx(scene).pixel(x, y);
}

double constancy_max_error(const GroundTruthBundle& b) {
    const int H = b.height, W = b.width;
    double worst = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const size_t i = size_t(y) * W + x;
            if (b.occlusion[i]) continue;
            const double sx = x + double(b.flow_ts[2 * i]);
            const double sy = y + double(b.flow_ts[2 * i + 1]);
            if (sx < 0 || sx > W - 1 || sy < 0 || sy > H - 1) continue;
            const int x0 = std::min(int(sx), W - 2), y0 = std::min(int(sy), H - 2);
            const double ax = sx - x0, ay = sy - y0;
            for (int k = 0; k < 3; ++k) {
                auto at = [&](int yy, int xx) { return double(b.image_s[(size_t(yy) * W + xx) * 3 + k]); };
                const double s = (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
                                 ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
                worst = std::max(worst, std::abs(s - double(b.image_t[3 * i + k])));
            }
        }
    return worst;
}

void SceneParams::validate() const {
    DFP_CHECK(width > 0 && height > 0, "scene params: bad dims");
    DFP_CHECK(max_foreground >= 0, "scene params: max_foreground < 0");
    DFP_CHECK(0 < backdrop_lo && backdrop_lo <= backdrop_hi, "scene params: backdrop range");
    DFP_CHECK(0 < foreground_lo && foreground_lo <= foreground_hi, "scene params: foreground range");
    DFP_CHECK(slant_max >= 0 && slant_max < 1.2, "scene params: slant_max out of range");
    DFP_CHECK(0 < trans_lo && trans_lo <= trans_hi, "scene params: translation range");
    DFP_CHECK(rot_max >= 0, "scene params: rot_max < 0");
    DFP_CHECK(max_flow > 0 && min_mean_flow >= 0, "scene params: flow bounds");
    DFP_CHECK(0 < min_depth && min_depth < max_depth, "scene params: depth band");
    DFP_CHECK(checker_prob >= 0 && checker_prob <= 1, "scene params: checker_prob");
}

CameraIntrinsics SceneParams::intrinsics() const {
    CameraIntrinsics k;
    k.fx = fx > 0 ? fx : 0.9 * width;
    k.fy = fy > 0 ? fy : k.fx;
    k.cx = cx >= 0 ? cx : (width - 1) / 2.0;
    k.cy = cy >= 0 ? cy : (height - 1) / 2.0;
    return k;
}

namespace {

// Band-limited texture whose projected period stays >= ~16 px for plane
// points up to depth z_ref, keeping bilinear resampling error well inside the
// 0.02 constancy budget.
TextureSpec make_texture(Rng& rng, double z_ref, double fx, bool checker) {
    TextureSpec t;
    if (checker) {
        t.kind = TextureSpec::Kind::checker;
        t.period = rng.uniform(28, 44) * z_ref / fx;
        t.softness = 0.7;
        for (int k = 0; k < 3; ++k) {
            t.color_a[k] = rng.uniform(0.2, 0.3);
            t.color_b[k] = t.color_a[k] + rng.uniform(0.32, 0.4);
        }
        return t;
    }
    const int n = rng.uniform_int(3, 5);
    std::vector<double> raw(n);
    double sum = 0;
    for (double& a : raw) sum += (a = rng.uniform(0.5, 1.0));
    const double total = rng.uniform(0.30, 0.36);
    double delta[3];
    for (int k = 0; k < 3; ++k) t.base[k] = 0.5 + rng.uniform(-0.03, 0.03);
    t.waves.resize(n);
    for (int w = 0; w < n; ++w) {
        TextureSpec::Wave& wv = t.waves[w];
        const double period = rng.uniform(16, 42) * z_ref / fx;
        const double psi = rng.uniform(0, 2 * M_PI);
        wv.fu = std::cos(psi) / period;
        wv.fv = std::sin(psi) / period;
        wv.phase = rng.uniform(0, 2 * M_PI);
        const double amp = raw[w] / sum * total;
        double mean = 0;
        for (int k = 0; k < 3; ++k) mean += (delta[k] = rng.uniform(-0.2, 0.2));
        mean /= 3;
        for (int k = 0; k < 3; ++k) wv.amp[k] = amp * (1.0 + delta[k] - mean);
    }
    return t;
}

}  // namespace

SyntheticScene make_random_scene(const SceneParams& params, uint64_t seed) {
    params.validate();
    const CameraIntrinsics K = params.intrinsics();
    const int W = params.width, H = params.height;

    for (int attempt = 0; attempt < 64; ++attempt) {
        Rng rng(seed_mix(seed, uint64_t(attempt), 0x5ce9eull));

        SyntheticScene s;
        s.width = W;
        s.height = H;
        s.camera = K;
        s.seed = seed;
        s.min_depth = params.min_depth;
        s.max_depth = params.max_depth;

        const double zb = rng.uniform(params.backdrop_lo, params.backdrop_hi);
        PlaneSpec back;
        back.n = Vec3{rng.uniform(-0.18, 0.18), rng.uniform(-0.18, 0.18), 1.0}.normalized();
        back.d = back.n.z * zb;
        back.p0 = Vec3{0, 0, 0};  // complete_frame re-anchors it on the plane
        back.complete_frame();
        back.texture = make_texture(rng, zb * 1.45, K.fx, rng.uniform() < params.checker_prob);
        s.planes.push_back(back);

        const int nf = rng.uniform_int(0, params.max_foreground);
        for (int i = 0; i < nf; ++i) {
            const double zf =
                rng.uniform(params.foreground_lo, std::min(params.foreground_hi, 0.75 * zb));
            const Vec3 r{(rng.uniform(0.15, 0.85) * (W - 1) - K.cx) / K.fx,
                         (rng.uniform(0.15, 0.85) * (H - 1) - K.cy) / K.fy, 1.0};
            const double theta = rng.uniform(0, params.slant_max);
            const double phi = rng.uniform(0, 2 * M_PI);
            PlaneSpec pl;
            pl.n = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                    std::cos(theta)};
            pl.p0 = r * zf;
            pl.d = pl.n.dot(pl.p0);
            if (pl.d < 0.2) continue;
            pl.complete_frame();
            pl.half1 = 0.5 * rng.uniform(0.18, 0.42) * W / K.fx * zf;
            pl.half2 = 0.5 * rng.uniform(0.25, 0.55) * H / K.fy * zf;
            pl.texture = make_texture(rng, zf * 1.3, K.fx, rng.uniform() < params.checker_prob);
            s.planes.push_back(pl);
        }

        Vec3 dir{rng.normal(), 0.6 * rng.normal(), 0.8 * rng.normal()};
        if (dir.norm() < 1e-6) dir = {1, 0, 0};
        s.motion.t = dir.normalized() * rng.uniform(params.trans_lo, params.trans_hi);
        s.motion.r = {rng.uniform(-params.rot_max, params.rot_max),
                      rng.uniform(-params.rot_max, params.rot_max),
                      rng.uniform(-params.rot_max, params.rot_max)};

        GroundTruthBundle b;
        try {
            b = render_pair(s);
        } catch (const Error&) {
            continue;  // coverage or depth-band violation: resample
        }
        double max_flow = 0, mean_flow = 0;
        int64_t visible = 0;
        const int64_t total = int64_t(H) * W;
        for (int64_t i = 0; i < total; ++i) {
            const double m = std::hypot(double(b.flow_ts[2 * i]), double(b.flow_ts[2 * i + 1]));
            max_flow = std::max(max_flow, m);
            if (!b.occlusion[i]) {
                mean_flow += m;
                ++visible;
            }
        }
        if (visible < total * 11 / 20) continue;
        mean_flow /= double(visible);
        if (max_flow > params.max_flow || mean_flow < params.min_mean_flow) continue;
        return s;
    }
    fail("make_random_scene: no valid scene in 64 attempts (seed ", seed, ")");
}

namespace {

void photometric_jitter(std::vector<float>& img, double bright, double contrast, double sat,
                        double hue) {
    // hue: rotation about the gray axis; saturation: blend with luma
    const Mat3 hue_rot = rotation_from_axis_angle(Vec3{1, 1, 1}.normalized() * hue);
    for (size_t i = 0; i < img.size(); i += 3) {
        Vec3 c{img[i], img[i + 1], img[i + 2]};
        c = hue_rot * c;
        const double luma = 0.299 * c.x + 0.587 * c.y + 0.114 * c.z;
        c = Vec3{luma, luma, luma} + (c - Vec3{luma, luma, luma}) * sat;
        for (int k = 0; k < 3; ++k) {
            double v = (c[k] - 0.5) * contrast + 0.5 + bright;
            img[i + k] = float(std::clamp(v, 0.0, 1.0));
        }
    }
}

template <typename T>
void mirror_rows(std::vector<T>& v, int H, int W, int ch) {
    std::vector<T> out(v.size());
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < ch; ++c)
                out[(size_t(y) * W + x) * ch + c] = v[(size_t(y) * W + (W - 1 - x)) * ch + c];
    v = std::move(out);
}

template <typename T>
std::vector<T> rot90cw(const std::vector<T>& v, int H, int W, int ch) {
    // output is W x H: out(y', x') = in(H-1-x', y')
    std::vector<T> out(v.size());
    for (int yp = 0; yp < W; ++yp)
        for (int xp = 0; xp < H; ++xp)
            for (int c = 0; c < ch; ++c)
                out[(size_t(yp) * H + xp) * ch + c] =
                    v[(size_t(H - 1 - xp) * W + yp) * ch + c];
    return out;
}

}  // namespace

GroundTruthBundle augment(const GroundTruthBundle& b, const AugmentOps& ops, uint64_t seed) {
    GroundTruthBundle out = b;
    if (ops.photometric) {
        Rng rng(seed_mix(seed, 0xa06));
        const double bright = rng.uniform(-0.12, 0.12);
        const double contrast = rng.uniform(0.85, 1.15);
        const double sat = rng.uniform(0.8, 1.2);
        const double hue = rng.uniform(-0.25, 0.25);
        photometric_jitter(out.image_t, bright, contrast, sat, hue);
        photometric_jitter(out.image_s, bright, contrast, sat, hue);
    }
    if (ops.hflip) {
        const int H = out.height, W = out.width;
        mirror_rows(out.image_t, H, W, 3);
        mirror_rows(out.image_s, H, W, 3);
        mirror_rows(out.depth_t, H, W, 1);
        mirror_rows(out.occlusion, H, W, 1);
        mirror_rows(out.flow_ts, H, W, 2);
        for (size_t i = 0; i < out.flow_ts.size(); i += 2) out.flow_ts[i] = -out.flow_ts[i];
        out.camera.cx = W - 1 - out.camera.cx;
        // conjugation by diag(-1,1,1): axis-angle is a pseudovector
        out.pose_ts.t = {-out.pose_ts.t.x, out.pose_ts.t.y, out.pose_ts.t.z};
        out.pose_ts.r = {out.pose_ts.r.x, -out.pose_ts.r.y, -out.pose_ts.r.z};
    }
    if (ops.rotate90) {
        const int H = out.height, W = out.width;
        out.image_t = rot90cw(out.image_t, H, W, 3);
        out.image_s = rot90cw(out.image_s, H, W, 3);
        out.depth_t = rot90cw(out.depth_t, H, W, 1);
        out.occlusion = rot90cw(out.occlusion, H, W, 1);
        out.flow_ts = rot90cw(out.flow_ts, H, W, 2);
        for (size_t i = 0; i < out.flow_ts.size(); i += 2) {
            const float u = out.flow_ts[i], v = out.flow_ts[i + 1];
            out.flow_ts[i] = -v;
            out.flow_ts[i + 1] = u;
        }
        out.height = W;
        out.width = H;
        const CameraIntrinsics k = out.camera;
        out.camera.fx = k.fy;
        out.camera.fy = k.fx;
        out.camera.cx = H - 1 - k.cy;
        out.camera.cy = k.cx;
        // conjugation by the z-rotation mapping (x,y,z) -> (-y,x,z)
        out.pose_ts.t = {-out.pose_ts.t.y, out.pose_ts.t.x, out.pose_ts.t.z};
        out.pose_ts.r = {-out.pose_ts.r.y, out.pose_ts.r.x, out.pose_ts.r.z};
    }
    return out;
}

namespace {

std::string sample_path(const std::string& dir, int index, const char* suffix) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d_", index);
    return dir + "/" + buf + suffix;
}

}  // namespace

void write_manifest(const std::string& dir, const DatasetManifest& m) {
    nlohmann::json j;
    j["count"] = m.count;
    j["height"] = m.height;
    j["width"] = m.width;
    j["intrinsics"] = {{"fx", m.camera.fx}, {"fy", m.camera.fy}, {"cx", m.camera.cx},
                       {"cy", m.camera.cy}};
    j["seed"] = m.seed;
    std::ofstream f(dir + "/manifest.json");
    DFP_CHECK(f.good(), "cannot write manifest in '", dir, "'");
    f << j.dump(2) << "\n";
}

DatasetManifest read_manifest(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    DFP_CHECK(f.good(), "cannot read '", dir, "/manifest.json'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail("manifest '", dir, "': ", e.what());
    }
    DatasetManifest m;
    m.count = j.at("count").get<int>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.camera.fx = j.at("intrinsics").at("fx").get<double>();
    m.camera.fy = j.at("intrinsics").at("fy").get<double>();
    m.camera.cx = j.at("intrinsics").at("cx").get<double>();
    m.camera.cy = j.at("intrinsics").at("cy").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    DFP_CHECK(m.count >= 0 && m.height > 0 && m.width > 0, "manifest '", dir, "': invalid fields");
    return m;
}

void write_bundle(const std::string& dir, int index, const GroundTruthBundle& b) {
    const int H = b.height, W = b.width;
    auto to_u8 = [&](const std::vector<float>& img) {
        ImageU8 out;
        out.height = H;
        out.width = W;
        out.channels = 3;
        out.data.resize(img.size());
        for (size_t i = 0; i < img.size(); ++i)
            out.data[i] = uint8_t(std::lround(std::clamp(img[i], 0.0f, 1.0f) * 255.0f));
        return out;
    };
    write_png(sample_path(dir, index, "image_t.png"), to_u8(b.image_t));
    write_png(sample_path(dir, index, "image_s.png"), to_u8(b.image_s));
    write_pfm(sample_path(dir, index, "depth_t.pfm"), H, W, b.depth_t.data());
    write_flo(sample_path(dir, index, "flow_ts.flo"), H, W, b.flow_ts.data());
    write_pose_text(sample_path(dir, index, "pose_ts.txt"), {b.pose_ts});
    ImageU8 occ;
    occ.height = H;
    occ.width = W;
    occ.channels = 1;
    occ.data.resize(b.occlusion.size());
    for (size_t i = 0; i < occ.data.size(); ++i) occ.data[i] = b.occlusion[i] ? 255 : 0;
    write_png(sample_path(dir, index, "occ_ts.png"), occ);
}

GroundTruthBundle read_bundle(const std::string& dir, int index, const DatasetManifest& m) {
    GroundTruthBundle b;
    b.height = m.height;
    b.width = m.width;
    b.camera = m.camera;

    auto to_float = [&](const ImageU8& img, int ch, const char* what) {
        DFP_CHECK(img.height == m.height && img.width == m.width && img.channels == ch, what,
                  " sample ", index, ": got ", img.height, "x", img.width, "x", img.channels,
                  ", manifest says ", m.height, "x", m.width, "x", ch);
        std::vector<float> out(img.data.size());
        for (size_t i = 0; i < out.size(); ++i) out[i] = float(img.data[i]) / 255.0f;
        return out;
    };
    b.image_t = to_float(read_png(sample_path(dir, index, "image_t.png")), 3, "image_t");
    b.image_s = to_float(read_png(sample_path(dir, index, "image_s.png")), 3, "image_s");

    PfmImage depth = read_pfm(sample_path(dir, index, "depth_t.pfm"));
    DFP_CHECK(depth.height == m.height && depth.width == m.width, "depth sample ", index,
              ": dims mismatch manifest");
    b.depth_t = std::move(depth.data);

    FloImage flo = read_flo(sample_path(dir, index, "flow_ts.flo"));
    DFP_CHECK(flo.height == m.height && flo.width == m.width, "flow sample ", index,
              ": dims mismatch manifest");
    b.flow_ts = std::move(flo.uv);

    const std::vector<Pose6> poses = read_pose_text(sample_path(dir, index, "pose_ts.txt"));
    DFP_CHECK(poses.size() == 1, "pose sample ", index, ": expected 1 line, got ", poses.size());
    b.pose_ts = poses[0];

    const ImageU8 occ = read_png(sample_path(dir, index, "occ_ts.png"));
    DFP_CHECK(occ.height == m.height && occ.width == m.width && occ.channels == 1, "occ sample ",
              index, ": dims mismatch manifest");
    b.occlusion.resize(occ.data.size());
    for (size_t i = 0; i < occ.data.size(); ++i) b.occlusion[i] = occ.data[i] >= 128 ? 1 : 0;
    return b;
}

}  // namespace dfp
