#include "dfp/geometry.hpp"

#include <cmath>

namespace dfp {

namespace {

const CameraIntrinsics& k_for(const IntrinsicsBatch& K, int n) {
    return K.size() == 1 ? K[0] : K[static_cast<size_t>(n)];
}

}  // namespace

template <typename T>
Tensor<T> make_pixel_grid(int n, int h, int w) {
    Tensor<T> g = Tensor<T>::zeros({n, 2, h, w});
    T* p = g.data();
    const int64_t plane = int64_t(h) * w;
    for (int i = 0; i < n; ++i) {
        T* pu = p + int64_t(i) * 2 * plane;
        T* pv = pu + plane;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                pu[int64_t(y) * w + x] = static_cast<T>(x);
                pv[int64_t(y) * w + x] = static_cast<T>(y);
            }
    }
    return g;
}

template <typename T>
Tensor<T> pose_to_matrix(const Tensor<T>& pose) {
    const Shape& s = pose.shape();
    DFP_CHECK(s.size() == 2 && s[1] == 6, "pose_to_matrix: expected [N,6], got ", shape_str(s));
    const int N = s[0];
    Tensor<T> out = Tensor<T>::zeros({N, 12});
    const T* pp = pose.data();
    T* po = out.data();
    for (int n = 0; n < N; ++n) {
        const T* v = pp + n * 6;
        const Vec3 r{static_cast<double>(v[3]), static_cast<double>(v[4]),
                     static_cast<double>(v[5])};
        const Mat3 R = rotation_from_axis_angle(r);
        T* m = po + n * 12;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i * 4 + j] = static_cast<T>(R(i, j));
            m[i * 4 + 3] = v[i];
        }
    }
    if (tracing<T>({&pose})) {
        record<T>("pose_to_matrix", {pose}, out, [pose = pose, out, N]() mutable {
            const T* g = out.grad().data();
            const T* pp = pose.values().data();
            T* gp = pose.grad().data();
            for (int n = 0; n < N; ++n) {
                const T* v = pp + n * 6;
                const T* gm = g + n * 12;
                const Vec3 r{static_cast<double>(v[3]), static_cast<double>(v[4]),
                             static_cast<double>(v[5])};
                const auto jac = rotation_jacobian(r);
                T* gv = gp + n * 6;
                for (int i = 0; i < 3; ++i) gv[i] += gm[i * 4 + 3];
                for (int k = 0; k < 3; ++k) {
                    double acc = 0;
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j)
                            acc += static_cast<double>(gm[i * 4 + j]) * jac[k](i, j);
                    gv[3 + k] += static_cast<T>(acc);
                }
            }
        });
    }
    return out;
}

namespace {

// shared by forward and backward: lift pixel, transform, project
struct ProjPoint {
    double X, Y, Z;     // lifted target-frame point
    double Xs, Ys, Zs;  // transformed point
    double zc;          // clamped depth used in division
    bool valid;
};

template <typename T>
inline ProjPoint project_point(double u, double v, double d, const T* m,
                               const CameraIntrinsics& k) {
    ProjPoint p;
    p.X = (u - k.cx) / k.fx * d;
    p.Y = (v - k.cy) / k.fy * d;
    p.Z = d;
    p.Xs = double(m[0]) * p.X + double(m[1]) * p.Y + double(m[2]) * p.Z + double(m[3]);
    p.Ys = double(m[4]) * p.X + double(m[5]) * p.Y + double(m[6]) * p.Z + double(m[7]);
    p.Zs = double(m[8]) * p.X + double(m[9]) * p.Y + double(m[10]) * p.Z + double(m[11]);
    p.valid = p.Zs > kZMin;
    p.zc = p.valid ? p.Zs : kZMin;
    return p;
}

}  // namespace

template <typename T>
std::pair<Tensor<T>, Tensor<T>> project(const Tensor<T>& depth, const Tensor<T>& posemat,
                                        const IntrinsicsBatch& K) {
    const Shape& ds = depth.shape();
    DFP_CHECK(ds.size() == 4 && ds[1] == 1, "project: depth must be [N,1,H,W], got ",
              shape_str(ds));
    const int N = ds[0], H = ds[2], W = ds[3];
    DFP_CHECK(posemat.shape() == (Shape{N, 12}), "project: pose matrix must be [", N,
              ",12], got ", shape_str(posemat.shape()));
    DFP_CHECK(K.size() == 1 || static_cast<int>(K.size()) == N,
              "project: need 1 or N intrinsics, got ", K.size());
    const int64_t plane = int64_t(H) * W;

    Tensor<T> coords = Tensor<T>::zeros({N, 2, H, W});
    Tensor<T> valid = Tensor<T>::zeros({N, 1, H, W});
    const T* pd = depth.data();
    const T* pm = posemat.data();
    T* pc = coords.data();
    T* pv = valid.data();
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        const CameraIntrinsics& k = k_for(K, n);
        const T* m = pm + n * 12;
        const T* dp = pd + n * plane;
        T* cu = pc + int64_t(n) * 2 * plane;
        T* cv = cu + plane;
        T* vp = pv + n * plane;
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const int64_t i = int64_t(y) * W + x;
                const ProjPoint p =
                    project_point(double(x), double(y), double(dp[i]), m, k);
                cu[i] = static_cast<T>(k.fx * p.Xs / p.zc + k.cx);
                cv[i] = static_cast<T>(k.fy * p.Ys / p.zc + k.cy);
                vp[i] = p.valid ? T(1) : T(0);
            }
        }
    }
    if (tracing<T>({&depth, &posemat})) {
        record<T>("project", {depth, posemat}, coords,
                  [depth = depth, posemat = posemat, coords, K, N, H, W, plane]() mutable {
                      const T* g = coords.grad().data();
                      const T* pd = depth.values().data();
                      const T* pm = posemat.values().data();
                      T* gd = depth.grad().data();
                      T* gm = posemat.grad().data();
                      const bool need_depth = depth.requires_grad();
                      const bool need_pose = posemat.requires_grad();
#pragma omp parallel for schedule(static)
                      for (int n = 0; n < N; ++n) {
                          const CameraIntrinsics& k = k_for(K, n);
                          const T* m = pm + n * 12;
                          const T* dp = pd + n * plane;
                          T* gdp = gd + n * plane;
                          double gmat[12] = {};
                          const T* gu = g + int64_t(n) * 2 * plane;
                          const T* gv = gu + plane;
                          for (int y = 0; y < H; ++y) {
                              for (int x = 0; x < W; ++x) {
                                  const int64_t i = int64_t(y) * W + x;
                                  const ProjPoint p =
                                      project_point(double(x), double(y), double(dp[i]), m, k);
                                  const double du = static_cast<double>(gu[i]);
                                  const double dv = static_cast<double>(gv[i]);
                                  // d(out)/d(Xs,Ys,Zs)
                                  const double gXs = du * k.fx / p.zc;
                                  const double gYs = dv * k.fy / p.zc;
                                  double gZs = 0;
                                  if (p.valid)
                                      gZs = -(du * k.fx * p.Xs + dv * k.fy * p.Ys) /
                                            (p.zc * p.zc);
                                  if (need_pose) {
                                      gmat[0] += gXs * p.X;
                                      gmat[1] += gXs * p.Y;
                                      gmat[2] += gXs * p.Z;
                                      gmat[3] += gXs;
                                      gmat[4] += gYs * p.X;
                                      gmat[5] += gYs * p.Y;
                                      gmat[6] += gYs * p.Z;
                                      gmat[7] += gYs;
                                      gmat[8] += gZs * p.X;
                                      gmat[9] += gZs * p.Y;
                                      gmat[10] += gZs * p.Z;
                                      gmat[11] += gZs;
                                  }
                                  if (need_depth) {
                                      const double lx = (double(x) - k.cx) / k.fx;
                                      const double ly = (double(y) - k.cy) / k.fy;
                                      gdp[i] += static_cast<T>(
                                          gXs * (double(m[0]) * lx + double(m[1]) * ly +
                                                 double(m[2])) +
                                          gYs * (double(m[4]) * lx + double(m[5]) * ly +
                                                 double(m[6])) +
                                          gZs * (double(m[8]) * lx + double(m[9]) * ly +
                                                 double(m[10])));
                                  }
                              }
                          }
                          if (need_pose) {
                              T* gmp = gm + n * 12;
                              for (int j = 0; j < 12; ++j) gmp[j] += static_cast<T>(gmat[j]);
                          }
                      }
                  });
    }
    return {coords, valid};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> synthesize_view(const Tensor<T>& source, const Tensor<T>& depth,
                                                const Tensor<T>& pose6,
                                                const IntrinsicsBatch& K) {
    DFP_CHECK(source.shape().size() == 4 && source.shape()[0] == depth.shape()[0] &&
                  source.shape()[2] == depth.shape()[2] && source.shape()[3] == depth.shape()[3],
              "synthesize_view: source ", shape_str(source.shape()),
              " inconsistent with depth ", shape_str(depth.shape()));
    Tensor<T> mat = pose_to_matrix(pose6);
    auto [coords, valid_p] = project(depth, mat, K);
    auto [warped, valid_s] = bilinear_sample(source, coords);
    Tensor<T> valid = mul(valid_p, valid_s);  // both masks are constants
    return {warped, valid};
}

#define DFP_INSTANTIATE(T)                                                              \
    template Tensor<T> make_pixel_grid(int, int, int);                                  \
    template Tensor<T> pose_to_matrix(const Tensor<T>&);                                \
    template std::pair<Tensor<T>, Tensor<T>> project(const Tensor<T>&, const Tensor<T>&, \
                                                     const IntrinsicsBatch&);           \
    template std::pair<Tensor<T>, Tensor<T>> synthesize_view(                           \
        const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const IntrinsicsBatch&);

DFP_INSTANTIATE(float)
DFP_INSTANTIATE(double)
#undef DFP_INSTANTIATE

}  // namespace dfp
