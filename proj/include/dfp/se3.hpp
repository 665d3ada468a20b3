#pragma once

// Plain double-precision 3D math: vectors, rotations, rigid transforms, and
// the Rodrigues map with its analytic derivative. Shared by the
// differentiable geometry ops, the scene generator, and the metrics.

#include <array>
#include <cmath>

namespace dfp {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

struct Mat3 {
    // row-major
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return {}; }
    static Mat3 zero() { return {{0, 0, 0, 0, 0, 0, 0, 0, 0}}; }

    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r = zero();
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 3; ++j) r.m[i * 3 + j] += m[i * 3 + k] * o.m[k * 3 + j];
        return r;
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
        return r;
    }
    Mat3 scaled(double s) const {
        Mat3 r;
        for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[j * 3 + i] = m[i * 3 + j];
        return r;
    }
};

inline Mat3 skew(const Vec3& v) {
    Mat3 k = Mat3::zero();
    k(0, 1) = -v.z; k(0, 2) = v.y;
    k(1, 0) = v.z;  k(1, 2) = -v.x;
    k(2, 0) = -v.y; k(2, 1) = v.x;
    return k;
}

// Rodrigues coefficients a = sin(t)/t, b = (1-cos(t))/t^2 and their radial
// derivative factors c1 = (t cos t - sin t)/t^3, c2 = (t sin t - 2(1-cos t))/t^4,
// with series fallbacks near t = 0.
struct RodriguesCoeffs {
    double a, b, c1, c2;
};

inline RodriguesCoeffs rodrigues_coeffs(double theta) {
    RodriguesCoeffs c;
    const double t2 = theta * theta;
    if (theta < 1e-4) {
        c.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        c.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
        c.c1 = -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0;
        c.c2 = -1.0 / 12.0 + t2 / 180.0 - t2 * t2 / 6720.0;
    } else {
        const double s = std::sin(theta), co = std::cos(theta);
        c.a = s / theta;
        c.b = (1.0 - co) / t2;
        c.c1 = (theta * co - s) / (t2 * theta);
        c.c2 = (theta * s - 2.0 * (1.0 - co)) / (t2 * t2);
    }
    return c;
}

// R = I + a K + b K^2, K = [r]x (exponential map of so(3))
inline Mat3 rotation_from_axis_angle(const Vec3& r) {
    const RodriguesCoeffs c = rodrigues_coeffs(r.norm());
    const Mat3 k = skew(r);
    return Mat3::identity() + k.scaled(c.a) + (k * k).scaled(c.b);
}

// dR/dr_i = c1 r_i K + a [e_i]x + c2 r_i K^2 + b ([e_i]x K + K [e_i]x)
inline std::array<Mat3, 3> rotation_jacobian(const Vec3& r) {
    const RodriguesCoeffs c = rodrigues_coeffs(r.norm());
    const Mat3 k = skew(r);
    const Mat3 k2 = k * k;
    std::array<Mat3, 3> jac;
    const double ri[3] = {r.x, r.y, r.z};
    for (int i = 0; i < 3; ++i) {
        Vec3 e{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0};
        const Mat3 ei = skew(e);
        jac[i] = k.scaled(c.c1 * ri[i]) + ei.scaled(c.a) + k2.scaled(c.c2 * ri[i]) +
                 (ei * k + k * ei).scaled(c.b);
    }
    return jac;
}

// Rigid transform X' = R X + t
struct SE3 {
    Mat3 R;
    Vec3 t;

    static SE3 identity() { return {}; }
    Vec3 operator*(const Vec3& v) const { return R * v + t; }
    SE3 operator*(const SE3& o) const { return {R * o.R, R * o.t + t}; }
    SE3 inverse() const {
        const Mat3 rt = R.transposed();
        return {rt, -(rt * t)};
    }
};

// 6-DoF pose: translation first, then axis-angle rotation
struct Pose6 {
    Vec3 t, r;

    SE3 transform() const { return {rotation_from_axis_angle(r), t}; }
    // The pose of the undone motion: applying transform() then
    // inverse_motion().transform() is the identity.
    Pose6 inverse_motion() const {
        const Mat3 rt = rotation_from_axis_angle(r).transposed();
        return {-(rt * t), -r};
    }
};

struct CameraIntrinsics {
    double fx = 1, fy = 1, cx = 0, cy = 0;

    // Intrinsics of the image downsampled l times by 2x2 averaging
    // (pixel centers at (i+0.5)*2-0.5 of the parent grid).
    CameraIntrinsics at_level(int l) const {
        CameraIntrinsics k = *this;
        for (int i = 0; i < l; ++i) {
            k.fx *= 0.5;
            k.fy *= 0.5;
            k.cx = (k.cx + 0.5) * 0.5 - 0.5;
            k.cy = (k.cy + 0.5) * 0.5 - 0.5;
        }
        return k;
    }
};

}  // namespace dfp
