#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "dfp/geometry.hpp"
#include "dfp/ops.hpp"

using namespace dfp;

namespace {

Mat3 rot_from_tensor_row(const Tensor<double>& m, int row) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = m.data()[row * 12 + i * 4 + j];
    return r;
}

}  // namespace

TEST_CASE("pose_to_matrix: zero pose is the identity transform") {
    Tensor<double> pose = Tensor<double>::zeros({1, 6});
    Tensor<double> m = pose_to_matrix(pose);
    REQUIRE(m.shape() == Shape{1, 12});
    const double want[12] = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
    for (int i = 0; i < 12; ++i) CHECK(std::abs(m.data()[i] - want[i]) < 1e-15);
}

TEST_CASE("pose_to_matrix: quarter turn about z") {
    Tensor<double> pose = Tensor<double>::from({1, 6}, {0, 0, 0, 0, 0, M_PI / 2});
    Tensor<double> m = pose_to_matrix(pose);
    // rows of [R|t]: R = [[0,-1,0],[1,0,0],[0,0,1]]
    const double want[12] = {0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0};
    for (int i = 0; i < 12; ++i) CHECK(std::abs(m.data()[i] - want[i]) < 1e-12);
}

TEST_CASE("pose_to_matrix matches the Eigen axis-angle oracle") {
    Rng rng(21);
    for (int inst = 0; inst < 50; ++inst) {
        Tensor<double> pose = Tensor<double>::uniform({2, 6}, rng, -2.0, 2.0);
        Tensor<double> m = pose_to_matrix(pose);
        for (int n = 0; n < 2; ++n) {
            Eigen::Vector3d r(pose.data()[n * 6 + 3], pose.data()[n * 6 + 4],
                              pose.data()[n * 6 + 5]);
            Eigen::Matrix3d want = Eigen::Matrix3d::Identity();
            if (r.norm() > 0) want = Eigen::AngleAxisd(r.norm(), r.normalized()).toRotationMatrix();
            double frob = 0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double d = m.data()[n * 12 + i * 4 + j] - want(i, j);
                    frob += d * d;
                }
            CHECK(std::sqrt(frob) < 1e-10);
            // translation column passes through untouched
            for (int i = 0; i < 3; ++i)
                CHECK(m.data()[n * 12 + i * 4 + 3] == pose.data()[n * 6 + i]);
        }
    }
}

TEST_CASE("rotation round-trips through the matrix logarithm") {
    Rng rng(22);
    for (int inst = 0; inst < 50; ++inst) {
        // stay inside the injectivity radius of the exponential map
        Vec3 axis{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double angle = rng.uniform(1e-3, M_PI - 0.1);
        const Vec3 r = axis.normalized() * angle;

        Tensor<double> pose = Tensor<double>::from({1, 6}, {0, 0, 0, r.x, r.y, r.z});
        const Mat3 R = rot_from_tensor_row(pose_to_matrix(pose), 0);
        Eigen::Matrix3d em;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) em(i, j) = R(i, j);
        const Eigen::AngleAxisd aa(em);
        const Eigen::Vector3d back = aa.angle() * aa.axis();
        CHECK(std::abs(back.x() - r.x) < 1e-6);
        CHECK(std::abs(back.y() - r.y) < 1e-6);
        CHECK(std::abs(back.z() - r.z) < 1e-6);
    }
}

TEST_CASE("make_pixel_grid holds pixel coordinates") {
    Tensor<double> g = make_pixel_grid<double>(1, 2, 3);
    REQUIRE(g.shape() == Shape{1, 2, 2, 3});
    // channel 0 = u
    CHECK(g.data()[0] == 0.0);
    CHECK(g.data()[2] == 2.0);
    CHECK(g.data()[3] == 0.0);
    // channel 1 = v
    CHECK(g.data()[6] == 0.0);
    CHECK(g.data()[9] == 1.0);
}

TEST_CASE("project: identity pose maps every pixel to itself") {
    Rng rng(23);
    const int H = 4, W = 6;
    CameraIntrinsics K{50.0, 55.0, 2.5, 1.5};
    Tensor<double> depth = Tensor<double>::uniform({1, 1, H, W}, rng, 1.0, 5.0);
    auto [coords, valid] = project(depth, pose_to_matrix(Tensor<double>::zeros({1, 6})), {K});
    Tensor<double> grid = make_pixel_grid<double>(1, H, W);
    for (int i = 0; i < 2 * H * W; ++i)
        CHECK(std::abs(coords.data()[i] - grid.data()[i]) < 1e-12);
    for (int i = 0; i < H * W; ++i) CHECK(valid.data()[i] == 1.0);
}

TEST_CASE("project: fronto-parallel plane under camera translation tx shifts by -fx*tx/Z") {
    const int H = 3, W = 4;
    CameraIntrinsics K{40.0, 40.0, 1.5, 1.0};
    const double Z = 2.5, tx = 0.2;
    Tensor<double> depth = Tensor<double>::full({1, 1, H, W}, Z);
    // the camera moves +tx; project() wants the induced point transform
    Pose6 camera_motion{{tx, 0, 0}, {0, 0, 0}};
    const Pose6 pt = camera_motion.inverse_motion();
    Tensor<double> pose =
        Tensor<double>::from({1, 6}, {pt.t.x, pt.t.y, pt.t.z, pt.r.x, pt.r.y, pt.r.z});
    auto coords = project(depth, pose_to_matrix(pose), {K}).first;
    Tensor<double> grid = make_pixel_grid<double>(1, H, W);
    const double du = -K.fx * tx / Z;
    for (int i = 0; i < H * W; ++i) {
        CHECK(std::abs(coords.data()[i] - (grid.data()[i] + du)) < 1e-9);
        CHECK(std::abs(coords.data()[H * W + i] - grid.data()[H * W + i]) < 1e-9);
    }
}

TEST_CASE("project: rotation about the optical axis spins pixels around the principal point") {
    const int H = 4, W = 4;
    CameraIntrinsics K{30.0, 30.0, 1.5, 1.5};  // fx == fy so the motion is a pure 2D rotation
    const double phi = 0.3;
    Tensor<double> depth = Tensor<double>::full({1, 1, H, W}, 3.0);
    Tensor<double> pose = Tensor<double>::from({1, 6}, {0, 0, 0, 0, 0, phi});
    auto coords = project(depth, pose_to_matrix(pose), {K}).first;
    const double c = std::cos(phi), s = std::sin(phi);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double uc = x - K.cx, vc = y - K.cy;
            // pixel v grows downward while camera y is down too; rot_z applies
            // directly in (u,v) with fx = fy
            const double wu = K.cx + c * uc - s * vc;
            const double wv = K.cy + s * uc + c * vc;
            CHECK(std::abs(coords.data()[y * W + x] - wu) < 1e-9);
            CHECK(std::abs(coords.data()[H * W + y * W + x] - wv) < 1e-9);
        }
}

TEST_CASE("project: points behind the camera are flagged invalid") {
    CameraIntrinsics K{10.0, 10.0, 0.5, 0.5};
    Tensor<double> depth = Tensor<double>::full({1, 1, 2, 2}, 1.0);
    // translate far along -z so transformed depth goes negative
    Tensor<double> pose = Tensor<double>::from({1, 6}, {0, 0, -2.0, 0, 0, 0});
    auto [coords, valid] = project(depth, pose_to_matrix(pose), {K});
    for (int i = 0; i < 4; ++i) CHECK(valid.data()[i] == 0.0);
    for (double v : coords.values()) CHECK(std::isfinite(v));
}

TEST_CASE("synthesize_view: identity pose reproduces the source exactly") {
    Rng rng(24);
    const int H = 6, W = 8;
    CameraIntrinsics K{0.9 * W, 0.9 * W, (W - 1) / 2.0, (H - 1) / 2.0};
    Tensor<double> src = Tensor<double>::uniform({1, 1, H, W}, rng, 0.0, 1.0);
    Tensor<double> depth = Tensor<double>::uniform({1, 1, H, W}, rng, 1.0, 6.0);
    auto [synth, valid] = synthesize_view(src, depth, Tensor<double>::zeros({1, 6}), {K});
    for (int i = 0; i < H * W; ++i) CHECK(std::abs(synth.data()[i] - src.data()[i]) < 1e-6);
    // the lift->project round trip can land a border coordinate 1 ulp outside
    // the image, so the validity guarantee is only asserted on the interior
    for (int y = 1; y < H - 1; ++y)
        for (int x = 1; x < W - 1; ++x) CHECK(valid.data()[y * W + x] == 1.0);
}

TEST_CASE("synthesize_view: jointly scaling depth and translation changes nothing") {
    Rng rng(25);
    const int H = 6, W = 8;
    CameraIntrinsics K{0.9 * W, 0.9 * W, (W - 1) / 2.0, (H - 1) / 2.0};
    for (int inst = 0; inst < 10; ++inst) {
        Tensor<double> src = Tensor<double>::uniform({1, 1, H, W}, rng, 0.0, 1.0);
        Tensor<double> depth = Tensor<double>::uniform({1, 1, H, W}, rng, 2.0, 5.0);
        Tensor<double> pose = Tensor<double>::zeros({1, 6});
        for (int i = 0; i < 3; ++i) pose.data()[i] = rng.uniform(-0.1, 0.1);
        for (int i = 3; i < 6; ++i) pose.data()[i] = rng.uniform(-0.05, 0.05);

        const double s = rng.uniform(0.25, 4.0);
        Tensor<double> depth_s = scale(depth, s);
        Tensor<double> pose_s = pose;  // aliasing is fine, we copy below
        Tensor<double> pose_scaled = Tensor<double>::zeros({1, 6});
        for (int i = 0; i < 6; ++i)
            pose_scaled.data()[i] = pose_s.data()[i] * (i < 3 ? s : 1.0);

        Tensor<double> a = synthesize_view(src, depth, pose, {K}).first;
        Tensor<double> b = synthesize_view(src, depth_s, pose_scaled, {K}).first;
        for (int i = 0; i < H * W; ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-7);
    }
}

TEST_CASE("SE3 algebra: inverse and associativity") {
    Rng rng(26);
    auto random_pose = [&]() {
        Pose6 p;
        p.t = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        p.r = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
        return p;
    };
    for (int inst = 0; inst < 50; ++inst) {
        const SE3 a = random_pose().transform();
        const SE3 b = random_pose().transform();
        const SE3 c = random_pose().transform();

        const SE3 id = a * a.inverse();
        for (int i = 0; i < 9; ++i)
            CHECK(std::abs(id.R.m[i] - Mat3::identity().m[i]) < 1e-9);
        CHECK(id.t.norm() < 1e-9);

        const SE3 ab_c = (a * b) * c;
        const SE3 a_bc = a * (b * c);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(ab_c.R.m[i] - a_bc.R.m[i]) < 1e-9);
        CHECK((ab_c.t - a_bc.t).norm() < 1e-9);

        // inverse_motion undoes the motion
        Pose6 p = random_pose();
        const SE3 round = p.inverse_motion().transform() * p.transform();
        for (int i = 0; i < 9; ++i)
            CHECK(std::abs(round.R.m[i] - Mat3::identity().m[i]) < 1e-9);
        CHECK(round.t.norm() < 1e-9);
    }
}

TEST_CASE("intrinsics pyramid halving keeps pixel centers aligned") {
    CameraIntrinsics K{100.0, 90.0, 63.5, 31.5};
    CameraIntrinsics k1 = K.at_level(1);
    CHECK(k1.fx == doctest::Approx(50.0));
    CHECK(k1.fy == doctest::Approx(45.0));
    CHECK(k1.cx == doctest::Approx((63.5 + 0.5) * 0.5 - 0.5));
    CHECK(k1.cy == doctest::Approx((31.5 + 0.5) * 0.5 - 0.5));
    // two single-level steps compose to one double step
    CameraIntrinsics k2a = K.at_level(2);
    CameraIntrinsics k2b = K.at_level(1).at_level(1);
    CHECK(k2a.fx == doctest::Approx(k2b.fx));
    CHECK(k2a.cx == doctest::Approx(k2b.cx));
    CHECK(k2a.cy == doctest::Approx(k2b.cy));
}
