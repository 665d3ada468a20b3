#pragma once

// Procedural rigid scenes built from textured planes, rendered analytically in
// double precision so depth, flow, pose, and occlusion ground truth are exact.
// A scene is a set of (possibly bounded) planes n.X = d in the frame-t camera,
// plus the camera motion from frame t to t+1. Textures are functions of the
// 3D point on the plane, so the two rendered views satisfy brightness
// constancy by construction.

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dfp/se3.hpp"

namespace dfp {

struct TextureSpec {
    enum class Kind { noise, checker };
    Kind kind = Kind::noise;

    // noise: base color plus band-limited sinusoids in plane coordinates.
    // Frequencies are in cycles per scene unit; scene sampling keeps the
    // projected period >= ~14 px so bilinear resampling stays within the
    // brightness-constancy budget.
    std::array<double, 3> base{0.5, 0.5, 0.5};
    struct Wave {
        double fu = 1, fv = 0, phase = 0;
        std::array<double, 3> amp{0.1, 0.1, 0.1};
    };
    std::vector<Wave> waves;

    // checker: two colors with tanh-softened edges (hard edges would alias and
    // break the constancy tolerance)
    double period = 1.0;
    double softness = 0.5;
    std::array<double, 3> color_a{0.3, 0.3, 0.3}, color_b{0.7, 0.7, 0.7};
};

struct PlaneSpec {
    Vec3 n{0, 0, 1};  // unit normal, n.z > 0 (faces the camera)
    double d = 4;     // plane equation n.X = d, frame-t coordinates

    Vec3 p0{0, 0, 4};            // texture origin / patch center, on the plane
    Vec3 e1{1, 0, 0}, e2{0, 1, 0};  // in-plane orthonormal texture axes
    // half extents of the textured patch along e1/e2; infinity = whole plane
    double half1 = std::numeric_limits<double>::infinity();
    double half2 = std::numeric_limits<double>::infinity();

    TextureSpec texture;

    // fills p0 (closest point to the origin), e1, e2 from n and d
    void complete_frame();
};

struct SyntheticScene {
    int height = 64, width = 128;
    CameraIntrinsics camera;
    std::vector<PlaneSpec> planes;
    Pose6 motion;       // camera motion t -> t+1: frame-(t+1) pose in frame-t coords
    uint64_t seed = 0;  // recorded provenance; rendering itself is seed-free
    double min_depth = 0.5, max_depth = 12.0;  // validity band for both frames
};

struct GroundTruthBundle {
    int height = 0, width = 0;
    CameraIntrinsics camera;
    std::vector<float> image_t, image_s;  // [H*W*3] RGB in [0,1]
    std::vector<float> depth_t;           // [H*W] metric z-depth, frame t
    std::vector<float> flow_ts;           // [H*W*2] interleaved (u,v), target -> source
    std::vector<uint8_t> occlusion;       // [H*W] 1 = leaves frame or is occluded in s
    Pose6 pose_ts;                        // point transform frame t -> frame s
};

// Ray-casts both views and the exact flow/occlusion ground truth.
// Fails if any pixel of either frame misses the scene or lands outside
// [min_depth, max_depth].
GroundTruthBundle render_pair(const SyntheticScene& scene);

// The frame-t pixel ground truth in full double precision (the same
// plane-intersection path render_pair uses, minus the float rounding of the
// stored bundle). Tests compare this against the lift->transform->project
// chain of the geometry module.
struct PixelTruth {
    double depth = 0;
    double du = 0, dv = 0;
    bool occluded = false;
};
PixelTruth exact_pixel_truth(const SyntheticScene& scene, int x, int y);

// Max over non-occluded pixels of |image_s sampled at p+flow  -  image_t(p)|
// (bilinear, any channel). The renderer's self-consistency number; generated
// datasets must keep it under 0.02.
double constancy_max_error(const GroundTruthBundle& b);

struct SceneParams {
    int width = 128, height = 64;
    double fx = 0, fy = 0, cx = -1, cy = -1;  // <=0 / <0: derived from width/height

    int max_foreground = 3;         // bounded planes in front of the backdrop
    double backdrop_lo = 4.0, backdrop_hi = 7.0;
    double foreground_lo = 1.6, foreground_hi = 4.0;
    double slant_max = 0.6;         // max tilt of a foreground normal, radians
    double trans_lo = 0.05, trans_hi = 0.22;  // |camera translation| per pair
    double rot_max = 0.02;          // per-axis rotation bound, radians
    double max_flow = 16.0;         // reject scenes with larger |flow|, px
    double min_mean_flow = 0.25;    // reject near-static scenes, px
    double min_depth = 0.8, max_depth = 9.5;
    double checker_prob = 0.0;      // fraction of planes textured as checkerboards

    void validate() const;
    CameraIntrinsics intrinsics() const;
};

// Rejection-samples a scene that renders cleanly (full coverage, depth band,
// flow bounds). Deterministic in (params, seed).
SyntheticScene make_random_scene(const SceneParams& params, uint64_t seed);

struct AugmentOps {
    bool photometric = false;  // brightness/contrast/saturation/hue, same jitter both frames
    bool hflip = false;        // mirror x; flow u negated, cx mirrored, pose reflected
    bool rotate90 = false;     // 90 deg clockwise; swaps image dims
};

// Geometric ground truth stays exact through every op; photometric jitter is
// applied to the RGB images only (pre-grayscale), identically on both frames.
GroundTruthBundle augment(const GroundTruthBundle& b, const AugmentOps& ops, uint64_t seed);

// On-disk dataset: manifest.json plus, per sample i (zero-padded to 6 digits),
//   {i}_image_t.png  {i}_image_s.png   8-bit RGB
//   {i}_depth_t.pfm                    float32 "Pf"
//   {i}_flow_ts.flo                    float32 Middlebury
//   {i}_pose_ts.txt                    one line, tx ty tz rx ry rz
//   {i}_occ_ts.png                     8-bit gray, 255 = occluded
struct DatasetManifest {
    int count = 0;
    int height = 0, width = 0;
    CameraIntrinsics camera;
    uint64_t seed = 0;
};

void write_manifest(const std::string& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::string& dir);
void write_bundle(const std::string& dir, int index, const GroundTruthBundle& b);
GroundTruthBundle read_bundle(const std::string& dir, int index, const DatasetManifest& m);

}  // namespace dfp
