#pragma once

// Toy-scale DFPNet: one shared pyramidal feature encoder feeding three decoder
// heads (depth, flow+occlusion, pose). Sized for desk experiments; every width
// is a config knob and the builder reports the resulting parameter count.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dfp/ops.hpp"
#include "dfp/rng.hpp"
#include "dfp/tensor.hpp"

namespace dfp {

struct DFPNetConfig {
    int levels = 5;
    std::vector<int> channels_per_level = {16, 32, 32, 64, 64};
    int input_height = 64;
    int input_width = 128;
    int max_disp = 4;          // cost volume search radius, pixels per level
    double dropout_rate = 0.0; // spatial dropout after each encoder level
    // Depth band the sigmoid head can express. The defaults bracket the
    // synthetic generator's depth band exactly; a loose lower bound gives the
    // depth head room to absorb the depth/translation scale ambiguity early in
    // training (disparity inflates until it saturates the clamp and the map
    // goes flat), so keep this tight around the scenes being trained on.
    double min_depth = 0.8;
    double max_depth = 9.5;

    // Decoder widths are not pinned down externally; these defaults scale with
    // the encoder. Hidden width 3C/4 clamped to [16,48] reproduces
    // {16,24,24,48,48} for the default encoder.
    int hidden_width(int level) const {
        int h = channels_per_level[level] * 3 / 4;
        return h < 16 ? 16 : (h > 48 ? 48 : h);
    }
    static constexpr int kCostChannels = 24;  // 1x1 cost-volume compression
    static constexpr int kPoseHidden = 16;
    static constexpr int kPoseLevels = 3;  // mid-pyramid levels 1..N feed the pose head

    void validate() const;
};

struct FeaturePyramid {
    std::vector<Tensor<float>> levels;  // [N, C_l, H/2^l, W/2^l]
};

struct DFPOutput {
    std::vector<Tensor<float>> depth;  // per level, [N,1,...]; [0] is full-res
    std::vector<Tensor<float>> flow;   // per level, [N,2,...], level-l pixel units
    std::vector<Tensor<float>> occ;    // per level, [N,1,...], values in [0,1]
    Tensor<float> pose;                // [N,6] (tx,ty,tz,rx,ry,rz), frame t -> s
};

// conv (+ optional group-norm + leaky ReLU) with registered parameters
struct ConvBlock {
    Tensor<float> w, b, gn_gamma, gn_beta;
    int stride = 1;
    bool norm_act = true;
    int groups = 1;

    Tensor<float> apply(const Tensor<float>& x) const;
};

class DFPNet {
  public:
    DFPNet(const DFPNetConfig& cfg, uint64_t init_seed);

    // Both frames pass through the encoder in one stacked batch (shared
    // weights), then split back per frame. training enables spatial dropout;
    // seed individualizes the dropout pattern per call.
    std::pair<FeaturePyramid, FeaturePyramid> encode(const Tensor<float>& img_t,
                                                     const Tensor<float>& img_s, bool training,
                                                     uint64_t seed) const;

    // Coarse-to-fine inverse-depth regression; outputs indexed by level.
    std::vector<Tensor<float>> decode_depth(const FeaturePyramid& pyr_t) const;

    struct FlowDecode {
        std::vector<Tensor<float>> flow, occ;
    };
    FlowDecode decode_flow(const FeaturePyramid& pyr_t, const FeaturePyramid& pyr_s) const;

    Tensor<float> decode_pose(const FeaturePyramid& pyr_t, const FeaturePyramid& pyr_s) const;

    DFPOutput forward(const Tensor<float>& img_t, const Tensor<float>& img_s, bool training,
                      uint64_t seed) const;

    // Both temporal directions in one batched decoder pass: encodes once and
    // stacks (t,s) with (s,t) on the batch axis. Identical math to two
    // forward() calls (bit-exact when dropout is off), roughly 1.5x cheaper.
    struct PairOutput {
        DFPOutput fwd, bwd;  // fwd: t -> s, bwd: s -> t
    };
    PairOutput forward_pair(const Tensor<float>& img_t, const Tensor<float>& img_s,
                            bool training, uint64_t seed) const;

    const DFPNetConfig& config() const { return cfg_; }
    // registration order is fixed by construction; checkpoints key on names
    const std::vector<std::pair<std::string, Tensor<float>>>& parameters() const {
        return params_;
    }
    Tensor<float> parameter(const std::string& name) const;
    int64_t parameter_count() const;

  private:
    Tensor<float> register_param(const std::string& name, Shape shape, float init_std,
                                 Rng& rng);
    ConvBlock make_conv(const std::string& name, int cin, int cout, int stride, bool norm_act,
                        Rng& rng);

    DFPNetConfig cfg_;
    std::vector<std::pair<std::string, Tensor<float>>> params_;

    std::vector<std::vector<ConvBlock>> enc_;           // [level][3]
    std::vector<std::vector<ConvBlock>> dd_;            // [level][3], last is head
    std::vector<ConvBlock> fd_compress_;                // [level] 1x1 on cost volume
    std::vector<std::vector<ConvBlock>> fd_;            // [level][3], last is head
    ConvBlock fd_occ_;                                  // occlusion head at level 1
    std::vector<std::vector<ConvBlock>> pd_;            // [pose level][2]
    std::vector<std::pair<Tensor<float>, Tensor<float>>> pd_fc_;  // zero-init (w,b)
};

}  // namespace dfp
