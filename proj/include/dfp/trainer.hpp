#pragma once

// Training / evaluation drivers. Everything random is derived statelessly
// from (config seed, step/epoch index) via seed_mix, so a run resumed from a
// checkpoint retraces the uninterrupted run exactly: the shuffle order is a
// function of the epoch, dropout and augmentation are functions of the step,
// and the optimizer state rides along in the checkpoint.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dfp/checkpoint.hpp"
#include "dfp/config.hpp"
#include "dfp/metrics.hpp"
#include "dfp/model.hpp"
#include "dfp/ops.hpp"
#include "dfp/synthdata.hpp"
#include "dfp/tensor.hpp"

namespace dfp {

// Whole dataset cached in RAM (a desk run is ~150 MB). The 90/10 train/val
// split is a pure function of the sample index (i % 10 == 9 is held out, tiny
// sets fall back to holding out the last sample), so every run over a
// directory agrees on the held-out set regardless of training seed.
class Dataset {
  public:
    explicit Dataset(const std::string& dir);

    const DatasetManifest& manifest() const { return manifest_; }
    const GroundTruthBundle& bundle(int index) const { return bundles_[index]; }
    int size() const { return static_cast<int>(bundles_.size()); }
    const std::vector<int>& train_indices() const { return train_; }
    const std::vector<int>& val_indices() const { return val_; }

    static bool is_val_index(int index);

  private:
    DatasetManifest manifest_;
    std::vector<GroundTruthBundle> bundles_;
    std::vector<int> train_, val_;
};

// grayscale [N,1,H,W] batch; source=false takes image_t, true takes image_s
Tensor<float> gray_batch(const std::vector<const GroundTruthBundle*>& batch, bool source);

struct EvalReport {
    DepthMetrics depth;     // per-sample metrics averaged over the split
    FlowMetrics flow;       // valid = non-occluded pixels
    double pose_dir_hit = 0;  // fraction with translation axis within 30 deg of GT
    double ate = 0;           // split chained into one pseudo-sequence
    int samples = 0;
};

// net == nullptr scores the ground truth against itself (oracle mode); every
// metric must land at its ideal value, which pins conventions end to end.
EvalReport evaluate(const DFPNet* net, const Dataset& data, const std::vector<int>& indices);

// rebuilds the network a checkpoint was trained with and restores its weights
std::unique_ptr<DFPNet> net_from_checkpoint(const Checkpoint& c);

std::string eval_report_text(const EvalReport& r);   // key=value lines
std::string eval_report_table(const EvalReport& r);  // aligned, for stdout

struct TrainResult {
    int steps = 0;               // last global step executed
    double first_logged_total = 0;  // total at the first CSV row (step 1)
    double step10_total = 0;        // 0 until step 10 is reached
    double final_total = 0;
    double best_val = 0;
    std::string last_checkpoint, best_checkpoint, csv_path;
};

class Trainer {
  public:
    explicit Trainer(const TrainConfig& cfg);

    TrainResult run();

    const DFPNet& net() const { return *net_; }
    const TrainConfig& config() const { return cfg_; }
    const Dataset& dataset() const { return data_; }
    int steps_per_epoch() const { return steps_per_epoch_; }
    int total_epochs() const { return total_epochs_; }
    int final_step() const { return run_until_; }  // last global step of this invocation

    // weighted vs + ir + p over the val split; the smoothness schedule is
    // excluded so checkpoint selection does not jump when it switches on
    double validation_loss() const;

    // multi-scale loss terms for one batch (shared with tests); K0 holds the
    // level-0 intrinsics per sample (augmentation can perturb them), sd is
    // left undefined when with_sd is false
    LossTerms<float> loss_terms(const DFPNet::PairOutput& out, const Tensor<float>& img_t,
                                const Tensor<float>& img_s, const IntrinsicsBatch& K0,
                                bool with_sd) const;

  private:
    void restore(const Checkpoint& c);
    void save(const std::string& path, int step) const;
    [[noreturn]] void halt_non_finite(int step, int epoch, double lr, const LossReport* rep,
                                      const std::string& detail);

    TrainConfig cfg_;
    Dataset data_;
    std::unique_ptr<DFPNet> net_;
    std::vector<AdamState<float>> adam_;
    int steps_per_epoch_ = 0;
    int total_epochs_ = 0;
    int run_until_ = 0;        // last global step this invocation executes
    int start_step_ = 0;       // resume point; 0 when starting fresh
    double best_val_ = 0;
    std::string last_ckpt_, best_ckpt_;

    mutable int cached_epoch_ = -1;
    mutable std::vector<int> order_;
    const std::vector<int>& epoch_order(int epoch) const;
};

}  // namespace dfp
