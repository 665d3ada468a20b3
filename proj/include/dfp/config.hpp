#pragma once

// Flat key=value config files: '#' starts a comment, blank lines are skipped,
// unknown or duplicate keys are hard errors (typo safety). The trainer always
// writes the fully resolved snapshot back next to its outputs so a run can be
// re-launched from the snapshot alone.

#include <cstdint>
#include <string>

#include "dfp/losses.hpp"
#include "dfp/model.hpp"
#include "dfp/synthdata.hpp"

namespace dfp {

struct TrainConfig {
    std::string data_dir;           // dataset directory (gen output)
    std::string out_dir = "run";    // checkpoints, CSV, manifest, snapshot
    uint64_t seed = 1;

    DFPNetConfig model;

    // optimizer defaults follow the reference setup: Adam(0.9, 0.999),
    // lr 0.0005 with exponential decay 0.9 per epoch, batch 16
    int batch_size = 16;
    // The schedule (lr decay, smoothness ramp) spans `epochs`; `steps` caps
    // how many optimizer steps this invocation runs (0 = the full horizon).
    // When epochs is 0 the horizon is derived as ceil(steps / steps_per_epoch),
    // so a resumed run must keep the same steps value to keep the schedule.
    int epochs = 0;
    int steps = 2000;
    double lr = 0.0005;
    double lr_decay = 0.9;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    LossWeights weights;
    CharbonnierParams charbonnier;

    bool augment = false;       // photometric + hflip on training samples
    int log_every = 10;         // CSV cadence in steps (step 1 always logged)
    std::string resume;         // checkpoint path, empty = fresh start

    void validate() const;
};

TrainConfig parse_train_config(const std::string& path);
// parse from text (for tests and checkpoint-embedded snapshots)
TrainConfig parse_train_config_text(const std::string& text, const std::string& origin);
// apply one "key=value" override (CLI --set)
void apply_override(TrainConfig& cfg, const std::string& keyval);
std::string train_config_text(const TrainConfig& cfg);  // resolved snapshot
void write_train_config(const std::string& path, const TrainConfig& cfg);

SceneParams parse_scene_params(const std::string& path);
std::string scene_params_text(const SceneParams& p);

// the model-shape subset of the snapshot; checkpoints refuse to load when it
// differs from the running config
std::string model_config_text(const DFPNetConfig& m);

}  // namespace dfp
