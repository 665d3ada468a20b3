#pragma once

// Checkpoint container, version 1. Little-endian binary:
//   "DFPN" | u32 version | u64 step | u64 epoch | f64 best_val
//   | u64 len + config snapshot text
//   | u64 param count, then per parameter:
//       u64 len + name | u32 ndim + i64 dims | f32 values
//       | i64 adam_step | f32 adam_m | f32 adam_v
// Field order is fixed, so save(load(f)) reproduces f byte for byte.

#include <cstdint>
#include <string>
#include <vector>

namespace dfp {

struct CheckpointParam {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
    std::vector<float> adam_m, adam_v;
    int64_t adam_step = 0;
};

struct Checkpoint {
    uint64_t step = 0, epoch = 0;
    double best_val = 0;
    std::string config_text;
    std::vector<CheckpointParam> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dfp
