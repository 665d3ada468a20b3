#pragma once

// File formats: 8/16-bit PNG, PFM ("Pf", scale -1.0 => little-endian,
// bottom-up rows), Middlebury .flo (magic float 202021.25, int32 w/h,
// interleaved float32 u,v top-down), and pose text (6 floats per line,
// "tx ty tz rx ry rz", printed with 17 significant digits so doubles
// round-trip exactly). Write->read->write is byte-identical for all of them.

#include <cstdint>
#include <string>
#include <vector>

#include "dfp/se3.hpp"

namespace dfp {

struct ImageU8 {
    int height = 0, width = 0, channels = 1;  // channels: 1 (gray) or 3 (rgb)
    std::vector<uint8_t> data;                // row-major, interleaved

    uint8_t at(int y, int x, int c = 0) const { return data[(y * width + x) * channels + c]; }
};

struct ImageU16 {
    int height = 0, width = 0;  // grayscale only
    std::vector<uint16_t> data;
};

struct PfmImage {
    int height = 0, width = 0;
    std::vector<float> data;  // row-major, top-down in memory
};

struct FloImage {
    int height = 0, width = 0;
    std::vector<float> uv;  // row-major, interleaved (u,v)
};

void write_png(const std::string& path, const ImageU8& img);
ImageU8 read_png(const std::string& path);  // accepts 8/16-bit gray, rgb, palette; yields 8-bit

void write_png16(const std::string& path, const ImageU16& img);
ImageU16 read_png16(const std::string& path);  // 16-bit grayscale only

void write_pfm(const std::string& path, int height, int width, const float* data);
PfmImage read_pfm(const std::string& path);

void write_flo(const std::string& path, int height, int width, const float* uv);
FloImage read_flo(const std::string& path);

void write_pose_text(const std::string& path, const std::vector<Pose6>& poses);
std::vector<Pose6> read_pose_text(const std::string& path);

// Flow color wheel: hue = (atan2(v,u)+pi)/2pi, saturation = |f|/max_mag
// (clamped), value = 1. Saturation hits 1 exactly at max_mag, so the largest
// displacement is always the most vivid pixel. max_mag <= 0 picks the field
// maximum (or 1 for an all-zero field).
ImageU8 flow_to_color(const std::vector<float>& uv, int height, int width, double max_mag = 0);

// min -> 0, max -> 65535 linear normalization; constant input maps to 0
ImageU16 depth_to_u16(const std::vector<float>& depth, int height, int width);

// 0.299 R + 0.587 G + 0.114 B; identity for single-channel input
std::vector<float> rgb_to_gray(const std::vector<float>& rgb, int height, int width);

}  // namespace dfp
