#include "dfp/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "dfp/check.hpp"

namespace dfp {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) fail("cannot open '", path, "' for ", mode[0] == 'r' ? "reading" : "writing");
    return f;
}

// libpng reports errors via longjmp; wrap each call site with this guard.
// volatile-free because nothing here lives across the setjmp boundary.
struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWrite() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        DFP_CHECK(png, "png_create_write_struct failed");
        info = png_create_info_struct(png);
        DFP_CHECK(info, "png_create_info_struct failed");
    }
    ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngRead() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        DFP_CHECK(png, "png_create_read_struct failed");
        info = png_create_info_struct(png);
        DFP_CHECK(info, "png_create_info_struct failed");
    }
    ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

void write_png_raw(const std::string& path, int h, int w, int channels, int bit_depth,
                   const uint8_t* bytes) {
    FilePtr f = open_file(path, "wb");
    PngWrite ctx;
    if (setjmp(png_jmpbuf(ctx.png))) fail("libpng error writing '", path, "'");
    png_init_io(ctx.png, f.get());
    const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(ctx.png, ctx.info, w, h, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_swap(ctx.png);  // rows are host little-endian
    const size_t stride = size_t(w) * channels * (bit_depth / 8);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = const_cast<uint8_t*>(bytes) + y * stride;
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, nullptr);
}

}  // namespace

void write_png(const std::string& path, const ImageU8& img) {
    DFP_CHECK(img.channels == 1 || img.channels == 3, "png: channels must be 1 or 3, got ",
              img.channels);
    DFP_CHECK(img.height > 0 && img.width > 0, "png: empty image");
    DFP_CHECK(int64_t(img.data.size()) == int64_t(img.height) * img.width * img.channels,
              "png: data size ", img.data.size(), " does not match ", img.height, "x", img.width,
              "x", img.channels);
    write_png_raw(path, img.height, img.width, img.channels, 8, img.data.data());
}

void write_png16(const std::string& path, const ImageU16& img) {
    DFP_CHECK(img.height > 0 && img.width > 0, "png16: empty image");
    DFP_CHECK(int64_t(img.data.size()) == int64_t(img.height) * img.width,
              "png16: data size mismatch");
    write_png_raw(path, img.height, img.width, 1, 16,
                  reinterpret_cast<const uint8_t*>(img.data.data()));
}

ImageU8 read_png(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    PngRead ctx;
    if (setjmp(png_jmpbuf(ctx.png))) fail("libpng error reading '", path, "'");
    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);
    png_set_strip_16(ctx.png);
    png_set_palette_to_rgb(ctx.png);
    png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    ImageU8 img;
    img.height = int(png_get_image_height(ctx.png, ctx.info));
    img.width = int(png_get_image_width(ctx.png, ctx.info));
    img.channels = int(png_get_channels(ctx.png, ctx.info));
    DFP_CHECK(img.channels == 1 || img.channels == 3, "png '", path, "': unsupported channel count ",
              img.channels);
    img.data.resize(size_t(img.height) * img.width * img.channels);
    std::vector<png_bytep> rows(img.height);
    const size_t stride = size_t(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + y * stride;
    png_read_image(ctx.png, rows.data());
    return img;
}

ImageU16 read_png16(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    PngRead ctx;
    if (setjmp(png_jmpbuf(ctx.png))) fail("libpng error reading '", path, "'");
    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);
    DFP_CHECK(png_get_bit_depth(ctx.png, ctx.info) == 16, "png16 '", path, "': not 16-bit");
    DFP_CHECK(png_get_color_type(ctx.png, ctx.info) == PNG_COLOR_TYPE_GRAY, "png16 '", path,
              "': not grayscale");
    png_set_swap(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    ImageU16 img;
    img.height = int(png_get_image_height(ctx.png, ctx.info));
    img.width = int(png_get_image_width(ctx.png, ctx.info));
    img.data.resize(size_t(img.height) * img.width);
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<uint8_t*>(img.data.data() + size_t(y) * img.width);
    png_read_image(ctx.png, rows.data());
    return img;
}

void write_pfm(const std::string& path, int height, int width, const float* data) {
    DFP_CHECK(height > 0 && width > 0, "pfm: empty image");
    FilePtr f = open_file(path, "wb");
    std::fprintf(f.get(), "Pf\n%d %d\n-1.0\n", width, height);
    // PFM stores rows bottom-up
    for (int y = height - 1; y >= 0; --y) {
        const size_t n = std::fwrite(data + size_t(y) * width, sizeof(float), width, f.get());
        DFP_CHECK(n == size_t(width), "pfm: short write to '", path, "'");
    }
}

PfmImage read_pfm(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    char tag[3] = {};
    DFP_CHECK(std::fscanf(f.get(), "%2s", tag) == 1, "pfm '", path, "': missing header");
    DFP_CHECK(std::strcmp(tag, "Pf") == 0, "pfm '", path, "': expected grayscale 'Pf', got '", tag,
              "'");
    int w = 0, h = 0;
    double scale = 0;
    DFP_CHECK(std::fscanf(f.get(), "%d %d %lf", &w, &h, &scale) == 3, "pfm '", path,
              "': bad header");
    DFP_CHECK(w > 0 && h > 0 && scale != 0, "pfm '", path, "': invalid dims/scale");
    int c = std::fgetc(f.get());
    DFP_CHECK(c == '\n' || c == '\r' || c == ' ', "pfm '", path, "': malformed header terminator");

    PfmImage img;
    img.height = h;
    img.width = w;
    img.data.resize(size_t(h) * w);
    for (int y = h - 1; y >= 0; --y) {
        const size_t n = std::fread(img.data.data() + size_t(y) * w, sizeof(float), w, f.get());
        DFP_CHECK(n == size_t(w), "pfm '", path, "': truncated data");
    }
    if (scale > 0) {  // big-endian payload
        for (float& v : img.data) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
    return img;
}

namespace {
constexpr float kFloMagic = 202021.25f;
}

void write_flo(const std::string& path, int height, int width, const float* uv) {
    DFP_CHECK(height > 0 && width > 0, "flo: empty field");
    FilePtr f = open_file(path, "wb");
    const int32_t w = width, h = height;
    DFP_CHECK(std::fwrite(&kFloMagic, 4, 1, f.get()) == 1 && std::fwrite(&w, 4, 1, f.get()) == 1 &&
                  std::fwrite(&h, 4, 1, f.get()) == 1,
              "flo: header write failed for '", path, "'");
    const size_t n = size_t(height) * width * 2;
    DFP_CHECK(std::fwrite(uv, sizeof(float), n, f.get()) == n, "flo: short write to '", path, "'");
}

FloImage read_flo(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    float magic = 0;
    int32_t w = 0, h = 0;
    DFP_CHECK(std::fread(&magic, 4, 1, f.get()) == 1 && std::fread(&w, 4, 1, f.get()) == 1 &&
                  std::fread(&h, 4, 1, f.get()) == 1,
              "flo '", path, "': truncated header");
    DFP_CHECK(magic == kFloMagic, "flo '", path, "': bad magic ", magic);
    DFP_CHECK(w > 0 && h > 0 && w < 100000 && h < 100000, "flo '", path, "': suspicious dims ", w,
              "x", h);
    FloImage img;
    img.height = h;
    img.width = w;
    img.uv.resize(size_t(h) * w * 2);
    DFP_CHECK(std::fread(img.uv.data(), sizeof(float), img.uv.size(), f.get()) == img.uv.size(),
              "flo '", path, "': truncated data");
    return img;
}

void write_pose_text(const std::string& path, const std::vector<Pose6>& poses) {
    FilePtr f = open_file(path, "w");
    for (const Pose6& p : poses)
        std::fprintf(f.get(), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.t.x, p.t.y, p.t.z, p.r.x,
                     p.r.y, p.r.z);
}

std::vector<Pose6> read_pose_text(const std::string& path) {
    FilePtr f = open_file(path, "r");
    std::vector<Pose6> poses;
    double v[6];
    while (true) {
        const int n = std::fscanf(f.get(), "%lf %lf %lf %lf %lf %lf", &v[0], &v[1], &v[2], &v[3],
                                  &v[4], &v[5]);
        if (n == EOF) break;
        DFP_CHECK(n == 6, "pose text '", path, "': line ", poses.size() + 1, " has ", n,
                  " of 6 values");
        poses.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    }
    return poses;
}

ImageU8 flow_to_color(const std::vector<float>& uv, int height, int width, double max_mag) {
    DFP_CHECK(int64_t(uv.size()) == int64_t(height) * width * 2, "flow_to_color: size mismatch");
    if (max_mag <= 0) {
        for (size_t i = 0; i < uv.size(); i += 2)
            max_mag = std::max(max_mag, std::hypot(double(uv[i]), double(uv[i + 1])));
        if (max_mag <= 0) max_mag = 1.0;
    }
    ImageU8 img;
    img.height = height;
    img.width = width;
    img.channels = 3;
    img.data.resize(size_t(height) * width * 3);
    for (int64_t i = 0; i < int64_t(height) * width; ++i) {
        const double u = uv[2 * i], v = uv[2 * i + 1];
        const double mag = std::hypot(u, v);
        const double hue6 = (std::atan2(v, u) + M_PI) / (2.0 * M_PI) * 6.0;  // [0,6]
        const double sat = std::min(1.0, mag / max_mag);
        // HSV -> RGB with value = 1
        const int sector = std::min(5, int(hue6));
        const double frac = hue6 - sector;
        const double p = 1.0 - sat;
        const double q = 1.0 - sat * frac;
        const double t = 1.0 - sat * (1.0 - frac);
        double r, g, b;
        switch (sector) {
            case 0: r = 1; g = t; b = p; break;
            case 1: r = q; g = 1; b = p; break;
            case 2: r = p; g = 1; b = t; break;
            case 3: r = p; g = q; b = 1; break;
            case 4: r = t; g = p; b = 1; break;
            default: r = 1; g = p; b = q; break;
        }
        img.data[3 * i + 0] = uint8_t(std::lround(r * 255.0));
        img.data[3 * i + 1] = uint8_t(std::lround(g * 255.0));
        img.data[3 * i + 2] = uint8_t(std::lround(b * 255.0));
    }
    return img;
}

ImageU16 depth_to_u16(const std::vector<float>& depth, int height, int width) {
    DFP_CHECK(int64_t(depth.size()) == int64_t(height) * width, "depth_to_u16: size mismatch");
    float lo = depth[0], hi = depth[0];
    for (float d : depth) {
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    ImageU16 img;
    img.height = height;
    img.width = width;
    img.data.resize(depth.size());
    const double span = double(hi) - double(lo);
    for (size_t i = 0; i < depth.size(); ++i)
        img.data[i] = span > 0 ? uint16_t(std::lround((depth[i] - lo) / span * 65535.0)) : 0;
    return img;
}

std::vector<float> rgb_to_gray(const std::vector<float>& rgb, int height, int width) {
    const size_t n = size_t(height) * width;
    if (rgb.size() == n) return rgb;
    DFP_CHECK(rgb.size() == n * 3, "rgb_to_gray: expected ", n, " or ", n * 3, " values, got ",
              rgb.size());
    std::vector<float> gray(n);
    for (size_t i = 0; i < n; ++i)
        gray[i] = 0.299f * rgb[3 * i] + 0.587f * rgb[3 * i + 1] + 0.114f * rgb[3 * i + 2];
    return gray;
}

}  // namespace dfp
