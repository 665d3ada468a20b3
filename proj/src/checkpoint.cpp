#include "dfp/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include "dfp/check.hpp"

namespace dfp {

namespace {

constexpr char kMagic[4] = {'D', 'F', 'P', 'N'};
constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

template <typename T>
void put(FILE* f, const T& v) {
    DFP_CHECK(std::fwrite(&v, sizeof(T), 1, f) == 1, "checkpoint: write failed");
}

template <typename T>
void put_vec(FILE* f, const std::vector<T>& v) {
    put<uint64_t>(f, v.size());
    if (!v.empty())
        DFP_CHECK(std::fwrite(v.data(), sizeof(T), v.size(), f) == v.size(),
                  "checkpoint: write failed");
}

void put_str(FILE* f, const std::string& s) {
    put<uint64_t>(f, s.size());
    if (!s.empty())
        DFP_CHECK(std::fwrite(s.data(), 1, s.size(), f) == s.size(), "checkpoint: write failed");
}

template <typename T>
T get(FILE* f, const std::string& path) {
    T v;
    DFP_CHECK(std::fread(&v, sizeof(T), 1, f) == 1, "checkpoint '", path, "': truncated");
    return v;
}

template <typename T>
std::vector<T> get_vec(FILE* f, const std::string& path) {
    const uint64_t n = get<uint64_t>(f, path);
    DFP_CHECK(n < (1ull << 32), "checkpoint '", path, "': implausible array length ", n);
    std::vector<T> v(n);
    if (n)
        DFP_CHECK(std::fread(v.data(), sizeof(T), n, f) == n, "checkpoint '", path,
                  "': truncated");
    return v;
}

std::string get_str(FILE* f, const std::string& path) {
    const uint64_t n = get<uint64_t>(f, path);
    DFP_CHECK(n < (1ull << 30), "checkpoint '", path, "': implausible string length ", n);
    std::string s(n, '\0');
    if (n)
        DFP_CHECK(std::fread(s.data(), 1, n, f) == n, "checkpoint '", path, "': truncated");
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    DFP_CHECK(f, "cannot write checkpoint '", path, "'");
    DFP_CHECK(std::fwrite(kMagic, 1, 4, f.get()) == 4, "checkpoint: write failed");
    put(f.get(), kVersion);
    put(f.get(), c.step);
    put(f.get(), c.epoch);
    put(f.get(), c.best_val);
    put_str(f.get(), c.config_text);
    put<uint64_t>(f.get(), c.params.size());
    for (const CheckpointParam& p : c.params) {
        put_str(f.get(), p.name);
        put<uint32_t>(f.get(), uint32_t(p.shape.size()));
        for (int d : p.shape) put<int64_t>(f.get(), d);
        int64_t numel = 1;
        for (int d : p.shape) numel *= d;
        DFP_CHECK(int64_t(p.values.size()) == numel, "checkpoint: '", p.name, "' has ",
                  p.values.size(), " values for shape ", shape_str(p.shape));
        DFP_CHECK(p.adam_m.size() == p.values.size() && p.adam_v.size() == p.values.size(),
                  "checkpoint: '", p.name, "' optimizer state size mismatch");
        put_vec(f.get(), p.values);
        put(f.get(), p.adam_step);
        put_vec(f.get(), p.adam_m);
        put_vec(f.get(), p.adam_v);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    DFP_CHECK(f, "cannot read checkpoint '", path, "'");
    char magic[4];
    DFP_CHECK(std::fread(magic, 1, 4, f.get()) == 4 && std::memcmp(magic, kMagic, 4) == 0,
              "checkpoint '", path, "': bad magic");
    const uint32_t version = get<uint32_t>(f.get(), path);
    DFP_CHECK(version == kVersion, "checkpoint '", path, "': version ", version, ", expected ",
              kVersion);
    Checkpoint c;
    c.step = get<uint64_t>(f.get(), path);
    c.epoch = get<uint64_t>(f.get(), path);
    c.best_val = get<double>(f.get(), path);
    c.config_text = get_str(f.get(), path);
    const uint64_t count = get<uint64_t>(f.get(), path);
    DFP_CHECK(count < (1ull << 20), "checkpoint '", path, "': implausible param count ", count);
    c.params.resize(count);
    for (CheckpointParam& p : c.params) {
        p.name = get_str(f.get(), path);
        const uint32_t ndim = get<uint32_t>(f.get(), path);
        DFP_CHECK(ndim <= 8, "checkpoint '", path, "': implausible rank ", ndim);
        p.shape.resize(ndim);
        for (uint32_t i = 0; i < ndim; ++i) p.shape[i] = int(get<int64_t>(f.get(), path));
        p.values = get_vec<float>(f.get(), path);
        p.adam_step = get<int64_t>(f.get(), path);
        p.adam_m = get_vec<float>(f.get(), path);
        p.adam_v = get_vec<float>(f.get(), path);
        int64_t numel = 1;
        for (int d : p.shape) numel *= d;
        DFP_CHECK(int64_t(p.values.size()) == numel && p.adam_m.size() == p.values.size() &&
                      p.adam_v.size() == p.values.size(),
                  "checkpoint '", path, "': '", p.name, "' payload/shape mismatch");
    }
    // must be at EOF
    uint8_t extra;
    DFP_CHECK(std::fread(&extra, 1, 1, f.get()) == 0, "checkpoint '", path,
              "': trailing bytes after payload");
    return c;
}

}  // namespace dfp
