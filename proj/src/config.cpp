#include "dfp/config.hpp"

#include <cctype>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "dfp/check.hpp"

namespace dfp {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(uint8_t(s[a]))) ++a;
    while (b > a && std::isspace(uint8_t(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// parsed file: key -> (value, line number); duplicate keys rejected up front
struct Kv {
    std::string origin;
    std::map<std::string, std::pair<std::string, int>> entries;

    static Kv parse(const std::string& text, const std::string& origin) {
        Kv kv;
        kv.origin = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            line = trim(line);
            if (line.empty()) continue;
            const size_t eq = line.find('=');
            DFP_CHECK(eq != std::string::npos, origin, ":", lineno, ": expected key=value, got '",
                      line, "'");
            const std::string key = trim(line.substr(0, eq));
            const std::string val = trim(line.substr(eq + 1));
            DFP_CHECK(!key.empty(), origin, ":", lineno, ": empty key");
            const auto [it, fresh] = kv.entries.emplace(key, std::make_pair(val, lineno));
            DFP_CHECK(fresh, origin, ":", lineno, ": duplicate key '", key, "' (first on line ",
                      it->second.second, ")");
        }
        return kv;
    }

    bool take(const std::string& key, std::string* out, int* line) {
        auto it = entries.find(key);
        if (it == entries.end()) return false;
        *out = it->second.first;
        *line = it->second.second;
        entries.erase(it);
        return true;
    }

    void finish() const {
        if (entries.empty()) return;
        const auto& [key, vl] = *entries.begin();
        fail(origin, ":", vl.second, ": unknown key '", key, "'");
    }
};

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    DFP_CHECK(f.good(), "cannot read config '", path, "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void take_double(Kv& kv, const std::string& key, double* out) {
    std::string v;
    int line;
    if (!kv.take(key, &v, &line)) return;
    char* end = nullptr;
    *out = std::strtod(v.c_str(), &end);
    DFP_CHECK(end && *end == '\0' && !v.empty(), kv.origin, ":", line, ": '", key,
              "' needs a number, got '", v, "'");
}

void take_int(Kv& kv, const std::string& key, int* out) {
    std::string v;
    int line;
    if (!kv.take(key, &v, &line)) return;
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    DFP_CHECK(end && *end == '\0' && !v.empty() && x >= INT_MIN && x <= INT_MAX, kv.origin, ":",
              line, ": '", key, "' needs an integer, got '", v, "'");
    *out = int(x);
}

void take_u64(Kv& kv, const std::string& key, uint64_t* out) {
    std::string v;
    int line;
    if (!kv.take(key, &v, &line)) return;
    char* end = nullptr;
    *out = std::strtoull(v.c_str(), &end, 10);
    DFP_CHECK(end && *end == '\0' && !v.empty(), kv.origin, ":", line, ": '", key,
              "' needs an unsigned integer, got '", v, "'");
}

void take_bool(Kv& kv, const std::string& key, bool* out) {
    std::string v;
    int line;
    if (!kv.take(key, &v, &line)) return;
    if (v == "0" || v == "false") *out = false;
    else if (v == "1" || v == "true") *out = true;
    else fail(kv.origin, ":", line, ": '", key, "' needs 0/1/true/false, got '", v, "'");
}

void take_string(Kv& kv, const std::string& key, std::string* out) {
    int line;
    std::string v;
    if (kv.take(key, &v, &line)) *out = v;
}

void take_int_list(Kv& kv, const std::string& key, std::vector<int>* out) {
    std::string v;
    int line;
    if (!kv.take(key, &v, &line)) return;
    std::vector<int> vals;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        char* end = nullptr;
        const long x = std::strtol(item.c_str(), &end, 10);
        DFP_CHECK(end && *end == '\0' && !item.empty(), kv.origin, ":", line, ": '", key,
                  "' needs comma-separated integers, got '", v, "'");
        vals.push_back(int(x));
    }
    DFP_CHECK(!vals.empty(), kv.origin, ":", line, ": '", key, "' is empty");
    *out = vals;
}

void apply_train_kv(TrainConfig& cfg, Kv& kv) {
    take_string(kv, "data_dir", &cfg.data_dir);
    take_string(kv, "out_dir", &cfg.out_dir);
    take_u64(kv, "seed", &cfg.seed);

    take_int(kv, "levels", &cfg.model.levels);
    take_int_list(kv, "channels", &cfg.model.channels_per_level);
    take_int(kv, "height", &cfg.model.input_height);
    take_int(kv, "width", &cfg.model.input_width);
    take_int(kv, "max_disp", &cfg.model.max_disp);
    take_double(kv, "dropout", &cfg.model.dropout_rate);
    take_double(kv, "min_depth", &cfg.model.min_depth);
    take_double(kv, "max_depth", &cfg.model.max_depth);

    take_int(kv, "batch_size", &cfg.batch_size);
    take_int(kv, "epochs", &cfg.epochs);
    take_int(kv, "steps", &cfg.steps);
    take_double(kv, "lr", &cfg.lr);
    take_double(kv, "lr_decay", &cfg.lr_decay);
    take_double(kv, "adam_beta1", &cfg.adam_beta1);
    take_double(kv, "adam_beta2", &cfg.adam_beta2);
    take_double(kv, "adam_eps", &cfg.adam_eps);

    take_double(kv, "lambda_vs", &cfg.weights.lambda_vs);
    take_double(kv, "lambda_ir", &cfg.weights.lambda_ir);
    take_double(kv, "lambda_sd", &cfg.weights.lambda_sd);
    take_double(kv, "lambda_p", &cfg.weights.lambda_p);
    take_bool(kv, "sd_schedule", &cfg.weights.sd_schedule);

    take_double(kv, "charbonnier_alpha", &cfg.charbonnier.alpha);
    take_double(kv, "charbonnier_beta", &cfg.charbonnier.beta);
    take_double(kv, "charbonnier_eps", &cfg.charbonnier.eps);

    take_bool(kv, "augment", &cfg.augment);
    take_int(kv, "log_every", &cfg.log_every);
    take_string(kv, "resume", &cfg.resume);
    kv.finish();
}

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    DFP_CHECK(batch_size >= 1, "config: batch_size must be >= 1, got ", batch_size);
    DFP_CHECK(steps >= 0 && epochs >= 0, "config: steps and epochs must be >= 0");
    DFP_CHECK(steps > 0 || epochs > 0, "config: need steps > 0 or epochs > 0");
    DFP_CHECK(lr > 0, "config: lr must be positive, got ", lr);
    DFP_CHECK(lr_decay > 0 && lr_decay <= 1, "config: lr_decay must be in (0,1], got ", lr_decay);
    DFP_CHECK(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1,
              "config: adam betas must be in [0,1)");
    DFP_CHECK(adam_eps > 0, "config: adam_eps must be positive");
    DFP_CHECK(log_every >= 1, "config: log_every must be >= 1");
    weights.validate();
    charbonnier.validate();
}

TrainConfig parse_train_config(const std::string& path) {
    return parse_train_config_text(read_file(path), path);
}

TrainConfig parse_train_config_text(const std::string& text, const std::string& origin) {
    Kv kv = Kv::parse(text, origin);
    TrainConfig cfg;
    apply_train_kv(cfg, kv);
    return cfg;
}

void apply_override(TrainConfig& cfg, const std::string& keyval) {
    Kv kv = Kv::parse(keyval, "--set");
    DFP_CHECK(kv.entries.size() == 1, "--set expects a single key=value, got '", keyval, "'");
    apply_train_kv(cfg, kv);
}

std::string train_config_text(const TrainConfig& cfg) {
    std::ostringstream ss;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    ss << "data_dir = " << cfg.data_dir << "\n";
    ss << "out_dir = " << cfg.out_dir << "\n";
    ss << "seed = " << cfg.seed << "\n";
    ss << model_config_text(cfg.model);
    ss << "batch_size = " << cfg.batch_size << "\n";
    ss << "epochs = " << cfg.epochs << "\n";
    ss << "steps = " << cfg.steps << "\n";
    ss << "lr = " << num(cfg.lr) << "\n";
    ss << "lr_decay = " << num(cfg.lr_decay) << "\n";
    ss << "adam_beta1 = " << num(cfg.adam_beta1) << "\n";
    ss << "adam_beta2 = " << num(cfg.adam_beta2) << "\n";
    ss << "adam_eps = " << num(cfg.adam_eps) << "\n";
    ss << "lambda_vs = " << num(cfg.weights.lambda_vs) << "\n";
    ss << "lambda_ir = " << num(cfg.weights.lambda_ir) << "\n";
    ss << "lambda_sd = " << num(cfg.weights.lambda_sd) << "\n";
    ss << "lambda_p = " << num(cfg.weights.lambda_p) << "\n";
    ss << "sd_schedule = " << (cfg.weights.sd_schedule ? 1 : 0) << "\n";
    ss << "charbonnier_alpha = " << num(cfg.charbonnier.alpha) << "\n";
    ss << "charbonnier_beta = " << num(cfg.charbonnier.beta) << "\n";
    ss << "charbonnier_eps = " << num(cfg.charbonnier.eps) << "\n";
    ss << "augment = " << (cfg.augment ? 1 : 0) << "\n";
    ss << "log_every = " << cfg.log_every << "\n";
    ss << "resume = " << cfg.resume << "\n";
    return ss.str();
}

void write_train_config(const std::string& path, const TrainConfig& cfg) {
    std::ofstream f(path);
    DFP_CHECK(f.good(), "cannot write config '", path, "'");
    f << train_config_text(cfg);
}

std::string model_config_text(const DFPNetConfig& m) {
    std::ostringstream ss;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    ss << "levels = " << m.levels << "\n";
    ss << "channels = ";
    for (size_t i = 0; i < m.channels_per_level.size(); ++i)
        ss << (i ? "," : "") << m.channels_per_level[i];
    ss << "\n";
    ss << "height = " << m.input_height << "\n";
    ss << "width = " << m.input_width << "\n";
    ss << "max_disp = " << m.max_disp << "\n";
    ss << "dropout = " << num(m.dropout_rate) << "\n";
    ss << "min_depth = " << num(m.min_depth) << "\n";
    ss << "max_depth = " << num(m.max_depth) << "\n";
    return ss.str();
}

SceneParams parse_scene_params(const std::string& path) {
    Kv kv = Kv::parse(read_file(path), path);
    SceneParams p;
    take_int(kv, "width", &p.width);
    take_int(kv, "height", &p.height);
    take_double(kv, "fx", &p.fx);
    take_double(kv, "fy", &p.fy);
    take_double(kv, "cx", &p.cx);
    take_double(kv, "cy", &p.cy);
    take_int(kv, "max_foreground", &p.max_foreground);
    take_double(kv, "backdrop_lo", &p.backdrop_lo);
    take_double(kv, "backdrop_hi", &p.backdrop_hi);
    take_double(kv, "foreground_lo", &p.foreground_lo);
    take_double(kv, "foreground_hi", &p.foreground_hi);
    take_double(kv, "slant_max", &p.slant_max);
    take_double(kv, "trans_lo", &p.trans_lo);
    take_double(kv, "trans_hi", &p.trans_hi);
    take_double(kv, "rot_max", &p.rot_max);
    take_double(kv, "max_flow", &p.max_flow);
    take_double(kv, "min_mean_flow", &p.min_mean_flow);
    take_double(kv, "min_depth", &p.min_depth);
    take_double(kv, "max_depth", &p.max_depth);
    take_double(kv, "checker_prob", &p.checker_prob);
    kv.finish();
    p.validate();
    return p;
}

std::string scene_params_text(const SceneParams& p) {
    std::ostringstream ss;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    ss << "width = " << p.width << "\n";
    ss << "height = " << p.height << "\n";
    ss << "fx = " << num(p.fx) << "\n";
    ss << "fy = " << num(p.fy) << "\n";
    ss << "cx = " << num(p.cx) << "\n";
    ss << "cy = " << num(p.cy) << "\n";
    ss << "max_foreground = " << p.max_foreground << "\n";
    ss << "backdrop_lo = " << num(p.backdrop_lo) << "\n";
    ss << "backdrop_hi = " << num(p.backdrop_hi) << "\n";
    ss << "foreground_lo = " << num(p.foreground_lo) << "\n";
    ss << "foreground_hi = " << num(p.foreground_hi) << "\n";
    ss << "slant_max = " << num(p.slant_max) << "\n";
    ss << "trans_lo = " << num(p.trans_lo) << "\n";
    ss << "trans_hi = " << num(p.trans_hi) << "\n";
    ss << "rot_max = " << num(p.rot_max) << "\n";
    ss << "max_flow = " << num(p.max_flow) << "\n";
    ss << "min_mean_flow = " << num(p.min_mean_flow) << "\n";
    ss << "min_depth = " << num(p.min_depth) << "\n";
    ss << "max_depth = " << num(p.max_depth) << "\n";
    ss << "checker_prob = " << num(p.checker_prob) << "\n";
    return ss.str();
}

}  // namespace dfp
