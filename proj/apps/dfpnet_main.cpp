// dfpnet: dataset generation, training, evaluation and prediction rendering
// for the synthetic plane-scene depth/flow/pose setup. Every subcommand exits
// nonzero on any error path.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfp/check.hpp"
#include "dfp/checkpoint.hpp"
#include "dfp/config.hpp"
#include "dfp/image_io.hpp"
#include "dfp/rng.hpp"
#include "dfp/synthdata.hpp"
#include "dfp/trainer.hpp"

namespace {

using namespace dfp;

int cmd_gen(const std::string& scenes, const std::string& out, int count, uint64_t seed) {
    SceneParams params = parse_scene_params(scenes);
    params.validate();
    DFP_CHECK(count >= 0, "gen: count must be >= 0, got ", count);
    std::filesystem::create_directories(out);

    DatasetManifest m;
    m.count = count;
    m.height = params.height;
    m.width = params.width;
    m.camera = params.intrinsics();
    m.seed = seed;
    write_manifest(out, m);

    std::vector<std::string> errors(count);
    std::vector<double> constancy(count, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
        try {
            const SyntheticScene scene =
                make_random_scene(params, seed_mix(seed, static_cast<uint64_t>(i)));
            const GroundTruthBundle b = render_pair(scene);
            constancy[i] = constancy_max_error(b);
            write_bundle(out, i, b);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    double worst = 0;
    for (int i = 0; i < count; ++i) {
        if (!errors[i].empty()) fail("sample ", i, ": ", errors[i]);
        worst = std::max(worst, constancy[i]);
    }
    DFP_CHECK(worst <= 0.02, "generated data violates brightness constancy: max residual ",
              worst);
    std::printf("wrote %d sample pairs to %s (max constancy residual %.5f)\n", count,
                out.c_str(), worst);
    return 0;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets) {
    TrainConfig cfg = parse_train_config(config_path);
    for (const std::string& kv : sets) apply_override(cfg, kv);
    Trainer trainer(cfg);
    std::printf("training to step %d (%d steps/epoch, %d epochs) on %zu train / %zu val pairs\n",
                trainer.final_step(), trainer.steps_per_epoch(), trainer.total_epochs(),
                trainer.dataset().train_indices().size(),
                trainer.dataset().val_indices().size());
    const TrainResult res = trainer.run();
    std::printf("done: final total %.6g, best val %.6g\nlast checkpoint: %s\nbest checkpoint: %s\nloss log: %s\n",
                res.final_total, res.best_val, res.last_checkpoint.c_str(),
                res.best_checkpoint.c_str(), res.csv_path.c_str());
    return 0;
}

void dump_predictions(const DFPNet* net, const Dataset& data, const std::vector<int>& indices,
                      const std::string& dir) {
    std::filesystem::create_directories(dir);
    const DatasetManifest& m = data.manifest();
    const int hw = m.height * m.width;
    for (int idx : indices) {
        const GroundTruthBundle& b = data.bundle(idx);
        std::vector<float> depth, flow;
        Pose6 pose;
        if (net) {
            const std::vector<const GroundTruthBundle*> one{&b};
            const DFPOutput out =
                net->forward(gray_batch(one, false), gray_batch(one, true), false, 0);
            const auto dv = out.depth[0].values();
            depth.assign(dv.begin(), dv.end());
            const auto fv = out.flow[0].values();
            flow.resize(static_cast<size_t>(hw) * 2);
            for (int p = 0; p < hw; ++p) {
                flow[2 * p] = fv[p];
                flow[2 * p + 1] = fv[hw + p];
            }
            const auto pv = out.pose.values();
            pose = {{pv[0], pv[1], pv[2]}, {pv[3], pv[4], pv[5]}};
        } else {
            depth = b.depth_t;
            flow = b.flow_ts;
            pose = b.pose_ts;
        }
        char name[32];
        std::snprintf(name, sizeof name, "/%06d_", idx);
        const std::string stem = dir + name;
        write_pfm(stem + "depth.pfm", m.height, m.width, depth.data());
        write_flo(stem + "flow.flo", m.height, m.width, flow.data());
        write_pose_text(stem + "pose.txt", {pose});
    }
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& report_path, const std::string& split, bool oracle,
             const std::string& dump_dir) {
    std::unique_ptr<DFPNet> net;
    if (!oracle) {
        DFP_CHECK(!ckpt_path.empty(), "eval needs --checkpoint (or --oracle)");
        net = net_from_checkpoint(load_checkpoint(ckpt_path));
    }
    Dataset data(data_dir);
    std::vector<int> indices;
    if (split == "val") {
        indices = data.val_indices();
    } else if (split == "train") {
        indices = data.train_indices();
    } else if (split == "all") {
        for (int i = 0; i < data.size(); ++i) indices.push_back(i);
    } else {
        fail("unknown --split '", split, "' (expected val, train or all)");
    }
    const EvalReport report = evaluate(net.get(), data, indices);
    std::fputs(eval_report_table(report).c_str(), stdout);
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        DFP_CHECK(f.good(), "cannot open ", report_path, " for writing");
        f << eval_report_text(report);
        std::printf("report written to %s\n", report_path.c_str());
    }
    if (!dump_dir.empty()) {
        dump_predictions(net.get(), data, indices, dump_dir);
        std::printf("predictions dumped to %s\n", dump_dir.c_str());
    }
    return 0;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int h, int w, int oh, int ow) {
    std::vector<float> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        const double sy = oh == 1 ? 0.0 : double(y) * (h - 1) / (oh - 1);
        const int y0 = std::min(int(sy), h - 2 < 0 ? 0 : h - 2);
        const double fy = sy - y0;
        for (int x = 0; x < ow; ++x) {
            const double sx = ow == 1 ? 0.0 : double(x) * (w - 1) / (ow - 1);
            const int x0 = std::min(int(sx), w - 2 < 0 ? 0 : w - 2);
            const double fx = sx - x0;
            const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
            const double v = (1 - fy) * ((1 - fx) * src[y0 * w + x0] + fx * src[y0 * w + x1]) +
                             fy * ((1 - fx) * src[y1 * w + x0] + fx * src[y1 * w + x1]);
            out[y * ow + x] = static_cast<float>(v);
        }
    }
    return out;
}

int cmd_render(const std::string& ckpt_path, const std::string& image_t,
               const std::string& image_s, const std::string& out_dir,
               const std::string& prefix) {
    auto net = net_from_checkpoint(load_checkpoint(ckpt_path));
    const int H = net->config().input_height, W = net->config().input_width;

    auto load_gray = [&](const std::string& path) {
        const ImageU8 img = read_png(path);
        std::vector<float> v(img.data.size());
        for (size_t i = 0; i < v.size(); ++i) v[i] = img.data[i] / 255.0f;
        std::vector<float> g = rgb_to_gray(v, img.height, img.width);
        if (img.height != H || img.width != W) {
            std::fprintf(stderr, "warning: %s is %dx%d, resizing to the model's %dx%d\n",
                         path.c_str(), img.height, img.width, H, W);
            g = resize_bilinear(g, img.height, img.width, H, W);
        }
        return Tensor<float>::from({1, 1, H, W}, std::move(g));
    };

    const DFPOutput out = net->forward(load_gray(image_t), load_gray(image_s), false, 0);
    std::filesystem::create_directories(out_dir);
    const std::string stem = out_dir + "/" + prefix;

    const auto dv = out.depth[0].values();
    const std::vector<float> depth(dv.begin(), dv.end());
    write_pfm(stem + "depth.pfm", H, W, depth.data());
    write_png16(stem + "depth.png", depth_to_u16(depth, H, W));

    const auto fv = out.flow[0].values();
    const int hw = H * W;
    std::vector<float> flow(static_cast<size_t>(hw) * 2);
    for (int p = 0; p < hw; ++p) {
        flow[2 * p] = fv[p];
        flow[2 * p + 1] = fv[hw + p];
    }
    write_flo(stem + "flow.flo", H, W, flow.data());
    write_png(stem + "flow.png", flow_to_color(flow, H, W));

    const auto pv = out.pose.values();
    write_pose_text(stem + "pose.txt", {Pose6{{pv[0], pv[1], pv[2]}, {pv[3], pv[4], pv[5]}}});

    std::printf("wrote %sdepth.pfm %sdepth.png %sflow.flo %sflow.png %spose.txt\n",
                stem.c_str(), stem.c_str(), stem.c_str(), stem.c_str(), stem.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dfpnet: unsupervised depth, flow and pose on synthetic plane scenes"};
    app.require_subcommand(1);

    std::string gen_scenes, gen_out;
    int gen_count = 0;
    uint64_t gen_seed = 1;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset with ground truth");
    gen->add_option("--scenes", gen_scenes, "scene parameter file")->required();
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of sample pairs")->required();
    gen->add_option("--seed", gen_seed, "master seed (default 1)");

    std::string train_config;
    std::vector<std::string> train_sets;
    CLI::App* train = app.add_subcommand("train", "train from a config file");
    train->add_option("--config", train_config, "key=value config file")->required();
    train->add_option("--set", train_sets, "override one key=value (repeatable)");

    std::string eval_ckpt, eval_data, eval_report, eval_dump, eval_split = "val";
    bool eval_oracle = false;
    CLI::App* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint to score");
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--report", eval_report, "write key=value metrics to this file");
    eval->add_option("--split", eval_split, "val (default), train or all");
    eval->add_flag("--oracle", eval_oracle, "score the ground truth against itself");
    eval->add_option("--dump", eval_dump, "dump per-sample predictions to this directory");

    std::string r_ckpt, r_img_t, r_img_s, r_out, r_prefix;
    CLI::App* render = app.add_subcommand("render", "run one image pair and write predictions");
    render->add_option("--checkpoint", r_ckpt, "checkpoint to run")->required();
    render->add_option("--image-t", r_img_t, "target frame PNG")->required();
    render->add_option("--image-s", r_img_s, "source frame PNG")->required();
    render->add_option("--out", r_out, "output directory")->required();
    render->add_option("--prefix", r_prefix, "output filename prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_scenes, gen_out, gen_count, gen_seed);
        if (train->parsed()) return cmd_train(train_config, train_sets);
        if (eval->parsed())
            return cmd_eval(eval_ckpt, eval_data, eval_report, eval_split, eval_oracle,
                            eval_dump);
        if (render->parsed()) return cmd_render(r_ckpt, r_img_t, r_img_s, r_out, r_prefix);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
