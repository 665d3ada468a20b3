#include "dfp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <utility>

#include <json.hpp>

#include "dfp/check.hpp"
#include "dfp/image_io.hpp"
#include "dfp/losses.hpp"
#include "dfp/rng.hpp"

namespace dfp {

namespace {

// stream salts so shuffle / dropout / augmentation draws never collide
constexpr uint64_t kInitStream = 0x11;
constexpr uint64_t kShuffleStream = 0x51;
constexpr uint64_t kDropoutStream = 0xd0;
constexpr uint64_t kAugmentStream = 0xa0;

constexpr float kLevelWeight = 0.1f;  // per pyramid level, both terms

constexpr double kPoseDirCos = 0.86602540378443864676;  // cos(30 deg)

constexpr const char* kCodeVersion = "0.1.0";

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

bool Dataset::is_val_index(int index) { return index % 10 == 9; }

Dataset::Dataset(const std::string& dir) {
    manifest_ = read_manifest(dir);
    bundles_.reserve(manifest_.count);
    for (int i = 0; i < manifest_.count; ++i) bundles_.push_back(read_bundle(dir, i, manifest_));
    for (int i = 0; i < manifest_.count; ++i)
        (is_val_index(i) ? val_ : train_).push_back(i);
    // tiny datasets (< 10 samples) would otherwise have nothing held out
    if (val_.empty() && train_.size() >= 2) {
        val_.push_back(train_.back());
        train_.pop_back();
    }
}

// ---------------------------------------------------------------------------
// batch helpers

Tensor<float> gray_batch(const std::vector<const GroundTruthBundle*>& batch, bool source) {
    DFP_CHECK(!batch.empty(), "gray_batch: empty batch");
    const int h = batch[0]->height, w = batch[0]->width;
    Tensor<float> out = Tensor<float>::zeros({static_cast<int>(batch.size()), 1, h, w});
    float* d = out.data();
    for (size_t n = 0; n < batch.size(); ++n) {
        const GroundTruthBundle* b = batch[n];
        DFP_CHECK(b->height == h && b->width == w, "gray_batch: mixed sample sizes (", b->height,
                  "x", b->width, " vs ", h, "x", w, ")");
        const std::vector<float> g = rgb_to_gray(source ? b->image_s : b->image_t, h, w);
        std::copy(g.begin(), g.end(), d + n * static_cast<size_t>(h) * w);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trainer

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg), data_(cfg.data_dir) {
    cfg_.validate();
    const DatasetManifest& m = data_.manifest();
    DFP_CHECK(m.height == cfg_.model.input_height && m.width == cfg_.model.input_width,
              "dataset is ", m.height, "x", m.width, " but the model expects ",
              cfg_.model.input_height, "x", cfg_.model.input_width);
    DFP_CHECK(!data_.train_indices().empty(), "dataset has no training samples");
    DFP_CHECK(!data_.val_indices().empty(), "dataset has no validation samples");
    steps_per_epoch_ = static_cast<int>(data_.train_indices().size()) / cfg_.batch_size;
    DFP_CHECK(steps_per_epoch_ >= 1, "batch_size ", cfg_.batch_size,
              " exceeds the training split of ", data_.train_indices().size());
    // cfg.epochs fixes the schedule horizon; cfg.steps then only caps this
    // invocation (so an interrupted run resumes under the identical schedule)
    total_epochs_ = cfg_.epochs > 0 ? cfg_.epochs
                                    : (cfg_.steps + steps_per_epoch_ - 1) / steps_per_epoch_;
    const int horizon = total_epochs_ * steps_per_epoch_;
    run_until_ = cfg_.epochs > 0 ? (cfg_.steps > 0 ? std::min(cfg_.steps, horizon) : horizon)
                                 : cfg_.steps;
    DFP_CHECK(run_until_ >= 1, "config yields no steps to run");

    net_ = std::make_unique<DFPNet>(cfg_.model, seed_mix(cfg_.seed, kInitStream));
    adam_.resize(net_->parameters().size());
    best_val_ = std::numeric_limits<double>::infinity();

    if (!cfg_.resume.empty()) restore(load_checkpoint(cfg_.resume));
}

namespace {
void load_params_into(DFPNet& net, const Checkpoint& c, std::vector<AdamState<float>>* adam) {
    const auto& params = net.parameters();
    DFP_CHECK(c.params.size() == params.size(), "checkpoint has ", c.params.size(),
              " parameters, model has ", params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        const CheckpointParam& cp = c.params[i];
        Tensor<float> p = params[i].second;
        DFP_CHECK(cp.name == params[i].first, "checkpoint parameter ", i, " is '", cp.name,
                  "', expected '", params[i].first, "'");
        DFP_CHECK(cp.shape == p.shape(), "checkpoint parameter '", cp.name,
                  "' has a different shape");
        DFP_CHECK(cp.values.size() == static_cast<size_t>(p.numel()), "checkpoint parameter '",
                  cp.name, "' has ", cp.values.size(), " values, expected ", p.numel());
        std::copy(cp.values.begin(), cp.values.end(), p.data());
        if (adam) {
            (*adam)[i].m = cp.adam_m;
            (*adam)[i].v = cp.adam_v;
            (*adam)[i].step = cp.adam_step;
        }
    }
}
}  // namespace

std::unique_ptr<DFPNet> net_from_checkpoint(const Checkpoint& c) {
    const TrainConfig saved = parse_train_config_text(c.config_text, "checkpoint");
    auto net = std::make_unique<DFPNet>(saved.model, 0);
    load_params_into(*net, c, nullptr);
    return net;
}

void Trainer::restore(const Checkpoint& c) {
    const TrainConfig saved = parse_train_config_text(c.config_text, "checkpoint");
    const std::string want = model_config_text(cfg_.model);
    const std::string got = model_config_text(saved.model);
    DFP_CHECK(want == got,
              "checkpoint was trained with a different model\n--- checkpoint model ---\n", got,
              "--- configured model ---\n", want);
    load_params_into(*net_, c, &adam_);
    DFP_CHECK(c.step < static_cast<uint64_t>(run_until_), "checkpoint is already at step ",
              c.step, " of ", run_until_, "; nothing left to train");
    start_step_ = static_cast<int>(c.step);
    best_val_ = c.best_val;
}

void Trainer::save(const std::string& path, int step) const {
    Checkpoint c;
    c.step = static_cast<uint64_t>(step);
    c.epoch = static_cast<uint64_t>(step / steps_per_epoch_);
    c.best_val = best_val_;
    c.config_text = train_config_text(cfg_);
    const auto& params = net_->parameters();
    c.params.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        CheckpointParam& cp = c.params[i];
        cp.name = params[i].first;
        cp.shape = params[i].second.shape();
        const auto v = params[i].second.values();
        cp.values.assign(v.begin(), v.end());
        cp.adam_m = adam_[i].m;
        cp.adam_v = adam_[i].v;
        cp.adam_step = adam_[i].step;
    }
    save_checkpoint(path, c);
}

const std::vector<int>& Trainer::epoch_order(int epoch) const {
    if (epoch == cached_epoch_) return order_;
    order_ = data_.train_indices();
    Rng rng(seed_mix(cfg_.seed, static_cast<uint64_t>(epoch), kShuffleStream));
    for (int i = static_cast<int>(order_.size()) - 1; i > 0; --i)
        std::swap(order_[i], order_[rng.uniform_int(0, i)]);
    cached_epoch_ = epoch;
    return order_;
}

LossTerms<float> Trainer::loss_terms(const DFPNet::PairOutput& out, const Tensor<float>& img_t,
                                     const Tensor<float>& img_s, const IntrinsicsBatch& K0,
                                     bool with_sd) const {
    const int levels = cfg_.model.levels;
    std::vector<Tensor<float>> pt(levels), ps(levels);
    pt[0] = img_t;
    ps[0] = img_s;
    for (int l = 1; l < levels; ++l) {
        pt[l] = avg_pool2x(pt[l - 1]);
        ps[l] = avg_pool2x(ps[l - 1]);
    }

    auto accumulate = [](Tensor<float>& acc, Tensor<float> term) {
        acc = acc.defined() ? add(acc, std::move(term)) : std::move(term);
    };

    LossTerms<float> terms;
    for (int l = 0; l < levels; ++l) {
        IntrinsicsBatch K;
        K.reserve(K0.size());
        for (const CameraIntrinsics& k : K0) K.push_back(k.at_level(l));

        accumulate(terms.vs,
                   scale(add(view_synthesis_loss(pt[l], ps[l], out.fwd.depth[l], out.fwd.pose, K,
                                                 cfg_.charbonnier),
                             view_synthesis_loss(ps[l], pt[l], out.bwd.depth[l], out.bwd.pose, K,
                                                 cfg_.charbonnier)),
                         kLevelWeight));
        accumulate(terms.ir,
                   scale(add(flow_reconstruction_loss(ps[l], pt[l], out.fwd.flow[l],
                                                      out.fwd.occ[l], cfg_.charbonnier),
                             flow_reconstruction_loss(pt[l], ps[l], out.bwd.flow[l],
                                                      out.bwd.occ[l], cfg_.charbonnier)),
                         kLevelWeight));
        if (with_sd)
            accumulate(terms.sd, scale(add(depth_smoothness_loss(out.fwd.depth[l], pt[l]),
                                           depth_smoothness_loss(out.bwd.depth[l], ps[l])),
                                       kLevelWeight));
    }
    terms.p = pose_consistency_loss(out.fwd.pose, out.bwd.pose, cfg_.charbonnier);
    return terms;
}

double Trainer::validation_loss() const {
    const std::vector<int>& val = data_.val_indices();
    double sum = 0;
    size_t count = 0;
    for (size_t at = 0; at < val.size(); at += cfg_.batch_size) {
        std::vector<const GroundTruthBundle*> batch;
        IntrinsicsBatch K0;
        for (size_t i = at; i < val.size() && i < at + cfg_.batch_size; ++i) {
            batch.push_back(&data_.bundle(val[i]));
            K0.push_back(batch.back()->camera);
        }
        const Tensor<float> img_t = gray_batch(batch, false);
        const Tensor<float> img_s = gray_batch(batch, true);
        const DFPNet::PairOutput out = net_->forward_pair(img_t, img_s, false, 0);
        const LossTerms<float> terms = loss_terms(out, img_t, img_s, K0, false);
        const auto scored = composite_loss(terms, cfg_.weights, 0.0);
        sum += scored.second.total * static_cast<double>(batch.size());
        count += batch.size();
    }
    return sum / static_cast<double>(count);
}

void Trainer::halt_non_finite(int step, int epoch, double lr, const LossReport* rep,
                              const std::string& detail) {
    const std::string path = cfg_.out_dir + "/diagnostics.txt";
    if (std::FILE* f = std::fopen(path.c_str(), "w")) {
        std::fprintf(f, "non-finite value at step %d (epoch %d, lr %.10g)\n%s\n\n", step, epoch,
                     lr, detail.c_str());
        if (rep)
            std::fprintf(f, "loss terms: total=%.10g vs=%.10g ir=%.10g sd=%.10g p=%.10g\n",
                         rep->total, rep->vs, rep->ir, rep->sd, rep->p);
        std::fprintf(f, "\n%-28s %12s %12s\n", "parameter", "max|w|", "max|g|");
        for (const auto& [name, p] : net_->parameters()) {
            double wmax = 0, gmax = 0;
            for (float v : p.values()) wmax = std::max(wmax, std::abs(double(v)));
            if (p.has_grad()) {
                Tensor<float> t = p;
                for (float v : t.grad()) gmax = std::max(gmax, std::abs(double(v)));
            }
            std::fprintf(f, "%-28s %12.5g %12.5g\n", name.c_str(), wmax, gmax);
        }
        std::fprintf(f, "\nlast good checkpoint: %s\n",
                     last_ckpt_.empty() ? "(none)" : last_ckpt_.c_str());
        std::fclose(f);
    }
    fail("training halted: ", detail, " at step ", step, "; diagnostics written to ", path,
         "; last good checkpoint: ", last_ckpt_.empty() ? "(none)" : last_ckpt_);
}

TrainResult Trainer::run() {
    std::filesystem::create_directories(cfg_.out_dir);
    write_train_config(cfg_.out_dir + "/config_resolved.cfg", cfg_);

    TrainResult res;
    res.csv_path = cfg_.out_dir + "/train_log.csv";
    std::FILE* csv = std::fopen(res.csv_path.c_str(), "w");
    DFP_CHECK(csv, "cannot open ", res.csv_path, " for writing");
    std::fprintf(csv, "step,total,vs,ir,sd,p,lr\n");

    last_ckpt_ = cfg_.resume;  // the resume point is the last good state so far
    const auto& params = net_->parameters();

    nlohmann::json epochs = nlohmann::json::array();
    LossReport epoch_sum;
    int epoch_steps = 0;

    for (int step = start_step_ + 1; step <= run_until_; ++step) {
        const int epoch = (step - 1) / steps_per_epoch_;
        const std::vector<int>& order = epoch_order(epoch);
        const int pos = ((step - 1) % steps_per_epoch_) * cfg_.batch_size;

        std::vector<GroundTruthBundle> augmented;  // keeps augmented copies alive
        std::vector<const GroundTruthBundle*> batch;
        IntrinsicsBatch K0;
        augmented.reserve(cfg_.batch_size);
        for (int k = 0; k < cfg_.batch_size; ++k) {
            const GroundTruthBundle& b = data_.bundle(order[pos + k]);
            if (cfg_.augment) {
                AugmentOps ops;
                ops.photometric = true;
                ops.hflip = seed_mix(cfg_.seed, static_cast<uint64_t>(step),
                                     static_cast<uint64_t>(k), kAugmentStream) & 1;
                augmented.push_back(augment(b, ops, seed_mix(cfg_.seed,
                                                             static_cast<uint64_t>(step),
                                                             static_cast<uint64_t>(k),
                                                             kAugmentStream + 1)));
                batch.push_back(&augmented.back());
            } else {
                batch.push_back(&b);
            }
            K0.push_back(batch.back()->camera);
        }

        const Tensor<float> img_t = gray_batch(batch, false);
        const Tensor<float> img_s = gray_batch(batch, true);
        const double epoch_fraction = static_cast<double>(epoch) / total_epochs_;
        const double lr = cfg_.lr * std::pow(cfg_.lr_decay, epoch);

        LossReport rep;
        {
            Graph<float> graph;
            const DFPNet::PairOutput out = net_->forward_pair(
                img_t, img_s, true, seed_mix(cfg_.seed, static_cast<uint64_t>(step),
                                             kDropoutStream));
            const bool with_sd = cfg_.weights.effective_sd(epoch_fraction) > 0.0;
            const LossTerms<float> terms = loss_terms(out, img_t, img_s, K0, with_sd);
            auto scored = composite_loss(terms, cfg_.weights, epoch_fraction);
            rep = scored.second;
            if (!std::isfinite(rep.total)) {
                std::fclose(csv);
                halt_non_finite(step, epoch, lr, &rep, "non-finite total loss");
            }
            graph.backward(scored.first);
            if (std::getenv("DFP_DEBUG_POSE")) {
                Tensor<float> pose = out.fwd.pose;
                auto pv = pose.values();
                const Pose6& gt = batch[0]->pose_ts;
                std::fprintf(stderr, "step %d gt % .5f % .5f % .5f | pose0 % .5f % .5f % .5f | grad0 ",
                             step, gt.t[0], gt.t[1], gt.t[2], pv[0], pv[1], pv[2]);
                if (pose.has_grad()) {
                    auto pg = pose.grad();
                    std::fprintf(stderr, "% .5f % .5f % .5f % .5f % .5f % .5f\n", pg[0], pg[1],
                                 pg[2], pg[3], pg[4], pg[5]);
                } else {
                    std::fprintf(stderr, "(none)\n");
                }
            }
        }

        try {
            for (size_t i = 0; i < params.size(); ++i) {
                Tensor<float> p = params[i].second;
                adam_step(p, adam_[i], static_cast<float>(lr),
                          static_cast<float>(cfg_.adam_beta1),
                          static_cast<float>(cfg_.adam_beta2),
                          static_cast<float>(cfg_.adam_eps));
            }
        } catch (const std::exception& e) {
            std::fclose(csv);
            halt_non_finite(step, epoch, lr, &rep, e.what());
        }
        for (const auto& [name, p] : params) {
            Tensor<float> t = p;
            t.zero_grad();
        }

        if (step == start_step_ + 1) res.first_logged_total = rep.total;
        if (step == 10) res.step10_total = rep.total;
        res.final_total = rep.total;
        if (step == start_step_ + 1 || step % cfg_.log_every == 0 || step == run_until_)
            std::fprintf(csv, "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", step, rep.total,
                         rep.vs, rep.ir, rep.sd, rep.p, lr);

        epoch_sum.total += rep.total;
        epoch_sum.vs += rep.vs;
        epoch_sum.ir += rep.ir;
        epoch_sum.sd += rep.sd;
        epoch_sum.p += rep.p;
        ++epoch_steps;

        if (step % steps_per_epoch_ == 0 || step == run_until_) {
            std::fflush(csv);
            const double v = validation_loss();
            const bool is_best = v < best_val_;
            if (is_best) best_val_ = v;
            last_ckpt_ = cfg_.out_dir + "/ckpt_last.bin";
            save(last_ckpt_, step);
            if (is_best) {
                best_ckpt_ = cfg_.out_dir + "/ckpt_best.bin";
                save(best_ckpt_, step);
            }
            epochs.push_back({{"epoch", epoch},
                              {"steps", epoch_steps},
                              {"total", epoch_sum.total / epoch_steps},
                              {"vs", epoch_sum.vs / epoch_steps},
                              {"ir", epoch_sum.ir / epoch_steps},
                              {"sd", epoch_sum.sd / epoch_steps},
                              {"p", epoch_sum.p / epoch_steps},
                              {"val", v}});
            epoch_sum = LossReport{};
            epoch_steps = 0;
        }
        res.steps = step;
    }
    std::fclose(csv);

    res.best_val = best_val_;
    res.last_checkpoint = last_ckpt_;
    res.best_checkpoint = best_ckpt_;

    const EvalReport final_eval = evaluate(net_.get(), data_, data_.val_indices());

    nlohmann::json j;
    j["code_version"] = kCodeVersion;
    j["config"] = train_config_text(cfg_);
    j["seed"] = cfg_.seed;
    j["steps"] = res.steps;
    j["steps_per_epoch"] = steps_per_epoch_;
    j["total_epochs"] = total_epochs_;
    j["train_samples"] = data_.train_indices().size();
    j["val_samples"] = data_.val_indices().size();
    j["best_val"] = res.best_val;
    j["final_total"] = res.final_total;
    j["checkpoint_last"] = res.last_checkpoint;
    j["checkpoint_best"] = res.best_checkpoint;
    j["csv"] = res.csv_path;
    j["epochs"] = epochs;
    j["final_metrics"] = {{"abs_rel", final_eval.depth.abs_rel},
                          {"sq_rel", final_eval.depth.sq_rel},
                          {"rmse", final_eval.depth.rmse},
                          {"rmse_log", final_eval.depth.rmse_log},
                          {"delta_1.25", final_eval.depth.acc_delta},
                          {"epe", final_eval.flow.epe},
                          {"er", final_eval.flow.er},
                          {"pose_dir_hit", final_eval.pose_dir_hit},
                          {"ate", final_eval.ate},
                          {"samples", final_eval.samples}};
    std::ofstream(cfg_.out_dir + "/run.json") << j.dump(2) << '\n';
    return res;
}

// ---------------------------------------------------------------------------
// evaluation

EvalReport evaluate(const DFPNet* net, const Dataset& data, const std::vector<int>& indices) {
    DFP_CHECK(!indices.empty(), "evaluate: empty index set");
    const DatasetManifest& m = data.manifest();
    const int h = m.height, w = m.width, hw = h * w;
    const size_t n = indices.size();

    std::vector<std::vector<float>> pred_depth(n), pred_flow(n);
    std::vector<Pose6> pred_pose(n), gt_pose(n);

    if (net) {
        DFP_CHECK(net->config().input_height == h && net->config().input_width == w,
                  "evaluate: model expects ", net->config().input_height, "x",
                  net->config().input_width, " but dataset is ", h, "x", w);
        constexpr size_t kEvalBatch = 8;
        for (size_t at = 0; at < n; at += kEvalBatch) {
            std::vector<const GroundTruthBundle*> batch;
            for (size_t i = at; i < n && i < at + kEvalBatch; ++i)
                batch.push_back(&data.bundle(indices[i]));
            const Tensor<float> img_t = gray_batch(batch, false);
            const Tensor<float> img_s = gray_batch(batch, true);
            const DFPOutput out = net->forward(img_t, img_s, false, 0);
            const auto dv = out.depth[0].values();  // [N,1,H,W]
            const auto fv = out.flow[0].values();   // [N,2,H,W], planar
            const auto pv = out.pose.values();      // [N,6]
            for (size_t k = 0; k < batch.size(); ++k) {
                const size_t i = at + k;
                pred_depth[i].assign(dv.begin() + k * hw, dv.begin() + (k + 1) * hw);
                pred_flow[i].resize(static_cast<size_t>(hw) * 2);
                const float* fu = fv.data() + k * 2 * static_cast<size_t>(hw);
                for (int p = 0; p < hw; ++p) {
                    pred_flow[i][2 * p] = fu[p];
                    pred_flow[i][2 * p + 1] = fu[hw + p];
                }
                const float* pr = pv.data() + k * 6;
                pred_pose[i] = Pose6{{pr[0], pr[1], pr[2]}, {pr[3], pr[4], pr[5]}};
            }
        }
    }

    EvalReport r;
    r.samples = static_cast<int>(n);
    const std::vector<uint8_t> all_valid(hw, 1);
    for (size_t i = 0; i < n; ++i) {
        const GroundTruthBundle& b = data.bundle(indices[i]);
        gt_pose[i] = b.pose_ts;
        if (!net) {
            pred_depth[i] = b.depth_t;
            pred_flow[i] = b.flow_ts;
            pred_pose[i] = b.pose_ts;
        }

        const DepthMetrics dm = depth_metrics(pred_depth[i], b.depth_t, all_valid);
        r.depth.abs_rel += dm.abs_rel;
        r.depth.sq_rel += dm.sq_rel;
        r.depth.rmse += dm.rmse;
        r.depth.rmse_log += dm.rmse_log;
        r.depth.acc_delta += dm.acc_delta;

        std::vector<uint8_t> visible(hw);
        for (int p = 0; p < hw; ++p) visible[p] = b.occlusion[p] ? 0 : 1;
        const FlowMetrics fm = flow_metrics(pred_flow[i], b.flow_ts, visible);
        r.flow.epe += fm.epe;
        r.flow.er += fm.er;

        const Vec3 pt = pred_pose[i].t, gt = gt_pose[i].t;
        const double pn = std::sqrt(pt.dot(pt)), gn = std::sqrt(gt.dot(gt));
        if (pn > 0 && gn > 0 && pt.dot(gt) / (pn * gn) >= kPoseDirCos) r.pose_dir_hit += 1;
    }
    const double inv = 1.0 / static_cast<double>(n);
    r.depth.abs_rel *= inv;
    r.depth.sq_rel *= inv;
    r.depth.rmse *= inv;
    r.depth.rmse_log *= inv;
    r.depth.acc_delta *= inv;
    r.flow.epe *= inv;
    r.flow.er *= inv;
    r.pose_dir_hit *= inv;

    const int snippet = std::min<int>(5, static_cast<int>(n));
    r.ate = ate(pred_pose, gt_pose, snippet).ate;
    return r;
}

std::string eval_report_text(const EvalReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "samples=%d\n"
                  "abs_rel=%.8g\n"
                  "sq_rel=%.8g\n"
                  "rmse=%.8g\n"
                  "rmse_log=%.8g\n"
                  "delta_1.25=%.8g\n"
                  "epe=%.8g\n"
                  "er=%.8g\n"
                  "pose_dir_hit=%.8g\n"
                  "ate=%.8g\n",
                  r.samples, r.depth.abs_rel, r.depth.sq_rel, r.depth.rmse, r.depth.rmse_log,
                  r.depth.acc_delta, r.flow.epe, r.flow.er, r.pose_dir_hit, r.ate);
    return buf;
}

std::string eval_report_table(const EvalReport& r) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "evaluated %d sample pairs\n"
                  "  depth   Abs Rel  %8.4f\n"
                  "          Sq Rel   %8.4f\n"
                  "          RMSE     %8.4f\n"
                  "          RMSE log %8.4f\n"
                  "          d<1.25   %8.4f\n"
                  "  flow    EPE      %8.4f px\n"
                  "          ER       %8.4f\n"
                  "  pose    dir hit  %8.4f  (translation axis within 30 deg)\n"
                  "          ATE      %8.4f\n",
                  r.samples, r.depth.abs_rel, r.depth.sq_rel, r.depth.rmse, r.depth.rmse_log,
                  r.depth.acc_delta, r.flow.epe, r.flow.er, r.pose_dir_hit, r.ate);
    return buf;
}

}  // namespace dfp
