#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dlkd/adamw.hpp"
#include "dlkd/enhance.hpp"
#include "dlkd/errors.hpp"
#include "dlkd/losses.hpp"
#include "dlkd/metrics.hpp"
#include "dlkd/model.hpp"
#include "dlkd/rng.hpp"
#include "dlkd/video.hpp"

namespace dlkd {

struct TrainConfig {
    ModelConfig model;
    std::size_t epochs = 40;
    std::size_t batch_size = 8;
    double learning_rate = 1e-4;
    LossWeights loss;
    EnhanceParams enhance; // teacher arm only
    std::uint64_t shuffle_seed = 0;
    AdamWConfig adamw;

    void validate() const {
        model.validate();
        if (epochs < 1) throw ParamError("epochs must be >= 1");
        if (batch_size < 1) throw ParamError("batch size must be >= 1");
        if (!(learning_rate > 0.0)) throw ParamError("learning rate must be > 0");
        loss.validate();
        enhance.validate();
        adamw.validate();
    }
};

/// Cached teacher outputs for offline distillation: one logits vector per
/// training clip id, tied to the exact teacher checkpoint that produced it.
struct LogitStore {
    std::uint64_t teacher_hash = 0;
    std::map<std::string, std::vector<float>> logits;

    std::size_t size() const { return logits.size(); }

    const std::vector<float>& at(const std::string& clip_id) const {
        auto it = logits.find(clip_id);
        if (it == logits.end())
            throw ConsistencyError("logit store has no entry for clip '" + clip_id + "'");
        return it->second;
    }
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double l_ar = 0.0;     // mean CE over the epoch's clips
    double l_kd = 0.0;     // mean KL (0 for teacher/baseline arms)
    double total = 0.0;    // mean weighted total loss
    double train_top1 = 0.0;
    double wall_seconds = 0.0;

    /// Everything except wall time, which legitimately varies across runs.
    bool same_numbers(const EpochRecord& o) const {
        return epoch == o.epoch && l_ar == o.l_ar && l_kd == o.l_kd && total == o.total &&
               train_top1 == o.train_top1;
    }
};

struct TrainingRun {
    std::string arm; // "teacher" | "student" | "baseline"
    std::vector<EpochRecord> records;
    double wall_seconds = 0.0;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;
};

inline bool same_numbers(const TrainingRun& a, const TrainingRun& b) {
    if (a.arm != b.arm || a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i)
        if (!a.records[i].same_numbers(b.records[i])) return false;
    return true;
}

namespace detail {

enum class TrainArm { Teacher, Student, Baseline };

inline const char* arm_name(TrainArm arm) {
    switch (arm) {
        case TrainArm::Teacher: return "teacher";
        case TrainArm::Student: return "student";
        case TrainArm::Baseline: return "baseline";
    }
    return "?";
}

/// One optimisation loop shared by all three arms. The teacher enhances each
/// clip as its batch is formed (exactly once per clip per epoch) and trains
/// on plain cross-entropy. The student trains on raw clips with
/// alpha*CE + beta*KL against cached teacher logits. The baseline is the
/// student path with beta == 0, in which case the KL term is skipped
/// entirely, so student(beta=0) and baseline execute identical arithmetic.
inline std::pair<Model, TrainingRun> run_training(const Dataset& train, const LogitStore* soft,
                                                  const TrainConfig& cfg, TrainArm arm) {
    cfg.validate();
    if (train.clips.empty()) throw InputError("training dataset is empty");
    const std::size_t K = cfg.model.num_classes;
    for (const VideoClip& clip : train.clips)
        if (clip.label < 0 || static_cast<std::size_t>(clip.label) >= K)
            throw InputError("clip '" + clip.id + "' label " + std::to_string(clip.label) +
                             " out of range for " + std::to_string(K) + " classes");

    const bool use_kd = arm == TrainArm::Student && cfg.loss.beta > 0.0;
    if (arm == TrainArm::Student) {
        if (soft == nullptr) throw ConsistencyError("student training requires a logit store");
        for (const VideoClip& clip : train.clips) {
            const auto& tl = soft->at(clip.id); // throws before any step if missing
            if (tl.size() != K)
                throw ConsistencyError("teacher logits for clip '" + clip.id + "' have length " +
                                       std::to_string(tl.size()) + ", expected " +
                                       std::to_string(K));
        }
    }

    Model model = build_classifier(cfg.model);
    const std::size_t n_params = model.param_count();
    std::vector<float> flat_params(n_params), flat_grads(n_params);
    AdamWState opt(cfg.adamw);

    TrainingRun run;
    run.arm = arm_name(arm);
    run.init_seed = cfg.model.init_seed;
    run.shuffle_seed = cfg.shuffle_seed;

    const auto t_start = std::chrono::steady_clock::now();
    auto seconds_since = [](std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    std::vector<std::size_t> order(train.clips.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        Rng shuffle_rng(mix64(cfg.shuffle_seed, epoch));
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);

        double sum_ar = 0.0, sum_kd = 0.0, sum_total = 0.0;
        std::size_t correct = 0;
        std::size_t step = 0;

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++step) {
            const std::size_t end = std::min(begin + cfg.batch_size, order.size());
            Graph g;
            std::vector<Graph::NodeId> clip_losses;
            for (std::size_t pos = begin; pos < end; ++pos) {
                const VideoClip& clip = train.clips[order[pos]];
                Tensor input = arm == TrainArm::Teacher
                                   ? clip_to_tensor<float>(enhance(clip, cfg.enhance))
                                   : clip_to_tensor<float>(clip);
                auto logits = model_forward(g, model, input);
                auto l_ar = cross_entropy(g, logits, static_cast<std::size_t>(clip.label));
                Graph::NodeId total;
                if (arm == TrainArm::Teacher) {
                    total = l_ar;
                } else if (use_kd) {
                    Tensor teacher(Shape{K}, std::vector<float>(soft->at(clip.id)));
                    auto l_kd = kl_soft_targets(g, teacher, logits,
                                                static_cast<float>(cfg.loss.temperature));
                    sum_kd += g.value(l_kd).scalar_value();
                    total = student_total_loss(g, l_ar, l_kd, cfg.loss);
                } else {
                    total = scale(g, l_ar, static_cast<float>(cfg.loss.alpha));
                }
                sum_ar += g.value(l_ar).scalar_value();
                sum_total += g.value(total).scalar_value();
                if (label_in_top_k(g.value(logits).data.data(), K, clip.label, 1)) ++correct;
                clip_losses.push_back(total);
            }
            auto batch_loss = mean_of(g, clip_losses);
            const float loss_value = g.value(batch_loss).scalar_value();
            if (!std::isfinite(loss_value))
                throw TrainError("non-finite batch loss " + std::to_string(loss_value), epoch,
                                 step);
            g.backward(batch_loss);
            std::size_t off = 0;
            for (const auto& p : model.params) {
                std::copy(p.tensor.data.begin(), p.tensor.data.end(), flat_params.begin() + off);
                std::copy(p.tensor.grad.begin(), p.tensor.grad.end(), flat_grads.begin() + off);
                off += p.tensor.numel();
            }
            adamw_step(flat_params, flat_grads, opt, cfg.learning_rate);
            off = 0;
            for (auto& p : model.params) {
                std::copy(flat_params.begin() + off,
                          flat_params.begin() + off + p.tensor.numel(), p.tensor.data.begin());
                off += p.tensor.numel();
            }
        }

        const double n = static_cast<double>(train.clips.size());
        EpochRecord rec;
        rec.epoch = epoch;
        rec.l_ar = sum_ar / n;
        rec.l_kd = sum_kd / n;
        rec.total = sum_total / n;
        rec.train_top1 = static_cast<double>(correct) / n;
        rec.wall_seconds = seconds_since(t_epoch);
        if (!std::isfinite(rec.l_ar) || !std::isfinite(rec.l_kd) || !std::isfinite(rec.total))
            throw TrainError("non-finite epoch mean loss", epoch, step);
        run.records.push_back(rec);
    }
    run.wall_seconds = seconds_since(t_start);
    return {std::move(model), std::move(run)};
}

} // namespace detail

/// Teacher arm: enhance each clip, forward, cross-entropy, AdamW.
inline std::pair<Model, TrainingRun> train_teacher(const Dataset& train, const TrainConfig& cfg) {
    return detail::run_training(train, nullptr, cfg, detail::TrainArm::Teacher);
}

/// Student arm: raw clips, alpha*CE + beta*KL against cached teacher logits.
inline std::pair<Model, TrainingRun> train_student(const Dataset& train, const LogitStore& soft,
                                                   const TrainConfig& cfg) {
    return detail::run_training(train, &soft, cfg, detail::TrainArm::Student);
}

/// Baseline arm: the student path with beta forced to 0 and no logit store.
inline std::pair<Model, TrainingRun> train_baseline(const Dataset& train, const TrainConfig& cfg) {
    TrainConfig no_kd = cfg;
    no_kd.loss.beta = 0.0;
    return detail::run_training(train, nullptr, no_kd, detail::TrainArm::Baseline);
}

/// Runs the frozen teacher over every training clip (enhanced, no gradients)
/// and stores the resulting logits keyed by clip id.
inline LogitStore cache_teacher_logits(const Model& teacher, const EnhanceParams& params,
                                       const Dataset& train) {
    params.validate();
    if (train.clips.empty()) throw InputError("cannot cache logits for an empty dataset");
    LogitStore store;
    store.teacher_hash = checkpoint_hash(teacher);
    for (const VideoClip& clip : train.clips) {
        Tensor logits = forward_logits(teacher, enhance(clip, params));
        if (!logits.all_finite())
            throw ConsistencyError("teacher produced non-finite logits for clip '" + clip.id + "'");
        if (!store.logits.emplace(clip.id, logits.data).second)
            throw ConsistencyError("duplicate clip id '" + clip.id + "' while caching logits");
    }
    return store;
}

// ---------------------------------------------------------------------------
// Logit store format: magic "DLKL", teacher checkpoint hash (u64), entry
// count (u64), logits length K (u32), then per entry the clip id (u32 length
// + bytes) and K little-endian f32 logits. Entries are written in id order.
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> logit_store_bytes(const LogitStore& store) {
    std::size_t K = store.logits.empty() ? 0 : store.logits.begin()->second.size();
    for (const auto& [id, vec] : store.logits)
        if (vec.size() != K)
            throw ConsistencyError("logit store entry '" + id + "' has length " +
                                   std::to_string(vec.size()) + ", expected " + std::to_string(K));
    ByteWriter w;
    w.str("DLKL");
    w.u64(store.teacher_hash);
    w.u64(store.logits.size());
    w.u32(static_cast<std::uint32_t>(K));
    for (const auto& [id, vec] : store.logits) {
        w.u32(static_cast<std::uint32_t>(id.size()));
        w.str(id);
        for (float v : vec) w.f32(v);
    }
    return w.buffer();
}

inline void save_logit_store(const LogitStore& store, const std::string& path) {
    ByteWriter w;
    auto bytes = logit_store_bytes(store);
    w.bytes(bytes.data(), bytes.size());
    w.write_file(path);
}

inline LogitStore load_logit_store(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("DLKL");
    LogitStore store;
    store.teacher_hash = r.u64();
    const std::uint64_t count = r.u64();
    const std::uint32_t K = r.u32();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::size_t at = r.offset();
        std::string id = r.str(r.u32());
        std::vector<float> vec(K);
        for (float& v : vec) v = r.f32();
        for (float v : vec)
            if (!std::isfinite(v))
                throw ConsistencyError("non-finite teacher logit for clip '" + id + "'");
        if (!store.logits.emplace(std::move(id), std::move(vec)).second)
            throw FormatError("duplicate clip id in logit store", at);
    }
    r.expect_end();
    return store;
}

/// Per-epoch training curve as CSV.
inline void write_training_csv(const TrainingRun& run, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot write training CSV '" + path + "'");
    f << "epoch,l_ar,l_kd,total,train_top1,wall_seconds\n";
    f.precision(10);
    for (const EpochRecord& r : run.records)
        f << r.epoch << ',' << r.l_ar << ',' << r.l_kd << ',' << r.total << ',' << r.train_top1
          << ',' << r.wall_seconds << "\n";
    if (!f) throw Error("training CSV write failed for '" + path + "'");
}

} // namespace dlkd
