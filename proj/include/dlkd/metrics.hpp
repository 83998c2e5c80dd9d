#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "dlkd/enhance.hpp"
#include "dlkd/errors.hpp"
#include "dlkd/model.hpp"
#include "dlkd/video.hpp"

namespace dlkd {

struct MetricsRecord {
    std::string variant; // "baseline" | "teacher" | "student"
    double top1 = 0.0;
    double top5 = 0.0;
    std::size_t test_size = 0;
    std::uint64_t seed = 0;
};

/// Tie rule (fixed and documented): classes are ranked by logit descending,
/// equal logits ranked by lower class index first. The label is in the top k
/// iff fewer than k classes rank strictly ahead of it.
template <typename S>
bool label_in_top_k(const S* logits, std::size_t num_classes, int label, std::size_t k) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
        throw InputError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(num_classes) + " classes");
    const S lv = logits[static_cast<std::size_t>(label)];
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < num_classes; ++j) {
        if (logits[j] > lv) ++ahead;
        else if (logits[j] == lv && j < static_cast<std::size_t>(label)) ++ahead;
    }
    return ahead < k;
}

/// Fraction of samples whose true label is among the k highest logits.
inline double top_k_accuracy(const std::vector<std::vector<float>>& logits_batch,
                             const std::vector<int>& labels, std::size_t k) {
    if (logits_batch.empty()) throw ParamError("top_k_accuracy requires a non-empty batch");
    if (labels.size() != logits_batch.size())
        throw ShapeError("top_k_accuracy: " + std::to_string(logits_batch.size()) +
                         " logit rows vs " + std::to_string(labels.size()) + " labels");
    const std::size_t num_classes = logits_batch.front().size();
    if (k < 1 || k > num_classes)
        throw ParamError("top-k rank " + std::to_string(k) + " out of range [1, " +
                         std::to_string(num_classes) + "]");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < logits_batch.size(); ++i) {
        const auto& row = logits_batch[i];
        if (row.size() != num_classes)
            throw ShapeError("top_k_accuracy: ragged logit rows (" + std::to_string(row.size()) +
                             " vs " + std::to_string(num_classes) + ")");
        if (label_in_top_k(row.data(), num_classes, labels[i], k)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits_batch.size());
}

namespace detail {

inline MetricsRecord metrics_from_logits(const std::vector<std::vector<float>>& logits,
                                         const std::vector<int>& labels, std::size_t num_classes) {
    MetricsRecord rec;
    rec.test_size = logits.size();
    rec.top1 = top_k_accuracy(logits, labels, 1);
    rec.top5 = top_k_accuracy(logits, labels, std::min<std::size_t>(5, num_classes));
    return rec;
}

} // namespace detail

/// Evaluation on RAW clips: the student/baseline inference path, which never
/// touches the enhancement module.
inline MetricsRecord evaluate(const Model& model, const Dataset& test) {
    if (test.clips.empty()) throw InputError("cannot evaluate on an empty dataset");
    std::vector<std::vector<float>> logits;
    std::vector<int> labels;
    logits.reserve(test.size());
    labels.reserve(test.size());
    for (const VideoClip& clip : test.clips) {
        logits.push_back(forward_logits(model, clip).data);
        labels.push_back(clip.label);
    }
    return detail::metrics_from_logits(logits, labels, model.config.num_classes);
}

/// Teacher-style evaluation: each clip is enhanced first (one enhancement
/// call per clip), then forwarded.
inline MetricsRecord evaluate_enhanced(const Model& model, const Dataset& test,
                                       const EnhanceParams& params) {
    if (test.clips.empty()) throw InputError("cannot evaluate on an empty dataset");
    std::vector<std::vector<float>> logits;
    std::vector<int> labels;
    logits.reserve(test.size());
    labels.reserve(test.size());
    for (const VideoClip& clip : test.clips) {
        logits.push_back(forward_logits(model, enhance(clip, params)).data);
        labels.push_back(clip.label);
    }
    return detail::metrics_from_logits(logits, labels, model.config.num_classes);
}

inline void write_metrics_csv(const std::vector<MetricsRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot write metrics CSV '" + path + "'");
    f << "variant,seed,top1,top5,test_size\n";
    f.precision(10);
    for (const MetricsRecord& r : records)
        f << r.variant << ',' << r.seed << ',' << r.top1 << ',' << r.top5 << ',' << r.test_size
          << "\n";
    if (!f) throw Error("metrics CSV write failed for '" + path + "'");
}

} // namespace dlkd
