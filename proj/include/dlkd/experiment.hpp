#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "dlkd/config.hpp"
#include "dlkd/errors.hpp"
#include "dlkd/metrics.hpp"
#include "dlkd/synth.hpp"
#include "dlkd/trainer.hpp"

namespace dlkd {

/// Deterministic sub-seeds for one experiment seed. Student and baseline
/// share init and shuffle seeds on purpose: the KD loss term is then the
/// only difference between the two arms (a paired comparison).
struct SeedPlan {
    std::uint64_t generate;
    std::uint64_t split;
    std::uint64_t teacher_init;
    std::uint64_t student_init; // also baseline init
    std::uint64_t darken_noise;
    std::uint64_t teacher_shuffle;
    std::uint64_t student_shuffle; // also baseline shuffle
};

inline SeedPlan seed_plan(std::uint64_t seed) {
    return SeedPlan{mix64(seed, 0), mix64(seed, 1), mix64(seed, 2), mix64(seed, 3),
                    mix64(seed, 4), mix64(seed, 5), mix64(seed, 6)};
}

struct SeedResult {
    std::uint64_t seed = 0;
    MetricsRecord teacher;
    MetricsRecord student;
    MetricsRecord baseline;
};

struct VariantStats {
    double mean_top1 = 0.0;
    double std_top1 = 0.0;
    double mean_top5 = 0.0;
    double std_top5 = 0.0;
};

struct ExperimentReport {
    DatasetProvenance provenance;
    std::vector<SeedResult> per_seed;
    VariantStats teacher;
    VariantStats student;
    VariantStats baseline;
    double delta_student_baseline = 0.0; // mean student top-1 minus mean baseline top-1
    double delta_student_teacher = 0.0;
};

namespace detail {

inline VariantStats variant_stats(const std::vector<MetricsRecord>& recs) {
    VariantStats s;
    const double n = static_cast<double>(recs.size());
    for (const auto& r : recs) {
        s.mean_top1 += r.top1;
        s.mean_top5 += r.top5;
    }
    s.mean_top1 /= n;
    s.mean_top5 /= n;
    double v1 = 0.0, v5 = 0.0;
    for (const auto& r : recs) {
        v1 += (r.top1 - s.mean_top1) * (r.top1 - s.mean_top1);
        v5 += (r.top5 - s.mean_top5) * (r.top5 - s.mean_top5);
    }
    s.std_top1 = std::sqrt(v1 / n);
    s.std_top5 = std::sqrt(v5 / n);
    return s;
}

} // namespace detail

inline void write_experiment_csv(const ExperimentReport& rep, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot write report CSV '" + path + "'");
    f.precision(10);
    f << "variant,seed,top1,top5,test_size\n";
    for (const SeedResult& sr : rep.per_seed)
        for (const MetricsRecord* r : {&sr.teacher, &sr.student, &sr.baseline})
            f << r->variant << ',' << r->seed << ',' << r->top1 << ',' << r->top5 << ','
              << r->test_size << "\n";
    const std::pair<const char*, const VariantStats*> variants[] = {
        {"teacher", &rep.teacher}, {"student", &rep.student}, {"baseline", &rep.baseline}};
    for (const auto& [name, st] : variants) {
        f << name << ",mean," << st->mean_top1 << ',' << st->mean_top5 << ",\n";
        f << name << ",std," << st->std_top1 << ',' << st->std_top5 << ",\n";
    }
    f << "delta_student_minus_baseline,top1," << rep.delta_student_baseline << ",,\n";
    f << "delta_student_minus_teacher,top1," << rep.delta_student_teacher << ",,\n";
    if (!f) throw Error("report CSV write failed for '" + path + "'");
}

/// Aligned text table, one row per variant, mirroring the three-arm
/// comparison layout.
inline std::string experiment_table(const ExperimentReport& rep) {
    std::ostringstream os;
    os << "three-arm comparison over " << rep.per_seed.size() << " seed(s)\n";
    os << "dataset: " << rep.provenance.num_classes << " classes x " << rep.provenance.per_class
       << " clips, dims " << rep.provenance.dims.str();
    if (rep.provenance.darkened)
        os << ", darkened (gamma=" << rep.provenance.gamma_dark
           << " scale=" << rep.provenance.scale << " sigma=" << rep.provenance.noise_sigma << ")";
    os << "\nseeds:";
    for (const SeedResult& sr : rep.per_seed) os << ' ' << sr.seed;
    os << "\n\n";
    os << std::left << std::setw(10) << "variant" << std::right << std::setw(11) << "mean_top1"
       << std::setw(10) << "std_top1" << std::setw(11) << "mean_top5" << std::setw(10)
       << "std_top5" << "\n";
    os << std::fixed << std::setprecision(4);
    const std::pair<const char*, const VariantStats*> variants[] = {
        {"teacher", &rep.teacher}, {"student", &rep.student}, {"baseline", &rep.baseline}};
    for (const auto& [name, st] : variants) {
        os << std::left << std::setw(10) << name << std::right << std::setw(11) << st->mean_top1
           << std::setw(10) << st->std_top1 << std::setw(11) << st->mean_top5 << std::setw(10)
           << st->std_top5 << "\n";
    }
    os << "\ndeltas (mean top-1): student - baseline = " << std::showpos
       << rep.delta_student_baseline << ", student - teacher = " << rep.delta_student_teacher
       << std::noshowpos << "\n";
    return os.str();
}

/// Runs the full comparison: per seed, prepare data, train the teacher on
/// enhanced clips, cache its logits, train the distilled student and the
/// no-distillation baseline on raw clips, and evaluate all three on the
/// held-out split. Artifacts land under out_dir as each arm finishes, so a
/// failing arm leaves earlier results on disk.
inline ExperimentReport run_experiment(const FileConfig& fc, const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (fc.seeds.empty()) throw ConfigError("experiment needs at least one seed");
    fs::create_directories(out_dir);

    ExperimentReport rep;
    std::vector<MetricsRecord> teacher_recs, student_recs, baseline_recs;

    for (std::uint64_t seed : fc.seeds) {
        const SeedPlan plan = seed_plan(seed);
        const fs::path seed_dir = fs::path(out_dir) / ("seed" + std::to_string(seed));
        fs::create_directories(seed_dir);

        auto guard = [&](const char* arm, auto&& fn) {
            try {
                return fn();
            } catch (const ExperimentError&) {
                throw;
            } catch (const Error& e) {
                throw ExperimentError(e.what(), arm, seed);
            }
        };

        Dataset dark = guard("data", [&] {
            if (!fc.data_dir.empty()) return read_dataset(fc.data_dir);
            Dataset bright = generate_dataset(fc.classes, fc.per_class, fc.dims, plan.generate);
            DarkenParams dp = darken_params_from(fc);
            dp.noise_seed = plan.darken_noise;
            return darken_dataset(bright, dp);
        });
        auto [train, test] = guard("data", [&] {
            return split_dataset(dark, fc.train_fraction, plan.split);
        });
        rep.provenance = dark.provenance;

        TrainConfig base_cfg =
            train_config_for(fc, dark.class_names.size(), dark.provenance.dims);

        SeedResult sr;
        sr.seed = seed;

        Model teacher = guard("teacher", [&] {
            TrainConfig cfg = base_cfg;
            cfg.model.init_seed = plan.teacher_init;
            cfg.shuffle_seed = plan.teacher_shuffle;
            auto [model, run] = train_teacher(train, cfg);
            save_model(model, (seed_dir / "teacher.ckpt").string());
            write_training_csv(run, (seed_dir / "teacher_train.csv").string());
            return std::move(model);
        });
        sr.teacher = evaluate_enhanced(teacher, test, base_cfg.enhance);
        sr.teacher.variant = "teacher";
        sr.teacher.seed = seed;

        LogitStore store = guard("cache-logits", [&] {
            LogitStore s = cache_teacher_logits(teacher, base_cfg.enhance, train);
            save_logit_store(s, (seed_dir / "teacher_logits.dlkl").string());
            return s;
        });

        Model student = guard("student", [&] {
            TrainConfig cfg = base_cfg;
            cfg.model.init_seed = plan.student_init;
            cfg.shuffle_seed = plan.student_shuffle;
            auto [model, run] = train_student(train, store, cfg);
            save_model(model, (seed_dir / "student.ckpt").string());
            write_training_csv(run, (seed_dir / "student_train.csv").string());
            return std::move(model);
        });
        sr.student = evaluate(student, test);
        sr.student.variant = "student";
        sr.student.seed = seed;

        Model baseline = guard("baseline", [&] {
            TrainConfig cfg = base_cfg;
            cfg.model.init_seed = plan.student_init;
            cfg.shuffle_seed = plan.student_shuffle;
            auto [model, run] = train_baseline(train, cfg);
            save_model(model, (seed_dir / "baseline.ckpt").string());
            write_training_csv(run, (seed_dir / "baseline_train.csv").string());
            return std::move(model);
        });
        sr.baseline = evaluate(baseline, test);
        sr.baseline.variant = "baseline";
        sr.baseline.seed = seed;

        teacher_recs.push_back(sr.teacher);
        student_recs.push_back(sr.student);
        baseline_recs.push_back(sr.baseline);
        rep.per_seed.push_back(std::move(sr));
    }

    rep.teacher = detail::variant_stats(teacher_recs);
    rep.student = detail::variant_stats(student_recs);
    rep.baseline = detail::variant_stats(baseline_recs);
    rep.delta_student_baseline = rep.student.mean_top1 - rep.baseline.mean_top1;
    rep.delta_student_teacher = rep.student.mean_top1 - rep.teacher.mean_top1;

    write_experiment_csv(rep, (fs::path(out_dir) / "report.csv").string());
    std::ofstream table(fs::path(out_dir) / "report.txt", std::ios::trunc);
    if (!table) throw Error("cannot write report table in '" + out_dir + "'");
    table << experiment_table(rep);
    return rep;
}

inline ExperimentReport run_experiment_file(const std::string& config_path,
                                            const std::string& out_dir) {
    return run_experiment(load_config(config_path), out_dir);
}

/// The frozen three-arm benchmark recipe: dataset and model knobs are the
/// FileConfig defaults; batch size is dropped to 1 because the benchmark's
/// budget (40 epochs at learning rate 1e-4) needs the extra optimizer steps
/// to move a from-scratch model off chance, and batch size is the one
/// optimisation knob the benchmark definition leaves free.  Seeds 1, 2, 3
/// are the pinned comparison seeds.
inline FileConfig bench_v1_experiment_config() {
    FileConfig fc;
    fc.batch_size = 1;
    return fc;
}

} // namespace dlkd
