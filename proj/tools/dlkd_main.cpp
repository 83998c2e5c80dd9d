// Command-line interface binding the whole pipeline together: synthetic data
// generation, the three training arms, logit caching, evaluation, the
// multi-seed experiment harness, and the finite-difference gradient suite.
//
// Exit codes: 0 success, 1 usage/config error, 2 data/format error,
// 3 numeric failure (NaN during training, gradient check mismatch).

#include <cstdint>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dlkd/dlkd.hpp"

namespace {

dlkd::FileConfig load_config_checked(const std::string& path) { return dlkd::load_config(path); }

dlkd::Dataset load_dataset_checked(const std::string& dir) {
    dlkd::Dataset ds = dlkd::read_dataset(dir);
    if (ds.clips.empty()) throw dlkd::InputError("dataset '" + dir + "' contains no clips");
    return ds;
}

dlkd::TrainConfig train_config_for_dataset(const dlkd::FileConfig& fc, const dlkd::Dataset& ds) {
    return dlkd::train_config_for(fc, ds.class_names.size(), ds.provenance.dims);
}

void report_training(const dlkd::TrainingRun& run) {
    const auto& last = run.records.back();
    std::cout << run.arm << ": " << run.records.size() << " epochs, final total loss "
              << last.total << ", train top-1 " << last.train_top1 << " ("
              << run.wall_seconds << "s)\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-light knowledge distillation for dark-video action recognition"};
    app.require_subcommand(1);
    std::function<int()> run;

    // gen-data -----------------------------------------------------------
    std::size_t gd_classes = dlkd::bench_v1::kNumClasses;
    std::size_t gd_per_class = dlkd::bench_v1::kClipsPerClass;
    std::string gd_dims = dlkd::bench_v1::kDims.str();
    std::uint64_t gd_seed = 0;
    std::string gd_out;
    double gd_gamma = dlkd::bench_v1::kGammaDark;
    double gd_scale = dlkd::bench_v1::kScale;
    double gd_noise = dlkd::bench_v1::kNoiseSigma;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic motion dataset");
    gen->add_option("--classes", gd_classes, "number of motion classes (2-8)");
    gen->add_option("--per-class", gd_per_class, "clips per class");
    gen->add_option("--dims", gd_dims, "clip dims as CxTxHxW");
    gen->add_option("--seed", gd_seed, "generation seed");
    gen->add_option("--out", gd_out, "output dataset directory")->required();
    auto* opt_gamma = gen->add_option("--gamma-dark", gd_gamma, "darkening gamma (>= 1)");
    auto* opt_scale = gen->add_option("--scale", gd_scale, "darkening brightness scale (0, 1]");
    auto* opt_noise = gen->add_option("--noise", gd_noise, "darkening noise sigma (>= 0)");
    gen->callback([&] {
        run = [&] {
            dlkd::ClipDims dims = dlkd::detail::parse_dims_value("--dims", gd_dims);
            dlkd::Dataset ds = dlkd::generate_dataset(gd_classes, gd_per_class, dims, gd_seed);
            const bool darkening = opt_gamma->count() || opt_scale->count() || opt_noise->count();
            if (darkening) {
                // Noise seed is derived from the generation seed so the whole
                // dataset remains a function of --seed alone.
                dlkd::DarkenParams dp{gd_gamma, gd_scale, gd_noise, dlkd::mix64(gd_seed, 1)};
                ds = dlkd::darken_dataset(ds, dp);
            }
            dlkd::write_dataset(ds, gd_out);
            std::cout << "wrote " << ds.size() << (darkening ? " darkened" : " bright")
                      << " clips (" << gd_classes << " classes) to " << gd_out << "\n";
            return 0;
        };
    });

    // train-teacher ------------------------------------------------------
    std::string tt_data, tt_config, tt_out, tt_metrics;
    auto* teach = app.add_subcommand("train-teacher", "train the enhanced-input teacher");
    teach->add_option("--data", tt_data, "training dataset directory")->required();
    teach->add_option("--config", tt_config, "key = value config file")->required();
    teach->add_option("--out", tt_out, "output checkpoint path")->required();
    teach->add_option("--metrics", tt_metrics, "per-epoch training CSV")->required();
    teach->callback([&] {
        run = [&] {
            dlkd::FileConfig fc = load_config_checked(tt_config);
            dlkd::Dataset ds = load_dataset_checked(tt_data);
            auto [model, record] = dlkd::train_teacher(ds, train_config_for_dataset(fc, ds));
            dlkd::save_model(model, tt_out);
            dlkd::write_training_csv(record, tt_metrics);
            report_training(record);
            return 0;
        };
    });

    // cache-logits -------------------------------------------------------
    std::string cl_teacher, cl_data, cl_out, cl_config;
    auto* cache = app.add_subcommand("cache-logits", "store teacher logits for every clip");
    cache->add_option("--teacher", cl_teacher, "teacher checkpoint")->required();
    cache->add_option("--data", cl_data, "training dataset directory")->required();
    cache->add_option("--out", cl_out, "output logit store path")->required();
    cache->add_option("--config", cl_config,
                      "optional config file for enhancement parameters (defaults otherwise)");
    cache->callback([&] {
        run = [&] {
            dlkd::Model teacher = dlkd::load_model(cl_teacher);
            dlkd::Dataset ds = load_dataset_checked(cl_data);
            dlkd::EnhanceParams params;
            if (!cl_config.empty()) params = dlkd::enhance_params_from(load_config_checked(cl_config));
            dlkd::LogitStore store = dlkd::cache_teacher_logits(teacher, params, ds);
            dlkd::save_logit_store(store, cl_out);
            std::cout << "cached " << store.size() << " logit vectors (teacher hash "
                      << store.teacher_hash << ") to " << cl_out << "\n";
            return 0;
        };
    });

    // train-student ------------------------------------------------------
    std::string ts_data, ts_logits, ts_config, ts_out, ts_metrics;
    auto* stud = app.add_subcommand("train-student", "train the distilled raw-input student");
    stud->add_option("--data", ts_data, "training dataset directory")->required();
    stud->add_option("--logits", ts_logits, "cached teacher logit store")->required();
    stud->add_option("--config", ts_config, "key = value config file")->required();
    stud->add_option("--out", ts_out, "output checkpoint path")->required();
    stud->add_option("--metrics", ts_metrics, "per-epoch training CSV")->required();
    stud->callback([&] {
        run = [&] {
            dlkd::FileConfig fc = load_config_checked(ts_config);
            dlkd::Dataset ds = load_dataset_checked(ts_data);
            dlkd::LogitStore store = dlkd::load_logit_store(ts_logits);
            auto [model, record] =
                dlkd::train_student(ds, store, train_config_for_dataset(fc, ds));
            dlkd::save_model(model, ts_out);
            dlkd::write_training_csv(record, ts_metrics);
            report_training(record);
            return 0;
        };
    });

    // train-baseline -----------------------------------------------------
    std::string tb_data, tb_config, tb_out, tb_metrics;
    auto* base = app.add_subcommand("train-baseline", "train the no-distillation baseline");
    base->add_option("--data", tb_data, "training dataset directory")->required();
    base->add_option("--config", tb_config, "key = value config file")->required();
    base->add_option("--out", tb_out, "output checkpoint path")->required();
    base->add_option("--metrics", tb_metrics, "per-epoch training CSV")->required();
    base->callback([&] {
        run = [&] {
            dlkd::FileConfig fc = load_config_checked(tb_config);
            dlkd::Dataset ds = load_dataset_checked(tb_data);
            auto [model, record] = dlkd::train_baseline(ds, train_config_for_dataset(fc, ds));
            dlkd::save_model(model, tb_out);
            dlkd::write_training_csv(record, tb_metrics);
            report_training(record);
            return 0;
        };
    });

    // eval ---------------------------------------------------------------
    std::string ev_model, ev_data, ev_out;
    bool ev_enhance = false;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    ev->add_option("--model", ev_model, "model checkpoint")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_flag("--enhance", ev_enhance, "enhance clips first (teacher-style evaluation)");
    ev->add_option("--out", ev_out, "output metrics CSV")->required();
    ev->callback([&] {
        run = [&] {
            dlkd::Model model = dlkd::load_model(ev_model);
            dlkd::Dataset ds = load_dataset_checked(ev_data);
            dlkd::MetricsRecord rec =
                ev_enhance ? dlkd::evaluate_enhanced(model, ds, dlkd::EnhanceParams{})
                           : dlkd::evaluate(model, ds);
            rec.variant = ev_enhance ? "enhanced" : "raw";
            dlkd::write_metrics_csv({rec}, ev_out);
            std::cout << rec.variant << " eval on " << rec.test_size << " clips: top-1 "
                      << rec.top1 << ", top-5 " << rec.top5 << "\n";
            return 0;
        };
    });

    // experiment ---------------------------------------------------------
    std::string ex_config, ex_out;
    auto* ex = app.add_subcommand("experiment",
                                  "run the three-arm comparison over the configured seeds");
    ex->add_option("--config", ex_config,
                   "key = value config file (defaults to the pinned benchmark recipe)");
    ex->add_option("--out", ex_out, "output directory for checkpoints and reports")->required();
    ex->callback([&] {
        run = [&] {
            dlkd::FileConfig fc = ex_config.empty() ? dlkd::bench_v1_experiment_config()
                                                    : load_config_checked(ex_config);
            dlkd::ExperimentReport rep = dlkd::run_experiment(fc, ex_out);
            std::cout << dlkd::experiment_table(rep);
            return 0;
        };
    });

    // gradcheck ----------------------------------------------------------
    std::uint64_t gc_seed = 0;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gc->add_option("--seed", gc_seed, "base seed for the random probes");
    gc->callback([&] {
        run = [&] {
            auto results = dlkd::run_gradcheck_suite(gc_seed, 10);
            std::size_t failed = 0;
            for (const auto& r : results) {
                if (!r.ok) {
                    ++failed;
                    std::cout << "FAIL " << r.name << " seed=" << r.seed << ": " << r.detail
                              << "\n";
                }
            }
            std::cout << results.size() - failed << "/" << results.size()
                      << " gradient checks passed\n";
            return failed == 0 ? 0 : 3;
        };
    });

    try {
        app.parse(argc, argv);
        return run ? run() : 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const dlkd::TrainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const dlkd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const dlkd::ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const dlkd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
