#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dlkd/enhance.hpp"
#include "dlkd/errors.hpp"
#include "dlkd/synth.hpp"
#include "dlkd/trainer.hpp"

namespace dlkd {

/// Every tunable knob of the pipeline, parsed from a line-oriented
/// `key = value` file. Defaults are the desk-scale recipe (the benchmark
/// dataset constants plus the standard model and optimiser settings); the
/// benchmark comparison itself runs bench_v1_experiment_config(), which
/// differs only in batch size.
struct FileConfig {
    // dataset generation / location
    std::size_t classes = bench_v1::kNumClasses;
    std::size_t per_class = bench_v1::kClipsPerClass;
    ClipDims dims = bench_v1::kDims;
    std::uint64_t data_seed = 0;
    double gamma_dark = bench_v1::kGammaDark;
    double scale = bench_v1::kScale;
    double noise_sigma = bench_v1::kNoiseSigma;
    std::uint64_t noise_seed = 0;
    std::string data_dir; // when set, load this dataset instead of generating
    double train_fraction = bench_v1::kTrainFraction;

    // model architecture
    std::vector<std::size_t> widths{8, 16};
    std::size_t spatial_kernel = 5;
    std::size_t temporal_kernel = 5;
    std::uint64_t init_seed = 0;

    // optimisation
    std::size_t epochs = 40;
    std::size_t batch_size = 8;
    double learning_rate = 1e-4;
    double alpha = 1.0;
    double beta = 1.0;
    double temperature = 1.0;
    std::uint64_t shuffle_seed = 0;

    // teacher enhancement
    EnhanceMethod enhance_method = EnhanceMethod::Gamma;
    double enhance_gamma = 2.2;
    double enhance_alpha = 0.6;
    std::size_t enhance_iterations = 4;

    // AdamW
    double adamw_beta1 = 0.9;
    double adamw_beta2 = 0.999;
    double adamw_epsilon = 1e-8;
    double weight_decay = 0.01;

    // experiment harness
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not an unsigned integer");
    }
}

inline std::size_t parse_size_value(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64_value(key, value));
}

inline double parse_double_value(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
    }
}

inline ClipDims parse_dims_value(const std::string& key, const std::string& value) {
    ClipDims d;
    std::istringstream is(value);
    char x1, x2, x3;
    if (!(is >> d.c >> x1 >> d.t >> x2 >> d.h >> x3 >> d.w) || x1 != 'x' || x2 != 'x' ||
        x3 != 'x' || !is.eof())
        throw ConfigError("config key '" + key + "': '" + value + "' is not CxTxHxW");
    return d;
}

template <typename T>
std::vector<T> parse_list_value(const std::string& key, const std::string& value,
                                T (*one)(const std::string&, const std::string&)) {
    std::vector<T> out;
    std::istringstream is(value);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(one(key, trim(item)));
    if (out.empty()) throw ConfigError("config key '" + key + "' has an empty list value");
    return out;
}

} // namespace detail

/// Parses `key = value` lines ('#' starts a comment line; blank lines are
/// skipped). Unknown keys and duplicate keys are errors, so typos cannot
/// silently fall back to defaults.
inline FileConfig parse_config_text(const std::string& text) {
    FileConfig fc;
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"classes", [&](auto& k, auto& v) { fc.classes = detail::parse_size_value(k, v); }},
        {"per_class", [&](auto& k, auto& v) { fc.per_class = detail::parse_size_value(k, v); }},
        {"dims", [&](auto& k, auto& v) { fc.dims = detail::parse_dims_value(k, v); }},
        {"data_seed", [&](auto& k, auto& v) { fc.data_seed = detail::parse_u64_value(k, v); }},
        {"gamma_dark", [&](auto& k, auto& v) { fc.gamma_dark = detail::parse_double_value(k, v); }},
        {"scale", [&](auto& k, auto& v) { fc.scale = detail::parse_double_value(k, v); }},
        {"noise_sigma",
         [&](auto& k, auto& v) { fc.noise_sigma = detail::parse_double_value(k, v); }},
        {"noise_seed", [&](auto& k, auto& v) { fc.noise_seed = detail::parse_u64_value(k, v); }},
        {"data_dir", [&](auto&, auto& v) { fc.data_dir = v; }},
        {"train_fraction",
         [&](auto& k, auto& v) { fc.train_fraction = detail::parse_double_value(k, v); }},
        {"widths",
         [&](auto& k, auto& v) {
             fc.widths = detail::parse_list_value<std::size_t>(k, v, detail::parse_size_value);
         }},
        {"spatial_kernel",
         [&](auto& k, auto& v) { fc.spatial_kernel = detail::parse_size_value(k, v); }},
        {"temporal_kernel",
         [&](auto& k, auto& v) { fc.temporal_kernel = detail::parse_size_value(k, v); }},
        {"init_seed", [&](auto& k, auto& v) { fc.init_seed = detail::parse_u64_value(k, v); }},
        {"epochs", [&](auto& k, auto& v) { fc.epochs = detail::parse_size_value(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { fc.batch_size = detail::parse_size_value(k, v); }},
        {"learning_rate",
         [&](auto& k, auto& v) { fc.learning_rate = detail::parse_double_value(k, v); }},
        {"alpha", [&](auto& k, auto& v) { fc.alpha = detail::parse_double_value(k, v); }},
        {"beta", [&](auto& k, auto& v) { fc.beta = detail::parse_double_value(k, v); }},
        {"temperature",
         [&](auto& k, auto& v) { fc.temperature = detail::parse_double_value(k, v); }},
        {"shuffle_seed",
         [&](auto& k, auto& v) { fc.shuffle_seed = detail::parse_u64_value(k, v); }},
        {"enhance_method", [&](auto&, auto& v) { fc.enhance_method = parse_enhance_method(v); }},
        {"enhance_gamma",
         [&](auto& k, auto& v) { fc.enhance_gamma = detail::parse_double_value(k, v); }},
        {"enhance_alpha",
         [&](auto& k, auto& v) { fc.enhance_alpha = detail::parse_double_value(k, v); }},
        {"enhance_iterations",
         [&](auto& k, auto& v) { fc.enhance_iterations = detail::parse_size_value(k, v); }},
        {"adamw_beta1",
         [&](auto& k, auto& v) { fc.adamw_beta1 = detail::parse_double_value(k, v); }},
        {"adamw_beta2",
         [&](auto& k, auto& v) { fc.adamw_beta2 = detail::parse_double_value(k, v); }},
        {"adamw_epsilon",
         [&](auto& k, auto& v) { fc.adamw_epsilon = detail::parse_double_value(k, v); }},
        {"weight_decay",
         [&](auto& k, auto& v) { fc.weight_decay = detail::parse_double_value(k, v); }},
        {"seeds",
         [&](auto& k, auto& v) {
             fc.seeds = detail::parse_list_value<std::uint64_t>(k, v, detail::parse_u64_value);
         }},
    };

    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key = value: '" +
                              t + "'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError("duplicate config key '" + key + "'");
        it->second(key, value);
    }
    return fc;
}

inline FileConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

inline EnhanceParams enhance_params_from(const FileConfig& fc) {
    EnhanceParams p;
    p.method = fc.enhance_method;
    p.gamma = fc.enhance_gamma;
    p.alpha = fc.enhance_alpha;
    p.iterations = fc.enhance_iterations;
    return p;
}

inline DarkenParams darken_params_from(const FileConfig& fc) {
    return DarkenParams{fc.gamma_dark, fc.scale, fc.noise_sigma, fc.noise_seed};
}

/// TrainConfig for a dataset with the given class count and dims (the
/// dataset, not the config file, is authoritative for both).
inline TrainConfig train_config_for(const FileConfig& fc, std::size_t num_classes,
                                    const ClipDims& dims) {
    TrainConfig cfg;
    cfg.model.num_classes = num_classes;
    cfg.model.input = dims;
    cfg.model.widths = fc.widths;
    cfg.model.spatial_kernel = fc.spatial_kernel;
    cfg.model.temporal_kernel = fc.temporal_kernel;
    cfg.model.init_seed = fc.init_seed;
    cfg.epochs = fc.epochs;
    cfg.batch_size = fc.batch_size;
    cfg.learning_rate = fc.learning_rate;
    cfg.loss.alpha = fc.alpha;
    cfg.loss.beta = fc.beta;
    cfg.loss.temperature = fc.temperature;
    cfg.enhance = enhance_params_from(fc);
    cfg.shuffle_seed = fc.shuffle_seed;
    cfg.adamw.beta1 = fc.adamw_beta1;
    cfg.adamw.beta2 = fc.adamw_beta2;
    cfg.adamw.epsilon = fc.adamw_epsilon;
    cfg.adamw.weight_decay = fc.weight_decay;
    return cfg;
}

} // namespace dlkd
