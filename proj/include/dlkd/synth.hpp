#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "dlkd/errors.hpp"
#include "dlkd/rng.hpp"
#include "dlkd/video.hpp"

namespace dlkd {

/// The implemented motion classes, in label order. generate_dataset uses the
/// first K of these.
inline const std::vector<std::string>& motion_class_names() {
    static const std::vector<std::string> names = {
        "translate_left", "translate_right", "translate_up", "translate_down",
        "rotate_cw",      "rotate_ccw",      "expand",       "contract"};
    return names;
}

/// Dark-capture degradation: per-value gamma compression, brightness scale,
/// additive Gaussian noise, then clamp back to [0,1].
struct DarkenParams {
    double gamma_dark = 2.2;
    double scale = 0.3;
    double noise_sigma = 0.02;
    std::uint64_t noise_seed = 0;

    void validate() const {
        if (!(gamma_dark >= 1.0)) throw ParamError("gamma_dark must be >= 1");
        if (!(scale > 0.0 && scale <= 1.0)) throw ParamError("brightness scale must be in (0, 1]");
        if (!(noise_sigma >= 0.0)) throw ParamError("noise sigma must be >= 0");
    }
};

namespace detail {

/// Renders one clip: a bright Gaussian blob following its class's motion
/// pattern over a static textured background. All randomness comes from the
/// provided generator, so a clip is a pure function of (seed, clip index).
inline VideoClip render_motion_clip(std::size_t class_idx, const ClipDims& dims, Rng& rng,
                                    int label, std::string id) {
    VideoClip clip;
    clip.dims = dims;
    clip.data.assign(dims.numel(), 0.0f);
    clip.label = label;
    clip.id = std::move(id);

    // Static background texture, shared by all frames and channels. The
    // texture band is kept narrow so the moving blob, not the per-clip
    // texture draw, dominates the class-conditional statistics.
    std::vector<float> bg(dims.h * dims.w);
    for (float& v : bg) v = static_cast<float>(rng.uniform(0.40, 0.50));

    const double amp = rng.uniform(0.42, 0.52);

    // Per-frame blob center (fractions of W/H) and radius (fraction of the
    // smaller spatial extent), as a function of u = t/(T-1) in [0,1].
    double cx0 = 0.5, cy0 = 0.5, dx = 0.0, dy = 0.0;
    double orbit_r = 0.0, theta0 = 0.0, sweep = 0.0, spin = 0.0;
    double sigma0 = 0.0, growth = 0.0;
    enum { kTranslate, kRotate, kScale } kind = kTranslate;

    switch (class_idx) {
        // The three motion groups are deliberately kept far apart in their
        // gross statistics (trajectory shape, speed, size profile) so even a
        // small classifier separates them; the mirror pair within each group
        // differs only in motion direction.
        case 0: { // translate_left
            const double d = rng.uniform(0.52, 0.62);
            sigma0 = rng.uniform(0.085, 0.110);
            cx0 = rng.uniform(0.14 + d, 0.86);
            cy0 = rng.uniform(0.35, 0.65);
            dx = -d;
            break;
        }
        case 1: { // translate_right
            const double d = rng.uniform(0.52, 0.62);
            sigma0 = rng.uniform(0.085, 0.110);
            cx0 = rng.uniform(0.14, 0.86 - d);
            cy0 = rng.uniform(0.35, 0.65);
            dx = d;
            break;
        }
        case 2: { // translate_up (toward row 0)
            const double d = rng.uniform(0.52, 0.62);
            sigma0 = rng.uniform(0.085, 0.110);
            cy0 = rng.uniform(0.14 + d, 0.86);
            cx0 = rng.uniform(0.35, 0.65);
            dy = -d;
            break;
        }
        case 3: { // translate_down
            const double d = rng.uniform(0.52, 0.62);
            sigma0 = rng.uniform(0.085, 0.110);
            cy0 = rng.uniform(0.14, 0.86 - d);
            cx0 = rng.uniform(0.35, 0.65);
            dy = d;
            break;
        }
        case 4:   // rotate_cw (screen-clockwise: y grows downward)
        case 5: { // rotate_ccw
            kind = kRotate;
            sigma0 = rng.uniform(0.055, 0.075);
            orbit_r = rng.uniform(0.26, 0.34);
            theta0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
            sweep = rng.uniform(4.6, 5.8);
            spin = class_idx == 4 ? 1.0 : -1.0;
            break;
        }
        case 6:   // expand
        case 7: { // contract
            kind = kScale;
            sigma0 = rng.uniform(0.040, 0.052);
            growth = rng.uniform(2.6, 3.4);
            cx0 = rng.uniform(0.42, 0.58);
            cy0 = rng.uniform(0.42, 0.58);
            break;
        }
        default: throw ConfigError("motion class index out of range");
    }

    const double min_extent = static_cast<double>(std::min(dims.h, dims.w));
    for (std::size_t t = 0; t < dims.t; ++t) {
        const double u = dims.t > 1 ? static_cast<double>(t) / static_cast<double>(dims.t - 1) : 0.0;
        double cx = cx0, cy = cy0, sigma_frac = sigma0;
        switch (kind) {
            case kTranslate:
                cx = cx0 + dx * u;
                cy = cy0 + dy * u;
                break;
            case kRotate: {
                const double theta = theta0 + spin * sweep * u;
                cx = 0.5 + orbit_r * std::cos(theta);
                cy = 0.5 + orbit_r * std::sin(theta);
                break;
            }
            case kScale:
                sigma_frac = class_idx == 6 ? sigma0 * (1.0 + growth * u)
                                            : sigma0 * (1.0 + growth * (1.0 - u));
                break;
        }
        const double cpx = cx * static_cast<double>(dims.w);
        const double cpy = cy * static_cast<double>(dims.h);
        const double sigma_px = sigma_frac * min_extent;
        const double inv_two_sq = 1.0 / (2.0 * sigma_px * sigma_px);
        for (std::size_t c = 0; c < dims.c; ++c) {
            const double amp_c = amp * std::pow(0.92, static_cast<double>(c % 4));
            for (std::size_t y = 0; y < dims.h; ++y) {
                const double ry = (static_cast<double>(y) + 0.5) - cpy;
                for (std::size_t x = 0; x < dims.w; ++x) {
                    const double rx = (static_cast<double>(x) + 0.5) - cpx;
                    const double blob = amp_c * std::exp(-(rx * rx + ry * ry) * inv_two_sq);
                    double v = static_cast<double>(bg[y * dims.w + x]) + blob;
                    clip.at(c, t, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }
    return clip;
}

} // namespace detail

/// Generates K classes x clips_per_class bright clips. Each clip's randomness
/// derives only from (seed, global clip index), so generation order cannot
/// change the result.
inline Dataset generate_dataset(std::size_t num_classes, std::size_t clips_per_class,
                                const ClipDims& dims, std::uint64_t seed) {
    const auto& names = motion_class_names();
    if (num_classes < 2 || num_classes > names.size())
        throw ConfigError("num_classes must be between 2 and " + std::to_string(names.size()) +
                          ", got " + std::to_string(num_classes));
    if (clips_per_class == 0) throw ConfigError("clips_per_class must be >= 1");
    if (dims.c < 1 || dims.t < 4 || dims.h < 8 || dims.w < 8)
        throw ConfigError("dims must be at least 1x4x8x8, got " + dims.str());

    Dataset ds;
    ds.class_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(num_classes));
    ds.provenance.num_classes = num_classes;
    ds.provenance.per_class = clips_per_class;
    ds.provenance.dims = dims;
    ds.provenance.seed = seed;

    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        for (std::size_t j = 0; j < clips_per_class; ++j) {
            const std::size_t idx = cls * clips_per_class + j;
            Rng rng(mix64(seed, idx));
            std::string id = names[cls] + "_";
            if (j < 100) id += '0';
            if (j < 10) id += '0';
            id += std::to_string(j);
            ds.clips.push_back(detail::render_motion_clip(cls, dims, rng, static_cast<int>(cls),
                                                          std::move(id)));
        }
    }
    return ds;
}

/// x -> clamp_[0,1](scale * x^gamma_dark + noise). Noise is seeded from the
/// clip id, so darkening clips in any order or in isolation is reproducible.
inline VideoClip darken(const VideoClip& clip, const DarkenParams& params) {
    params.validate();
    VideoClip out = clip;
    Rng noise(params.noise_seed ^ fnv1a64(clip.id));
    for (float& v : out.data) {
        double y = params.scale * std::pow(static_cast<double>(v), params.gamma_dark);
        if (params.noise_sigma > 0.0) y += params.noise_sigma * noise.gaussian();
        v = static_cast<float>(std::clamp(y, 0.0, 1.0));
    }
    return out;
}

inline Dataset darken_dataset(const Dataset& ds, const DarkenParams& params) {
    params.validate();
    Dataset out;
    out.class_names = ds.class_names;
    out.provenance = ds.provenance;
    out.provenance.darkened = true;
    out.provenance.gamma_dark = params.gamma_dark;
    out.provenance.scale = params.scale;
    out.provenance.noise_sigma = params.noise_sigma;
    out.provenance.noise_seed = params.noise_seed;
    out.clips.reserve(ds.clips.size());
    for (const VideoClip& clip : ds.clips) out.clips.push_back(darken(clip, params));
    return out;
}

/// Stratified split: per class, a seeded shuffle then round(fraction * count)
/// clips to train (clamped so both sides keep at least one clip per class).
/// Output order follows the input dataset order.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                                 std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ParamError("train_fraction must be in (0, 1)");

    std::size_t num_labels = 0;
    for (const VideoClip& c : ds.clips)
        num_labels = std::max(num_labels, static_cast<std::size_t>(c.label) + 1);
    std::vector<std::vector<std::size_t>> by_label(num_labels);
    for (std::size_t i = 0; i < ds.clips.size(); ++i)
        by_label[static_cast<std::size_t>(ds.clips[i].label)].push_back(i);

    Rng rng(seed);
    std::vector<bool> in_train(ds.clips.size(), false);
    for (std::size_t label = 0; label < num_labels; ++label) {
        auto& idx = by_label[label];
        if (idx.size() < 2)
            throw ConfigError("class " + std::to_string(label) + " has " +
                              std::to_string(idx.size()) + " clip(s); need >= 2 to split");
        rng.shuffle(idx);
        std::size_t n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t j = 0; j < n_train; ++j) in_train[idx[j]] = true;
    }

    Dataset train, test;
    train.class_names = test.class_names = ds.class_names;
    train.provenance = test.provenance = ds.provenance;
    for (std::size_t i = 0; i < ds.clips.size(); ++i)
        (in_train[i] ? train : test).clips.push_back(ds.clips[i]);
    return {std::move(train), std::move(test)};
}

/// Pinned benchmark recipe shared by all acceptance runs: every constant
/// here is part of the artifact's contract.
namespace bench_v1 {
inline constexpr std::size_t kNumClasses = 8;
inline constexpr std::size_t kClipsPerClass = 40;
inline constexpr ClipDims kDims{3, 8, 32, 32};
inline constexpr double kGammaDark = 2.2;
inline constexpr double kScale = 0.3;
inline constexpr double kNoiseSigma = 0.02;
inline constexpr double kTrainFraction = 0.8;

inline DarkenParams darken_params(std::uint64_t noise_seed) {
    return DarkenParams{kGammaDark, kScale, kNoiseSigma, noise_seed};
}
} // namespace bench_v1

} // namespace dlkd
