#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>

#include "dlkd/errors.hpp"
#include "dlkd/video.hpp"

namespace dlkd {

/// Fixed-parameter light enhancement applied to dark clips before the teacher
/// sees them. Two methods are available: gamma-intensity correction and an
/// iterated quadratic curve adjustment. Neither has trainable state.
enum class EnhanceMethod { Gamma, Curve };

inline std::string enhance_method_name(EnhanceMethod m) {
    return m == EnhanceMethod::Gamma ? "gamma" : "curve";
}

inline EnhanceMethod parse_enhance_method(const std::string& s) {
    if (s == "gamma") return EnhanceMethod::Gamma;
    if (s == "curve") return EnhanceMethod::Curve;
    throw ConfigError("unknown enhancement method '" + s + "' (expected gamma or curve)");
}

struct EnhanceParams {
    EnhanceMethod method = EnhanceMethod::Gamma;
    double gamma = 2.2;       // gamma-intensity correction exponent source
    double alpha = 0.6;       // curve strength in [-1, 1]
    std::size_t iterations = 4;

    void validate() const {
        if (!(gamma > 0.0)) throw ParamError("enhancement gamma must be > 0");
        if (alpha < -1.0 || alpha > 1.0)
            throw ParamError("curve alpha must lie in [-1, 1]");
        if (iterations == 0) throw ParamError("curve iterations must be >= 1");
    }
};

/// Number of public enhancement calls made since process start (or the last
/// reset). Lets tests pin down exactly which training arms touch the
/// enhancer and how often.
inline std::atomic<std::uint64_t>& enhance_call_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

inline void reset_enhance_call_count() { enhance_call_count().store(0); }

namespace detail {

inline void check_unit_range(const VideoClip& clip, const char* what) {
    for (std::size_t i = 0; i < clip.data.size(); ++i) {
        float v = clip.data[i];
        if (!(v >= 0.0f && v <= 1.0f))
            throw InputError(std::string(what) + " input value " + std::to_string(v) +
                             " at index " + std::to_string(i) + " of clip '" + clip.id +
                             "' is outside [0, 1]");
    }
}

inline VideoClip gic_enhance_impl(const VideoClip& clip, const EnhanceParams& p) {
    check_unit_range(clip, "gamma enhancement");
    VideoClip out = clip;
    double inv_gamma = 1.0 / p.gamma;
    for (float& v : out.data)
        v = static_cast<float>(std::pow(static_cast<double>(v), inv_gamma));
    return out;
}

inline VideoClip dce_curve_enhance_impl(const VideoClip& clip, const EnhanceParams& p) {
    check_unit_range(clip, "curve enhancement");
    VideoClip out = clip;
    for (float& v : out.data) {
        double x = v;
        for (std::size_t it = 0; it < p.iterations; ++it) x = x + p.alpha * x * (1.0 - x);
        v = static_cast<float>(x);
    }
    return out;
}

} // namespace detail

/// Gamma-intensity correction: x -> x^(1/gamma) per value. Counts as one
/// enhancement call.
inline VideoClip gic_enhance(const VideoClip& clip, const EnhanceParams& params) {
    params.validate();
    enhance_call_count().fetch_add(1);
    return detail::gic_enhance_impl(clip, params);
}

/// Iterated curve adjustment: x -> x + alpha*x*(1-x), applied `iterations`
/// times per value. Counts as one enhancement call.
inline VideoClip dce_curve_enhance(const VideoClip& clip, const EnhanceParams& params) {
    params.validate();
    enhance_call_count().fetch_add(1);
    return detail::dce_curve_enhance_impl(clip, params);
}

/// Dispatch on the configured method. Counts as one enhancement call (the
/// internal implementation is invoked directly, so dispatch does not double
/// count).
inline VideoClip enhance(const VideoClip& clip, const EnhanceParams& params) {
    params.validate();
    enhance_call_count().fetch_add(1);
    switch (params.method) {
        case EnhanceMethod::Gamma: return detail::gic_enhance_impl(clip, params);
        case EnhanceMethod::Curve: return detail::dce_curve_enhance_impl(clip, params);
    }
    throw ParamError("unhandled enhancement method");
}

} // namespace dlkd
