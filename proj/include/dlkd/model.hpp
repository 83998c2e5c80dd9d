#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dlkd/graph.hpp"
#include "dlkd/io_util.hpp"
#include "dlkd/rng.hpp"
#include "dlkd/tensor.hpp"
#include "dlkd/video.hpp"

namespace dlkd {

/// Architecture description for the shared teacher/student classifier: a
/// stack of (2+1)D factorized convolution blocks (each halves H and W),
/// global average pooling over (T,H,W), and an affine class head.
struct ModelConfig {
    std::size_t num_classes = 8;
    ClipDims input{3, 8, 32, 32};
    std::vector<std::size_t> widths{8, 16};
    std::size_t spatial_kernel = 5;  // kh = kw
    std::size_t temporal_kernel = 5; // kt
    std::uint64_t init_seed = 0;

    bool operator==(const ModelConfig&) const = default;

    void validate() const {
        if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
        if (input.c == 0 || input.t == 0 || input.h == 0 || input.w == 0)
            throw ConfigError("model input dims must all be >= 1, got " + input.str());
        if (widths.empty()) throw ConfigError("model needs at least one block width");
        for (std::size_t w : widths)
            if (w == 0) throw ConfigError("block widths must all be >= 1");
        if (spatial_kernel % 2 == 0 || temporal_kernel % 2 == 0)
            throw ConfigError("kernel sizes must be odd");
        if (spatial_kernel > input.h || spatial_kernel > input.w)
            throw ConfigError("spatial kernel " + std::to_string(spatial_kernel) +
                              " exceeds input extent " + std::to_string(input.h) + "x" +
                              std::to_string(input.w));
        if (temporal_kernel > input.t)
            throw ConfigError("temporal kernel " + std::to_string(temporal_kernel) +
                              " exceeds input extent " + std::to_string(input.t));
    }
};

/// Name, shape and fan-in of one model parameter. Biases share their layer's
/// fan-in, so every parameter gets the same fan-in-scaled random init (an
/// exactly-zero bias would park post-relu pre-activations right on the kink).
struct ParamSpec {
    std::string name;
    Shape shape;
    std::size_t fan_in = 0;
};

inline std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> specs;
    const std::size_t kh = cfg.spatial_kernel, kt = cfg.temporal_kernel;
    std::size_t c_in = cfg.input.c;
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
        const std::size_t c_out = cfg.widths[i];
        const std::string prefix = "block" + std::to_string(i) + ".";
        specs.push_back({prefix + "spatial_kernel", {c_out, c_in, 1, kh, kh}, c_in * kh * kh});
        specs.push_back({prefix + "spatial_bias", {c_out}, c_in * kh * kh});
        specs.push_back({prefix + "temporal_kernel", {c_out, c_out, kt, 1, 1}, c_out * kt});
        specs.push_back({prefix + "temporal_bias", {c_out}, c_out * kt});
        c_in = c_out;
    }
    specs.push_back({"head.weight", {cfg.num_classes, c_in}, c_in});
    specs.push_back({"head.bias", {cfg.num_classes}, c_in});
    return specs;
}

template <typename S>
struct NamedParamT {
    std::string name;
    TensorT<S> tensor;
};

template <typename S>
struct ModelT {
    ModelConfig config;
    std::vector<NamedParamT<S>> params; // ordered per param_specs

    TensorT<S>& param(const std::string& name) {
        for (auto& p : params)
            if (p.name == name) return p.tensor;
        throw ParamError("model has no parameter named '" + name + "'");
    }
    const TensorT<S>& param(const std::string& name) const {
        return const_cast<ModelT*>(this)->param(name);
    }

    /// Total number of scalar parameter values.
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.tensor.numel();
        return n;
    }

    bool all_finite() const {
        for (const auto& p : params)
            if (!p.tensor.all_finite()) return false;
        return true;
    }

    template <typename T>
    ModelT<T> cast() const {
        ModelT<T> out;
        out.config = config;
        out.params.reserve(params.size());
        for (const auto& p : params)
            out.params.push_back({p.name, p.tensor.template cast<T>()});
        return out;
    }
};

using Model = ModelT<float>;
using Model64 = ModelT<double>;

/// Builds a model with every parameter drawn uniformly from
/// +-sqrt(3/fan_in) by a generator seeded from the config. Identical configs
/// produce bitwise-identical parameter buffers.
template <typename S>
ModelT<S> build_classifier_t(const ModelConfig& cfg) {
    ModelT<S> model;
    model.config = cfg;
    Rng rng(cfg.init_seed);
    for (const ParamSpec& spec : param_specs(cfg)) {
        TensorT<S> t = TensorT<S>::zeros(spec.shape);
        t.requires_grad = true;
        const double bound = std::sqrt(3.0 / static_cast<double>(spec.fan_in));
        for (S& v : t.data) v = static_cast<S>(rng.uniform(-bound, bound));
        model.params.push_back({spec.name, std::move(t)});
    }
    return model;
}

inline Model build_classifier(const ModelConfig& cfg) { return build_classifier_t<float>(cfg); }

namespace detail {

inline void check_clip_shape(const ModelConfig& cfg, const Shape& got) {
    Shape want{cfg.input.c, cfg.input.t, cfg.input.h, cfg.input.w};
    if (got != want)
        throw ShapeError("clip shape " + shape_str(got) + " does not match model input " +
                         shape_str(want));
}

} // namespace detail

/// Differentiable forward pass: appends the whole block stack + pool + head
/// to the graph and returns the logits node ([K]). Parameter leaves are
/// registered with the graph so backward() fills their grad buffers.
template <typename S>
typename GraphT<S>::NodeId model_forward(GraphT<S>& g, ModelT<S>& model, const TensorT<S>& clip) {
    detail::check_clip_shape(model.config, clip.shape);
    if (!clip.all_finite()) throw InputError("clip contains non-finite values");
    const std::size_t sp = (model.config.spatial_kernel - 1) / 2;
    const std::size_t tp = (model.config.temporal_kernel - 1) / 2;
    auto x = g.constant(clip);
    for (std::size_t i = 0; i < model.config.widths.size(); ++i) {
        const std::string prefix = "block" + std::to_string(i) + ".";
        auto ks = g.parameter(model.param(prefix + "spatial_kernel"));
        auto bs = g.parameter(model.param(prefix + "spatial_bias"));
        auto kt = g.parameter(model.param(prefix + "temporal_kernel"));
        auto bt = g.parameter(model.param(prefix + "temporal_bias"));
        x = relu(g, conv3d(g, x, ks, bs, Triple{1, 2, 2}, Triple{0, sp, sp}));
        x = relu(g, conv3d(g, x, kt, bt, Triple{1, 1, 1}, Triple{tp, 0, 0}));
    }
    auto pooled = avg_pool_global(g, x);
    auto w = g.parameter(model.param("head.weight"));
    auto b = g.parameter(model.param("head.bias"));
    return affine(g, pooled, w, b);
}

/// Inference-only forward pass with no tape. Runs the same kernels in the
/// same order as model_forward, so the logits are bitwise identical.
template <typename S>
TensorT<S> forward_logits(const ModelT<S>& model, const TensorT<S>& clip) {
    detail::check_clip_shape(model.config, clip.shape);
    if (!clip.all_finite()) throw InputError("clip contains non-finite values");
    const std::size_t sp = (model.config.spatial_kernel - 1) / 2;
    const std::size_t tp = (model.config.temporal_kernel - 1) / 2;
    TensorT<S> x = clip;
    for (std::size_t i = 0; i < model.config.widths.size(); ++i) {
        const std::string prefix = "block" + std::to_string(i) + ".";
        x = relu_forward(conv3d_forward(x, model.param(prefix + "spatial_kernel"),
                                        model.param(prefix + "spatial_bias"), Triple{1, 2, 2},
                                        Triple{0, sp, sp}));
        x = relu_forward(conv3d_forward(x, model.param(prefix + "temporal_kernel"),
                                        model.param(prefix + "temporal_bias"), Triple{1, 1, 1},
                                        Triple{tp, 0, 0}));
    }
    return affine_forward(avg_pool_global_forward(x), model.param("head.weight"),
                          model.param("head.bias"));
}

template <typename S>
TensorT<S> forward_logits(const ModelT<S>& model, const VideoClip& clip) {
    return forward_logits(model, clip_to_tensor<S>(clip));
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic "DLKD", version u16, ModelConfig, then each named
// parameter as name (u32 length + bytes), shape (u32 rank + u32 dims), and
// little-endian f32 values. Round-trips are bitwise exact.
// ---------------------------------------------------------------------------

inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

inline void append_model_config(ByteWriter& w, const ModelConfig& cfg) {
    w.u32(static_cast<std::uint32_t>(cfg.num_classes));
    w.u32(static_cast<std::uint32_t>(cfg.input.c));
    w.u32(static_cast<std::uint32_t>(cfg.input.t));
    w.u32(static_cast<std::uint32_t>(cfg.input.h));
    w.u32(static_cast<std::uint32_t>(cfg.input.w));
    w.u32(static_cast<std::uint32_t>(cfg.widths.size()));
    for (std::size_t v : cfg.widths) w.u32(static_cast<std::uint32_t>(v));
    w.u32(static_cast<std::uint32_t>(cfg.spatial_kernel));
    w.u32(static_cast<std::uint32_t>(cfg.temporal_kernel));
    w.u64(cfg.init_seed);
}

inline ModelConfig read_model_config(ByteReader& r) {
    ModelConfig cfg;
    cfg.num_classes = r.u32();
    cfg.input.c = r.u32();
    cfg.input.t = r.u32();
    cfg.input.h = r.u32();
    cfg.input.w = r.u32();
    cfg.widths.assign(r.u32(), 0);
    for (std::size_t& v : cfg.widths) v = r.u32();
    cfg.spatial_kernel = r.u32();
    cfg.temporal_kernel = r.u32();
    cfg.init_seed = r.u64();
    return cfg;
}

inline std::vector<std::uint8_t> checkpoint_bytes(const Model& model) {
    ByteWriter w;
    w.str("DLKD");
    w.u16(kCheckpointFormatVersion);
    append_model_config(w, model.config);
    w.u32(static_cast<std::uint32_t>(model.params.size()));
    for (const auto& p : model.params) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.str(p.name);
        w.u32(static_cast<std::uint32_t>(p.tensor.shape.size()));
        for (std::size_t d : p.tensor.shape) w.u32(static_cast<std::uint32_t>(d));
        for (float v : p.tensor.data) w.f32(v);
    }
    return w.buffer();
}

/// Content hash of the serialized checkpoint; pairs a cached logit store with
/// the exact teacher weights that produced it.
inline std::uint64_t checkpoint_hash(const Model& model) {
    auto bytes = checkpoint_bytes(model);
    return fnv1a64(bytes.data(), bytes.size());
}

inline void save_model(const Model& model, const std::string& path) {
    ByteWriter w;
    auto bytes = checkpoint_bytes(model);
    w.bytes(bytes.data(), bytes.size());
    w.write_file(path);
}

inline Model load_model(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("DLKD");
    std::size_t ver_at = r.offset();
    std::uint16_t version = r.u16();
    if (version != kCheckpointFormatVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version), ver_at);
    Model model;
    model.config = read_model_config(r);
    model.config.validate();
    const auto specs = param_specs(model.config);
    std::size_t count_at = r.offset();
    std::uint32_t count = r.u32();
    if (count != specs.size())
        throw FormatError("checkpoint has " + std::to_string(count) + " parameters, expected " +
                          std::to_string(specs.size()),
                          count_at);
    for (const ParamSpec& spec : specs) {
        std::size_t at = r.offset();
        std::string name = r.str(r.u32());
        if (name != spec.name)
            throw FormatError("checkpoint parameter '" + name + "' where '" + spec.name +
                              "' was expected", at);
        Shape shape(r.u32());
        for (std::size_t& d : shape) d = r.u32();
        if (shape != spec.shape)
            throw FormatError("checkpoint parameter '" + name + "' has shape " + shape_str(shape) +
                              ", expected " + shape_str(spec.shape), at);
        TensorT<float> t = TensorT<float>::zeros(shape);
        t.requires_grad = true;
        for (float& v : t.data) v = r.f32();
        model.params.push_back({spec.name, std::move(t)});
    }
    r.expect_end();
    if (!model.all_finite()) throw ConsistencyError("checkpoint contains non-finite parameters");
    return model;
}

} // namespace dlkd
