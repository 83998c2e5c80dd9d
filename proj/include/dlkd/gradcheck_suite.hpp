#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dlkd/gradcheck.hpp"
#include "dlkd/graph.hpp"
#include "dlkd/losses.hpp"
#include "dlkd/model.hpp"
#include "dlkd/rng.hpp"

namespace dlkd {

struct GradCheckResult {
    std::string name;
    std::uint64_t seed = 0;
    bool ok = true;
    double worst_rel = 0.0;
    std::string detail;
};

namespace detail {

inline TensorT<double> rand_tensor(Rng& rng, Shape shape, double lo, double hi) {
    TensorT<double> t = TensorT<double>::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

/// Values bounded away from zero so relu's kink cannot sit inside the
/// finite-difference stencil.
inline TensorT<double> rand_tensor_off_zero(Rng& rng, Shape shape) {
    TensorT<double> t = TensorT<double>::zeros(std::move(shape));
    for (double& v : t.data) {
        const double m = rng.uniform(0.15, 1.0);
        v = rng.uniform() < 0.5 ? -m : m;
    }
    return t;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline GradCheckResult report(const std::string& name, std::uint64_t seed, const GradCompare& cmp,
                              const std::vector<double>& ad) {
    GradCheckResult r;
    r.name = name;
    r.seed = seed;
    r.ok = cmp.ok;
    r.worst_rel = cmp.worst_rel;
    if (!cmp.ok) {
        std::ostringstream os;
        os << "index " << cmp.worst_index << ": reverse-mode " << cmp.ad_value
           << " vs finite-diff " << cmp.fd_value << " (rel " << cmp.worst_rel << ", " << ad.size()
           << " coords)";
        r.detail = os.str();
    }
    return r;
}

} // namespace detail

/// Checks every differentiable operation, then a full 2-block classifier with
/// the combined student loss, against central finite differences in f64.
/// Appends one result per (op, input) pair.
inline void gradcheck_one_seed(std::uint64_t seed, std::vector<GradCheckResult>& out) {
    using detail::dot;
    using detail::rand_tensor;
    using detail::rand_tensor_off_zero;
    using detail::report;
    using G = GraphT<double>;
    constexpr double kEps = 1e-5;

    { // conv3d: gradients w.r.t. input, kernel and bias
        Rng rng(mix64(seed, 101));
        TensorT<double> x = rand_tensor(rng, {2, 3, 6, 6}, -1.0, 1.0);
        TensorT<double> k = rand_tensor(rng, {3, 2, 2, 3, 3}, -0.7, 0.7);
        TensorT<double> b = rand_tensor(rng, {3}, -0.5, 0.5);
        const Triple stride{1, 2, 2}, pad{1, 1, 1};
        const TensorT<double> w =
            rand_tensor(rng, conv3d_out_shape(x, k, stride, pad), -1.0, 1.0);

        G g;
        auto xn = g.parameter(x);
        auto kn = g.parameter(k);
        auto bn = g.parameter(b);
        auto loss = sum(g, mul(g, conv3d(g, xn, kn, bn, stride, pad), g.constant(w)));
        g.backward(loss);

        auto fd_x = finite_diff_grad(
            [&](const TensorT<double>& p) {
                return dot(conv3d_forward(p, k, b, stride, pad).data, w.data);
            },
            x, kEps);
        out.push_back(report("conv3d/input", seed,
                             compare_gradients(g.grad(xn), fd_x.data), g.grad(xn)));
        auto fd_k = finite_diff_grad(
            [&](const TensorT<double>& p) {
                return dot(conv3d_forward(x, p, b, stride, pad).data, w.data);
            },
            k, kEps);
        out.push_back(report("conv3d/kernel", seed,
                             compare_gradients(g.grad(kn), fd_k.data), g.grad(kn)));
        auto fd_b = finite_diff_grad(
            [&](const TensorT<double>& p) {
                return dot(conv3d_forward(x, k, p, stride, pad).data, w.data);
            },
            b, kEps);
        out.push_back(report("conv3d/bias", seed,
                             compare_gradients(g.grad(bn), fd_b.data), g.grad(bn)));
    }

    { // relu (inputs bounded away from the kink)
        Rng rng(mix64(seed, 102));
        TensorT<double> x = rand_tensor_off_zero(rng, {4, 5});
        const TensorT<double> w = rand_tensor(rng, {4, 5}, -1.0, 1.0);
        G g;
        auto xn = g.parameter(x);
        auto loss = sum(g, mul(g, relu(g, xn), g.constant(w)));
        g.backward(loss);
        auto fd = finite_diff_grad(
            [&](const TensorT<double>& p) { return dot(relu_forward(p).data, w.data); }, x, kEps);
        out.push_back(report("relu", seed, compare_gradients(g.grad(xn), fd.data), g.grad(xn)));
    }

    { // global average pool
        Rng rng(mix64(seed, 103));
        TensorT<double> x = rand_tensor(rng, {3, 2, 4, 4}, -1.0, 1.0);
        const TensorT<double> w = rand_tensor(rng, {3}, -1.0, 1.0);
        G g;
        auto xn = g.parameter(x);
        auto loss = sum(g, mul(g, avg_pool_global(g, xn), g.constant(w)));
        g.backward(loss);
        auto fd = finite_diff_grad(
            [&](const TensorT<double>& p) { return dot(avg_pool_global_forward(p).data, w.data); },
            x, kEps);
        out.push_back(
            report("avg_pool_global", seed, compare_gradients(g.grad(xn), fd.data), g.grad(xn)));
    }

    { // affine head: gradients w.r.t. input, weight and bias
        Rng rng(mix64(seed, 104));
        TensorT<double> x = rand_tensor(rng, {6}, -1.0, 1.0);
        TensorT<double> wgt = rand_tensor(rng, {4, 6}, -1.0, 1.0);
        TensorT<double> b = rand_tensor(rng, {4}, -1.0, 1.0);
        const TensorT<double> w = rand_tensor(rng, {4}, -1.0, 1.0);
        G g;
        auto xn = g.parameter(x);
        auto wn = g.parameter(wgt);
        auto bn = g.parameter(b);
        auto loss = sum(g, mul(g, affine(g, xn, wn, bn), g.constant(w)));
        g.backward(loss);
        auto fd_x = finite_diff_grad(
            [&](const TensorT<double>& p) { return dot(affine_forward(p, wgt, b).data, w.data); },
            x, kEps);
        out.push_back(
            report("affine/input", seed, compare_gradients(g.grad(xn), fd_x.data), g.grad(xn)));
        auto fd_w = finite_diff_grad(
            [&](const TensorT<double>& p) { return dot(affine_forward(x, p, b).data, w.data); },
            wgt, kEps);
        out.push_back(
            report("affine/weight", seed, compare_gradients(g.grad(wn), fd_w.data), g.grad(wn)));
        auto fd_b = finite_diff_grad(
            [&](const TensorT<double>& p) { return dot(affine_forward(x, wgt, p).data, w.data); },
            b, kEps);
        out.push_back(
            report("affine/bias", seed, compare_gradients(g.grad(bn), fd_b.data), g.grad(bn)));
    }

    { // softmax and log_softmax with non-unit temperatures
        Rng rng(mix64(seed, 105));
        TensorT<double> x = rand_tensor(rng, {7}, -2.0, 2.0);
        const TensorT<double> w = rand_tensor(rng, {7}, -1.0, 1.0);
        {
            G g;
            auto xn = g.parameter(x);
            auto loss = sum(g, mul(g, softmax(g, xn, 2.0), g.constant(w)));
            g.backward(loss);
            auto fd = finite_diff_grad(
                [&](const TensorT<double>& p) { return dot(softmax_forward(p, 2.0).data, w.data); },
                x, kEps);
            out.push_back(
                report("softmax", seed, compare_gradients(g.grad(xn), fd.data), g.grad(xn)));
        }
        {
            G g;
            auto xn = g.parameter(x);
            auto loss = sum(g, mul(g, log_softmax(g, xn, 3.0), g.constant(w)));
            g.backward(loss);
            auto fd = finite_diff_grad(
                [&](const TensorT<double>& p) {
                    return dot(log_softmax_forward(p, 3.0).data, w.data);
                },
                x, kEps);
            out.push_back(
                report("log_softmax", seed, compare_gradients(g.grad(xn), fd.data), g.grad(xn)));
        }
    }

    { // cross-entropy and KL soft targets on logit vectors
        Rng rng(mix64(seed, 106));
        TensorT<double> student = rand_tensor(rng, {6}, -2.0, 2.0);
        const TensorT<double> teacher = rand_tensor(rng, {6}, -2.0, 2.0);
        const std::size_t label = rng.uniform_index(6);
        {
            G g;
            auto xn = g.parameter(student);
            auto loss = cross_entropy(g, xn, label);
            g.backward(loss);
            auto fd = finite_diff_grad(
                [&](const TensorT<double>& p) { return cross_entropy_value(p, label); }, student,
                kEps);
            out.push_back(
                report("cross_entropy", seed, compare_gradients(g.grad(xn), fd.data), g.grad(xn)));
        }
        {
            G g;
            auto xn = g.parameter(student);
            auto loss = kl_soft_targets(g, teacher, xn, 2.0);
            g.backward(loss);
            auto fd = finite_diff_grad(
                [&](const TensorT<double>& p) { return kl_soft_targets_value(teacher, p, 2.0); },
                student, kEps);
            out.push_back(report("kl_soft_targets", seed, compare_gradients(g.grad(xn), fd.data),
                                 g.grad(xn)));
        }
    }

    { // elementwise plumbing: mul, add_weighted, scale, sum, mean_of
        Rng rng(mix64(seed, 107));
        TensorT<double> a = rand_tensor(rng, {3, 4}, -1.0, 1.0);
        TensorT<double> b = rand_tensor(rng, {3, 4}, -1.0, 1.0);
        auto value_of = [&](const TensorT<double>& av, const TensorT<double>& bv) {
            double s_mul = 0.0, s_aw = 0.0, s_sc = 0.0;
            for (std::size_t i = 0; i < av.numel(); ++i) {
                s_mul += av.data[i] * bv.data[i];
                s_aw += 1.7 * av.data[i] - 0.6 * bv.data[i];
                s_sc += 2.2 * av.data[i];
            }
            return (s_mul + s_aw + s_sc) / 3.0;
        };
        G g;
        auto an = g.parameter(a);
        auto bn = g.parameter(b);
        auto loss = mean_of(g, {sum(g, mul(g, an, bn)),
                                sum(g, add_weighted(g, an, 1.7, bn, -0.6)),
                                sum(g, scale(g, an, 2.2))});
        g.backward(loss);
        auto fd_a = finite_diff_grad(
            [&](const TensorT<double>& p) { return value_of(p, b); }, a, kEps);
        out.push_back(
            report("elementwise/a", seed, compare_gradients(g.grad(an), fd_a.data), g.grad(an)));
        auto fd_b = finite_diff_grad(
            [&](const TensorT<double>& p) { return value_of(a, p); }, b, kEps);
        out.push_back(
            report("elementwise/b", seed, compare_gradients(g.grad(bn), fd_b.data), g.grad(bn)));
    }

    { // full 2-block classifier + combined student loss, per parameter
        Rng rng(mix64(seed, 108));
        ModelConfig cfg;
        cfg.num_classes = 3;
        cfg.input = ClipDims{2, 4, 8, 8};
        cfg.widths = {2, 3};
        cfg.spatial_kernel = 3;
        cfg.temporal_kernel = 3;

        // Central differences are only valid where the network is
        // differentiable. If any ReLU preactivation lies within the FD
        // stencil of zero, the two-sided estimate straddles the kink and
        // reports a spurious mismatch, so resample the checkpoint until all
        // preactivations clear a safety margin (perturbing one parameter by
        // kEps moves a preactivation by at most a few multiples of kEps).
        const double kink_margin = 20.0 * kEps;
        ModelT<double> model;
        TensorT<double> clip;
        for (int attempt = 0; attempt < 32; ++attempt) {
            cfg.init_seed = mix64(seed, 109 + std::uint64_t(attempt));
            model = build_classifier_t<double>(cfg);
            clip = rand_tensor(rng, {2, 4, 8, 8}, 0.0, 1.0);
            GraphT<double> probe;
            (void)model_forward(probe, model, clip);
            double min_abs = std::numeric_limits<double>::infinity();
            for (GraphT<double>::NodeId id = 0; id < probe.size(); ++id) {
                if (probe.tag(id) != "relu") continue;
                for (double v : probe.value(probe.inputs(id)[0]).data)
                    min_abs = std::min(min_abs, std::abs(v));
            }
            if (min_abs > kink_margin) break;
        }
        const TensorT<double> teacher = rand_tensor(rng, {3}, -2.0, 2.0);
        const std::size_t label = rng.uniform_index(3);
        LossWeights weights;
        weights.alpha = 0.7;
        weights.beta = 0.5;
        weights.temperature = 2.0;

        GraphT<double> g;
        auto logits = model_forward(g, model, clip);
        auto l_ar = cross_entropy(g, logits, label);
        auto l_kd = kl_soft_targets(g, teacher, logits, weights.temperature);
        auto total = student_total_loss(g, l_ar, l_kd, weights);
        g.backward(total);

        auto loss_value = [&](const ModelT<double>& m) {
            TensorT<double> lg = forward_logits(m, clip);
            return weights.alpha * cross_entropy_value(lg, label) +
                   weights.beta * kl_soft_targets_value(teacher, lg, weights.temperature);
        };
        for (auto& named : model.params) {
            auto fd = finite_diff_grad(
                [&](const TensorT<double>& p) {
                    ModelT<double> probe = model;
                    probe.param(named.name) = p;
                    return loss_value(probe);
                },
                named.tensor, kEps);
            out.push_back(report("classifier/" + named.name, seed,
                                 compare_gradients(named.tensor.grad, fd.data),
                                 named.tensor.grad));
        }
    }
}

inline std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t base_seed,
                                                        std::size_t num_seeds = 10) {
    std::vector<GradCheckResult> out;
    for (std::size_t s = 0; s < num_seeds; ++s) gradcheck_one_seed(mix64(base_seed, s), out);
    return out;
}

inline bool gradcheck_all_ok(const std::vector<GradCheckResult>& results) {
    for (const auto& r : results)
        if (!r.ok) return false;
    return !results.empty();
}

} // namespace dlkd
