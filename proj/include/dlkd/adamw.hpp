#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dlkd/tensor.hpp"

namespace dlkd {

/// AdamW hyperparameters (standard published defaults; the training setup
/// only fixes the optimizer choice and learning rate).
struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;

    void validate() const {
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ParamError("adamw beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ParamError("adamw beta2 must be in [0, 1)");
        if (!(epsilon > 0.0)) throw ParamError("adamw epsilon must be > 0");
        if (!(weight_decay >= 0.0)) throw ParamError("adamw weight decay must be >= 0");
    }
};

/// Per-parameter optimizer state: first/second moment buffers plus the step
/// counter, which increases by exactly 1 per step.
template <typename S>
struct AdamWStateT {
    std::vector<S> m;
    std::vector<S> v;
    std::uint64_t step = 0;
    AdamWConfig hyper;

    explicit AdamWStateT(AdamWConfig cfg = {}) : hyper(cfg) {}
};

using AdamWState = AdamWStateT<float>;

/// One decoupled-weight-decay Adam step on a flat parameter buffer.
/// Decay is applied as w <- w - lr*lambda*w before the bias-corrected moment
/// update. Deterministic: identical inputs and state give identical outputs.
template <typename S>
void adamw_step(std::vector<S>& params, const std::vector<S>& grads, AdamWStateT<S>& state,
                double lr) {
    if (!(lr > 0)) throw ParamError("adamw_step: learning rate must be > 0");
    if (grads.size() != params.size())
        throw ShapeError("adamw_step: grad size " + std::to_string(grads.size()) +
                         " does not match param size " + std::to_string(params.size()));
    if (state.m.empty()) {
        state.m.assign(params.size(), S(0));
        state.v.assign(params.size(), S(0));
    } else if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adamw_step: moment buffers do not match param size " +
                         std::to_string(params.size()));
    }

    state.step += 1;
    const double b1 = state.hyper.beta1;
    const double b2 = state.hyper.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double decay = lr * state.hyper.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        double w = static_cast<double>(params[i]);
        const double g = static_cast<double>(grads[i]);
        w -= decay * w;
        const double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
        const double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
        state.m[i] = static_cast<S>(m);
        state.v[i] = static_cast<S>(v);
        const double mhat = m / bias1;
        const double vhat = v / bias2;
        params[i] = static_cast<S>(w - lr * mhat / (std::sqrt(vhat) + state.hyper.epsilon));
    }
}

} // namespace dlkd
