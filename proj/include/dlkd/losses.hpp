#pragma once

#include <cmath>
#include <string>

#include "dlkd/graph.hpp"
#include "dlkd/ops.hpp"

namespace dlkd {

/// Weights of the two student loss terms plus the soft-target temperature.
/// Temperature defaults to 1 (plain KL between softmaxed logits); no
/// temperature-squared gradient rescaling is applied at any setting.
struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double temperature = 1.0;

    void validate() const {
        if (alpha < 0 || beta < 0)
            throw ParamError("loss weights must be >= 0 (alpha=" + std::to_string(alpha) +
                             ", beta=" + std::to_string(beta) + ")");
        if (!(alpha + beta > 0)) throw ParamError("alpha + beta must be > 0");
        if (!(temperature > 0)) throw ParamError("loss temperature must be > 0");
    }
};

/// -log_softmax(logits, T=1)[label], differentiable w.r.t. logits.
template <typename S>
typename GraphT<S>::NodeId cross_entropy(GraphT<S>& g, typename GraphT<S>::NodeId logits,
                                         std::size_t label) {
    const auto& lv = g.value(logits);
    if (lv.shape.size() != 1)
        throw ShapeError("cross_entropy expects a logits vector, got " + shape_str(lv.shape));
    if (label >= lv.numel())
        throw InputError("cross_entropy label " + std::to_string(label) + " out of range [0, " +
                         std::to_string(lv.numel()) + ")");
    TensorT<S> ls = log_softmax_forward(lv, S(1));
    S value = -ls.data[label];
    return g.push("cross_entropy", {logits}, TensorT<S>::scalar(value),
                  [ls = std::move(ls), label](GraphT<S>& gr, std::size_t self) {
                      const S gy = gr.grad(self)[0];
                      auto& gl = gr.grad_mut(gr.inputs(self)[0]);
                      for (std::size_t j = 0; j < gl.size(); ++j) {
                          S p = std::exp(ls.data[j]);
                          gl[j] += gy * (p - (j == label ? S(1) : S(0)));
                      }
                  });
}

/// KL(p || q) with p = softmax(teacher/T) held constant and
/// q = softmax(student/T). Gradient flows into the student logits only; the
/// teacher side enters as a plain value, so it can never receive gradient.
template <typename S>
typename GraphT<S>::NodeId kl_soft_targets(GraphT<S>& g, const TensorT<S>& teacher_logits,
                                           typename GraphT<S>::NodeId student_logits,
                                           S temperature) {
    const auto& sv = g.value(student_logits);
    if (teacher_logits.shape.size() != 1 || sv.shape.size() != 1 ||
        teacher_logits.numel() != sv.numel())
        throw ShapeError("kl_soft_targets logits length mismatch: teacher " +
                         shape_str(teacher_logits.shape) + " vs student " + shape_str(sv.shape));
    TensorT<S> log_p = log_softmax_forward(teacher_logits, temperature);
    TensorT<S> log_q = log_softmax_forward(sv, temperature);
    S value = S(0);
    for (std::size_t k = 0; k < log_p.numel(); ++k)
        value += std::exp(log_p.data[k]) * (log_p.data[k] - log_q.data[k]);
    return g.push("kl_soft_targets", {student_logits}, TensorT<S>::scalar(value),
                  [log_p = std::move(log_p), log_q = std::move(log_q),
                   temperature](GraphT<S>& gr, std::size_t self) {
                      const S gy = gr.grad(self)[0];
                      auto& gs = gr.grad_mut(gr.inputs(self)[0]);
                      for (std::size_t j = 0; j < gs.size(); ++j) {
                          S p = std::exp(log_p.data[j]);
                          S q = std::exp(log_q.data[j]);
                          gs[j] += gy * (q - p) / temperature;
                      }
                  });
}

/// L_student = alpha * L_AR + beta * L_KD over scalar loss nodes.
template <typename S>
typename GraphT<S>::NodeId student_total_loss(GraphT<S>& g, typename GraphT<S>::NodeId l_ar,
                                              typename GraphT<S>::NodeId l_kd,
                                              const LossWeights& weights) {
    weights.validate();
    if (g.value(l_ar).numel() != 1 || g.value(l_kd).numel() != 1)
        throw ParamError("student_total_loss expects scalar loss nodes");
    return add_weighted(g, l_ar, static_cast<S>(weights.alpha), l_kd,
                        static_cast<S>(weights.beta));
}

// Non-graph evaluation paths (metrics, tests).

template <typename S>
S cross_entropy_value(const TensorT<S>& logits, std::size_t label) {
    if (label >= logits.numel())
        throw InputError("cross_entropy label " + std::to_string(label) + " out of range [0, " +
                         std::to_string(logits.numel()) + ")");
    return -log_softmax_forward(logits, S(1)).data[label];
}

template <typename S>
S kl_soft_targets_value(const TensorT<S>& teacher_logits, const TensorT<S>& student_logits,
                        S temperature) {
    if (teacher_logits.numel() != student_logits.numel())
        throw ShapeError("kl_soft_targets logits length mismatch");
    TensorT<S> log_p = log_softmax_forward(teacher_logits, temperature);
    TensorT<S> log_q = log_softmax_forward(student_logits, temperature);
    S value = S(0);
    for (std::size_t k = 0; k < log_p.numel(); ++k)
        value += std::exp(log_p.data[k]) * (log_p.data[k] - log_q.data[k]);
    return value;
}

inline double student_total_loss_value(double l_ar, double l_kd, const LossWeights& weights) {
    weights.validate();
    return weights.alpha * l_ar + weights.beta * l_kd;
}

} // namespace dlkd
