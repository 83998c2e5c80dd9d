#pragma once

#include <cmath>
#include <functional>

#include "dlkd/tensor.hpp"

namespace dlkd {

/// Central-difference gradient of a scalar-valued function of one tensor:
/// (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps) per coordinate. This is the
/// independent oracle the reverse-mode suite is checked against; it never
/// touches the tape.
template <typename S, typename F>
TensorT<S> finite_diff_grad(F&& f, const TensorT<S>& x, S eps = S(1e-5)) {
    if (!(eps > S(0))) throw ParamError("finite_diff_grad: eps must be > 0");
    TensorT<S> g = TensorT<S>::zeros(x.shape);
    TensorT<S> probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const S orig = probe.data[i];
        probe.data[i] = orig + eps;
        const S hi = f(static_cast<const TensorT<S>&>(probe));
        probe.data[i] = orig - eps;
        const S lo = f(static_cast<const TensorT<S>&>(probe));
        probe.data[i] = orig;
        g.data[i] = (hi - lo) / (S(2) * eps);
    }
    return g;
}

/// Worst-case comparison of an autodiff gradient against a reference.
struct GradCompare {
    bool ok = true;
    std::size_t worst_index = 0;
    double worst_rel = 0.0;
    double ad_value = 0.0;
    double fd_value = 0.0;
};

/// A coordinate passes if |ad - fd| <= abs_floor or the relative error
/// |ad - fd| / max(|ad|, |fd|) is within rel_tol.
template <typename S>
GradCompare compare_gradients(const std::vector<S>& ad, const std::vector<S>& fd,
                              double rel_tol = 1e-4, double abs_floor = 1e-8) {
    if (ad.size() != fd.size())
        throw ShapeError("gradient comparison size mismatch: " + std::to_string(ad.size()) +
                         " vs " + std::to_string(fd.size()));
    GradCompare r;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        const double a = static_cast<double>(ad[i]);
        const double b = static_cast<double>(fd[i]);
        const double diff = std::abs(a - b);
        if (diff <= abs_floor) continue;
        const double rel = diff / std::max(std::abs(a), std::abs(b));
        if (rel > r.worst_rel) {
            r.worst_rel = rel;
            r.worst_index = i;
            r.ad_value = a;
            r.fd_value = b;
        }
        if (rel > rel_tol) r.ok = false;
    }
    return r;
}

} // namespace dlkd
