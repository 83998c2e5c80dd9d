#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "dlkd/tensor.hpp"

namespace dlkd {

/// (t, h, w) triple for strides and paddings.
using Triple = std::array<std::size_t, 3>;

/// Output shape of a 3d cross-correlation. Validates channel agreement,
/// stride positivity and that each kernel extent fits the padded input.
template <typename S>
Shape conv3d_out_shape(const TensorT<S>& x, const TensorT<S>& k, Triple stride, Triple pad) {
    if (x.shape.size() != 4)
        throw ShapeError("conv3d input must be [C,T,H,W], got " + shape_str(x.shape));
    if (k.shape.size() != 5)
        throw ShapeError("conv3d kernel must be [Cout,Cin,kt,kh,kw], got " + shape_str(k.shape));
    if (k.shape[1] != x.shape[0])
        throw ShapeError("conv3d kernel Cin mismatch: kernel " + shape_str(k.shape) +
                         " vs input " + shape_str(x.shape));
    for (int a = 0; a < 3; ++a) {
        if (stride[a] < 1) throw ShapeError("conv3d stride components must be >= 1");
        std::size_t padded = x.shape[1 + a] + 2 * pad[a];
        if (k.shape[2 + a] > padded)
            throw ShapeError("conv3d kernel " + shape_str(k.shape) +
                             " larger than padded input " + shape_str(x.shape) + " on axis " +
                             std::to_string(a));
    }
    Shape out(4);
    out[0] = k.shape[0];
    for (int a = 0; a < 3; ++a)
        out[1 + a] = (x.shape[1 + a] + 2 * pad[a] - k.shape[2 + a]) / stride[a] + 1;
    return out;
}

/// Standard 3d cross-correlation plus per-output-channel bias.
template <typename S>
TensorT<S> conv3d_forward(const TensorT<S>& x, const TensorT<S>& k, const TensorT<S>& b,
                          Triple stride, Triple pad) {
    Shape os = conv3d_out_shape(x, k, stride, pad);
    if (b.shape != Shape{k.shape[0]})
        throw ShapeError("conv3d bias must be [Cout]=" + std::to_string(k.shape[0]) +
                         ", got " + shape_str(b.shape));

    const std::size_t Ci = x.shape[0], T = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t Co = os[0], To = os[1], Ho = os[2], Wo = os[3];
    const std::size_t kt = k.shape[2], kh = k.shape[3], kw = k.shape[4];

    TensorT<S> y = TensorT<S>::zeros(os);
    // Pure temporal kernel (kt,1,1) with unit stride: accumulate whole H*W
    // planes at a time. Per output element the terms arrive in (ci, dt) order,
    // matching the generic loop, so results are bitwise identical to it.
    if (kh == 1 && kw == 1 && stride[0] == 1 && stride[1] == 1 && stride[2] == 1 &&
        pad[1] == 0 && pad[2] == 0) {
        const std::size_t plane = H * W;
        for (std::size_t co = 0; co < Co; ++co) {
            S* yc = y.data.data() + co * To * plane;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const S* xc = x.data.data() + ci * T * plane;
                const S* kc = k.data.data() + (co * Ci + ci) * kt;
                for (std::size_t to = 0; to < To; ++to) {
                    S* yrow = yc + to * plane;
                    for (std::size_t dt = 0; dt < kt; ++dt) {
                        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(to + dt) -
                                                 static_cast<std::ptrdiff_t>(pad[0]);
                        if (t < 0 || t >= static_cast<std::ptrdiff_t>(T)) continue;
                        const S kv = kc[dt];
                        const S* xrow = xc + static_cast<std::size_t>(t) * plane;
                        for (std::size_t i = 0; i < plane; ++i) yrow[i] += kv * xrow[i];
                    }
                }
            }
            // bias enters each output element after the (ci, dt) terms, as in
            // the generic loop
            const S bv = b.data[co];
            for (std::size_t i = 0; i < To * plane; ++i) yc[i] += bv;
        }
        return y;
    }
    // Pure spatial kernel (1,kh,kw) with unit temporal stride: iterate kernel
    // taps in the outer loops and sweep contiguous output rows inside, so the
    // hot loop is a branch-free multiply-accumulate. Per output element the
    // terms still arrive in (ci, dh, dw) order with the bias last, matching
    // the generic loop bitwise.
    if (kt == 1 && stride[0] == 1 && pad[0] == 0) {
        const std::size_t oplane = Ho * Wo;
        for (std::size_t co = 0; co < Co; ++co) {
            S* yc = y.data.data() + co * To * oplane;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const S* xc = x.data.data() + ci * T * H * W;
                const S* kc = k.data.data() + ((co * Ci + ci) * kh) * kw;
                for (std::size_t dh = 0; dh < kh; ++dh) {
                    // h = ho*sh + dh - ph must land in [0, H)
                    std::size_t ho_lo = 0;
                    while (ho_lo < Ho &&
                           static_cast<std::ptrdiff_t>(ho_lo * stride[1] + dh) <
                               static_cast<std::ptrdiff_t>(pad[1]))
                        ++ho_lo;
                    std::size_t ho_hi = Ho;
                    while (ho_hi > ho_lo &&
                           (ho_hi - 1) * stride[1] + dh >= H + pad[1])
                        --ho_hi;
                    for (std::size_t dw = 0; dw < kw; ++dw) {
                        std::size_t wo_lo = 0;
                        while (wo_lo < Wo &&
                               static_cast<std::ptrdiff_t>(wo_lo * stride[2] + dw) <
                                   static_cast<std::ptrdiff_t>(pad[2]))
                            ++wo_lo;
                        std::size_t wo_hi = Wo;
                        while (wo_hi > wo_lo &&
                               (wo_hi - 1) * stride[2] + dw >= W + pad[2])
                            --wo_hi;
                        const S kv = kc[dh * kw + dw];
                        const std::ptrdiff_t woff = static_cast<std::ptrdiff_t>(dw) -
                                                    static_cast<std::ptrdiff_t>(pad[2]);
                        for (std::size_t t = 0; t < To; ++t) {
                            for (std::size_t ho = ho_lo; ho < ho_hi; ++ho) {
                                const std::size_t h = ho * stride[1] + dh - pad[1];
                                const S* xrow = xc + (t * H + h) * W;
                                S* yrow = yc + (t * Ho + ho) * Wo;
                                for (std::size_t wo = wo_lo; wo < wo_hi; ++wo)
                                    yrow[wo] += kv * xrow[static_cast<std::ptrdiff_t>(
                                                              wo * stride[2]) +
                                                          woff];
                            }
                        }
                    }
                }
            }
            const S bv = b.data[co];
            for (std::size_t i = 0; i < To * oplane; ++i) yc[i] += bv;
        }
        return y;
    }
    // Valid kernel-offset ranges are hoisted out of the inner loops; the terms
    // that survive are accumulated in the same (ci, dt, dh, dw) order as the
    // naive bounds-checked loop, so results are bitwise identical.
    const std::ptrdiff_t pT = static_cast<std::ptrdiff_t>(T);
    const std::ptrdiff_t pH = static_cast<std::ptrdiff_t>(H);
    const std::ptrdiff_t pW = static_cast<std::ptrdiff_t>(W);
    for (std::size_t co = 0; co < Co; ++co) {
        for (std::size_t to = 0; to < To; ++to) {
            const std::ptrdiff_t t0 = static_cast<std::ptrdiff_t>(to * stride[0]) -
                                      static_cast<std::ptrdiff_t>(pad[0]);
            const std::size_t dt_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -t0));
            const std::size_t dt_hi = static_cast<std::size_t>(
                std::clamp<std::ptrdiff_t>(pT - t0, 0, static_cast<std::ptrdiff_t>(kt)));
            for (std::size_t ho = 0; ho < Ho; ++ho) {
                const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(ho * stride[1]) -
                                          static_cast<std::ptrdiff_t>(pad[1]);
                const std::size_t dh_lo =
                    static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -h0));
                const std::size_t dh_hi = static_cast<std::size_t>(
                    std::clamp<std::ptrdiff_t>(pH - h0, 0, static_cast<std::ptrdiff_t>(kh)));
                for (std::size_t wo = 0; wo < Wo; ++wo) {
                    const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(wo * stride[2]) -
                                              static_cast<std::ptrdiff_t>(pad[2]);
                    const std::size_t dw_lo =
                        static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -w0));
                    const std::size_t dw_hi = static_cast<std::size_t>(
                        std::clamp<std::ptrdiff_t>(pW - w0, 0, static_cast<std::ptrdiff_t>(kw)));
                    S acc = S(0);
                    for (std::size_t ci = 0; ci < Ci; ++ci) {
                        for (std::size_t dt = dt_lo; dt < dt_hi; ++dt) {
                            const std::size_t t = static_cast<std::size_t>(t0) + dt;
                            for (std::size_t dh = dh_lo; dh < dh_hi; ++dh) {
                                const std::size_t h = static_cast<std::size_t>(h0) + dh;
                                const S* xrow =
                                    x.data.data() + ((ci * T + t) * H + h) * W + w0;
                                const S* krow = k.data.data() +
                                                (((co * Ci + ci) * kt + dt) * kh + dh) * kw;
                                for (std::size_t dw = dw_lo; dw < dw_hi; ++dw)
                                    acc += xrow[dw] * krow[dw];
                            }
                        }
                    }
                    y.data[((co * To + to) * Ho + ho) * Wo + wo] = acc + b.data[co];
                }
            }
        }
    }
    return y;
}

/// Accumulates conv3d gradients into gx/gk/gb (which must be pre-sized and
/// zeroed by the caller; accumulation order is fixed).
template <typename S>
void conv3d_backward(const TensorT<S>& x, const TensorT<S>& k, Triple stride, Triple pad,
                     const TensorT<S>& gy, std::vector<S>& gx, std::vector<S>& gk,
                     std::vector<S>& gb) {
    const std::size_t Ci = x.shape[0], T = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t Co = gy.shape[0], To = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3];
    const std::size_t kt = k.shape[2], kh = k.shape[3], kw = k.shape[4];

    // Fast path for pure temporal kernels (kt,1,1), unit stride. gx elements
    // receive their addends in ascending (co, to) order exactly as the generic
    // loop does; gb and gk sum their addends in the same ascending output
    // order but through a local accumulator, added to the buffer once per
    // call. Both paths are deterministic and finite-difference checked.
    if (kh == 1 && kw == 1 && stride[0] == 1 && stride[1] == 1 && stride[2] == 1 &&
        pad[1] == 0 && pad[2] == 0) {
        const std::size_t plane = H * W;
        for (std::size_t co = 0; co < Co; ++co) {
            const S* gyc = gy.data.data() + co * To * plane;
            S gbacc = S(0);
            for (std::size_t i = 0; i < To * plane; ++i) gbacc += gyc[i];
            gb[co] += gbacc;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const S* xc = x.data.data() + ci * T * plane;
                S* gxc = gx.data() + ci * T * plane;
                const S* kc = k.data.data() + (co * Ci + ci) * kt;
                S* gkc = gk.data() + (co * Ci + ci) * kt;
                for (std::size_t to = 0; to < To; ++to) {
                    const S* gyrow = gyc + to * plane;
                    for (std::size_t dt = 0; dt < kt; ++dt) {
                        const std::ptrdiff_t t = static_cast<std::ptrdiff_t>(to + dt) -
                                                 static_cast<std::ptrdiff_t>(pad[0]);
                        if (t < 0 || t >= static_cast<std::ptrdiff_t>(T)) continue;
                        const S kv = kc[dt];
                        const S* xrow = xc + static_cast<std::size_t>(t) * plane;
                        S* gxrow = gxc + static_cast<std::size_t>(t) * plane;
                        S gkacc = S(0);
                        for (std::size_t i = 0; i < plane; ++i) {
                            gxrow[i] += kv * gyrow[i];
                            gkacc += gyrow[i] * xrow[i];
                        }
                        gkc[dt] += gkacc;
                    }
                }
            }
        }
        return;
    }

    // Fast path for pure spatial kernels (1,kh,kw), unit temporal stride.
    if (kt == 1 && stride[0] == 1 && pad[0] == 0) {
        const std::size_t oplane = Ho * Wo;
        for (std::size_t co = 0; co < Co; ++co) {
            const S* gyc = gy.data.data() + co * To * oplane;
            S gbacc = S(0);
            for (std::size_t i = 0; i < To * oplane; ++i) gbacc += gyc[i];
            gb[co] += gbacc;
            for (std::size_t ci = 0; ci < Ci; ++ci) {
                const S* xc = x.data.data() + ci * T * H * W;
                S* gxc = gx.data() + ci * T * H * W;
                const S* kc = k.data.data() + ((co * Ci + ci) * kh) * kw;
                S* gkc = gk.data() + ((co * Ci + ci) * kh) * kw;
                for (std::size_t dh = 0; dh < kh; ++dh) {
                    std::size_t ho_lo = 0;
                    while (ho_lo < Ho && static_cast<std::ptrdiff_t>(ho_lo * stride[1] + dh) <
                                             static_cast<std::ptrdiff_t>(pad[1]))
                        ++ho_lo;
                    std::size_t ho_hi = Ho;
                    while (ho_hi > ho_lo && (ho_hi - 1) * stride[1] + dh >= H + pad[1]) --ho_hi;
                    for (std::size_t dw = 0; dw < kw; ++dw) {
                        std::size_t wo_lo = 0;
                        while (wo_lo < Wo &&
                               static_cast<std::ptrdiff_t>(wo_lo * stride[2] + dw) <
                                   static_cast<std::ptrdiff_t>(pad[2]))
                            ++wo_lo;
                        std::size_t wo_hi = Wo;
                        while (wo_hi > wo_lo && (wo_hi - 1) * stride[2] + dw >= W + pad[2])
                            --wo_hi;
                        const std::ptrdiff_t woff = static_cast<std::ptrdiff_t>(dw) -
                                                    static_cast<std::ptrdiff_t>(pad[2]);
                        // gk: addends over ascending output positions
                        S gkacc = S(0);
                        for (std::size_t t = 0; t < To; ++t) {
                            for (std::size_t ho = ho_lo; ho < ho_hi; ++ho) {
                                const std::size_t h = ho * stride[1] + dh - pad[1];
                                const S* xrow = xc + (t * H + h) * W;
                                const S* gyrow = gyc + (t * Ho + ho) * Wo;
                                for (std::size_t wo = wo_lo; wo < wo_hi; ++wo)
                                    gkacc +=
                                        gyrow[wo] *
                                        xrow[static_cast<std::ptrdiff_t>(wo * stride[2]) + woff];
                            }
                        }
                        gkc[dh * kw + dw] += gkacc;
                    }
                }
                // gx: iterate (dh, dw) descending so each gx element receives
                // its addends in ascending (ho, wo) order, matching the
                // generic loop exactly.
                for (std::size_t dh_rev = kh; dh_rev-- > 0;) {
                    const std::size_t dh = dh_rev;
                    std::size_t ho_lo = 0;
                    while (ho_lo < Ho && static_cast<std::ptrdiff_t>(ho_lo * stride[1] + dh) <
                                             static_cast<std::ptrdiff_t>(pad[1]))
                        ++ho_lo;
                    std::size_t ho_hi = Ho;
                    while (ho_hi > ho_lo && (ho_hi - 1) * stride[1] + dh >= H + pad[1]) --ho_hi;
                    for (std::size_t dw_rev = kw; dw_rev-- > 0;) {
                        const std::size_t dw = dw_rev;
                        std::size_t wo_lo = 0;
                        while (wo_lo < Wo &&
                               static_cast<std::ptrdiff_t>(wo_lo * stride[2] + dw) <
                                   static_cast<std::ptrdiff_t>(pad[2]))
                            ++wo_lo;
                        std::size_t wo_hi = Wo;
                        while (wo_hi > wo_lo && (wo_hi - 1) * stride[2] + dw >= W + pad[2])
                            --wo_hi;
                        const S kv = kc[dh * kw + dw];
                        const std::ptrdiff_t woff = static_cast<std::ptrdiff_t>(dw) -
                                                    static_cast<std::ptrdiff_t>(pad[2]);
                        for (std::size_t t = 0; t < To; ++t) {
                            for (std::size_t ho = ho_lo; ho < ho_hi; ++ho) {
                                const std::size_t h = ho * stride[1] + dh - pad[1];
                                S* gxrow = gxc + (t * H + h) * W;
                                const S* gyrow = gyc + (t * Ho + ho) * Wo;
                                for (std::size_t wo = wo_lo; wo < wo_hi; ++wo)
                                    gxrow[static_cast<std::ptrdiff_t>(wo * stride[2]) + woff] +=
                                        kv * gyrow[wo];
                            }
                        }
                    }
                }
            }
        }
        return;
    }

    const std::ptrdiff_t pT = static_cast<std::ptrdiff_t>(T);
    const std::ptrdiff_t pH = static_cast<std::ptrdiff_t>(H);
    const std::ptrdiff_t pW = static_cast<std::ptrdiff_t>(W);
    for (std::size_t co = 0; co < Co; ++co) {
        for (std::size_t to = 0; to < To; ++to) {
            const std::ptrdiff_t t0 = static_cast<std::ptrdiff_t>(to * stride[0]) -
                                      static_cast<std::ptrdiff_t>(pad[0]);
            const std::size_t dt_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -t0));
            const std::size_t dt_hi = static_cast<std::size_t>(
                std::clamp<std::ptrdiff_t>(pT - t0, 0, static_cast<std::ptrdiff_t>(kt)));
            for (std::size_t ho = 0; ho < Ho; ++ho) {
                const std::ptrdiff_t h0 = static_cast<std::ptrdiff_t>(ho * stride[1]) -
                                          static_cast<std::ptrdiff_t>(pad[1]);
                const std::size_t dh_lo =
                    static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -h0));
                const std::size_t dh_hi = static_cast<std::size_t>(
                    std::clamp<std::ptrdiff_t>(pH - h0, 0, static_cast<std::ptrdiff_t>(kh)));
                for (std::size_t wo = 0; wo < Wo; ++wo) {
                    const std::ptrdiff_t w0 = static_cast<std::ptrdiff_t>(wo * stride[2]) -
                                              static_cast<std::ptrdiff_t>(pad[2]);
                    const std::size_t dw_lo =
                        static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -w0));
                    const std::size_t dw_hi = static_cast<std::size_t>(
                        std::clamp<std::ptrdiff_t>(pW - w0, 0, static_cast<std::ptrdiff_t>(kw)));
                    S g = gy.data[((co * To + to) * Ho + ho) * Wo + wo];
                    gb[co] += g;
                    for (std::size_t ci = 0; ci < Ci; ++ci) {
                        for (std::size_t dt = dt_lo; dt < dt_hi; ++dt) {
                            const std::size_t t = static_cast<std::size_t>(t0) + dt;
                            for (std::size_t dh = dh_lo; dh < dh_hi; ++dh) {
                                const std::size_t h = static_cast<std::size_t>(h0) + dh;
                                const S* xrow = x.data.data() + ((ci * T + t) * H + h) * W + w0;
                                S* gxrow = gx.data() + ((ci * T + t) * H + h) * W + w0;
                                const S* krow = k.data.data() +
                                                (((co * Ci + ci) * kt + dt) * kh + dh) * kw;
                                S* gkrow = gk.data() + (((co * Ci + ci) * kt + dt) * kh + dh) * kw;
                                for (std::size_t dw = dw_lo; dw < dw_hi; ++dw) {
                                    gxrow[dw] += g * krow[dw];
                                    gkrow[dw] += g * xrow[dw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename S>
TensorT<S> relu_forward(const TensorT<S>& x) {
    TensorT<S> y = x;
    y.grad.clear();
    y.requires_grad = false;
    for (S& v : y.data) v = std::max(S(0), v);
    return y;
}

/// Global average pool over (T,H,W): [C,T,H,W] -> [C].
template <typename S>
TensorT<S> avg_pool_global_forward(const TensorT<S>& x) {
    if (x.shape.size() != 4)
        throw ShapeError("avg_pool_global expects [C,T,H,W], got " + shape_str(x.shape));
    const std::size_t C = x.shape[0];
    const std::size_t inner = x.shape[1] * x.shape[2] * x.shape[3];
    TensorT<S> y = TensorT<S>::zeros({C});
    for (std::size_t c = 0; c < C; ++c) {
        S acc = S(0);
        const S* p = x.data.data() + c * inner;
        for (std::size_t i = 0; i < inner; ++i) acc += p[i];
        y.data[c] = acc / static_cast<S>(inner);
    }
    return y;
}

/// y = W x + b with x:[Nin], W:[Nout,Nin], b:[Nout].
template <typename S>
TensorT<S> affine_forward(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    if (x.shape.size() != 1 || w.shape.size() != 2 || b.shape.size() != 1 ||
        w.shape[1] != x.shape[0] || w.shape[0] != b.shape[0])
        throw ShapeError("affine shapes not conformable: x " + shape_str(x.shape) + ", W " +
                         shape_str(w.shape) + ", b " + shape_str(b.shape));
    const std::size_t No = w.shape[0], Ni = w.shape[1];
    TensorT<S> y = TensorT<S>::zeros({No});
    for (std::size_t o = 0; o < No; ++o) {
        S acc = S(0);
        const S* wrow = w.data.data() + o * Ni;
        for (std::size_t i = 0; i < Ni; ++i) acc += wrow[i] * x.data[i];
        y.data[o] = acc + b.data[o];
    }
    return y;
}

template <typename S>
void check_temperature(S temperature) {
    if (!(temperature > S(0)))
        throw ParamError("softmax temperature must be > 0, got " +
                         std::to_string(static_cast<double>(temperature)));
}

/// Max-shifted softmax over a length-K vector at the given temperature.
template <typename S>
TensorT<S> softmax_forward(const TensorT<S>& logits, S temperature) {
    check_temperature(temperature);
    if (logits.shape.size() != 1 || logits.numel() < 1)
        throw ShapeError("softmax expects a non-empty vector, got " + shape_str(logits.shape));
    const std::size_t K = logits.numel();
    S m = *std::max_element(logits.data.begin(), logits.data.end());
    TensorT<S> p = TensorT<S>::zeros({K});
    S sum = S(0);
    for (std::size_t i = 0; i < K; ++i) {
        p.data[i] = std::exp((logits.data[i] - m) / temperature);
        sum += p.data[i];
    }
    for (std::size_t i = 0; i < K; ++i) p.data[i] /= sum;
    return p;
}

/// log(softmax(logits, temperature)), computed via the same max shift.
template <typename S>
TensorT<S> log_softmax_forward(const TensorT<S>& logits, S temperature) {
    check_temperature(temperature);
    if (logits.shape.size() != 1 || logits.numel() < 1)
        throw ShapeError("log_softmax expects a non-empty vector, got " + shape_str(logits.shape));
    const std::size_t K = logits.numel();
    S m = *std::max_element(logits.data.begin(), logits.data.end());
    S sum = S(0);
    for (std::size_t i = 0; i < K; ++i) sum += std::exp((logits.data[i] - m) / temperature);
    S lse = std::log(sum);
    TensorT<S> out = TensorT<S>::zeros({K});
    for (std::size_t i = 0; i < K; ++i) out.data[i] = (logits.data[i] - m) / temperature - lse;
    return out;
}

} // namespace dlkd
