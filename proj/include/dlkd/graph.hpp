#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dlkd/ops.hpp"
#include "dlkd/tensor.hpp"

namespace dlkd {

/// Reverse-mode automatic differentiation tape.
///
/// Operations append nodes in construction order, so the node list is
/// topologically ordered by definition. backward() seeds the scalar loss with
/// gradient 1 and sweeps the tape once in reverse, accumulating into each
/// input's gradient buffer; gradients of `parameter` leaves are then written
/// back into the caller's tensors (overwriting, never accumulating across
/// separate backward calls).
template <typename S>
class GraphT {
public:
    using NodeId = std::size_t;
    using BackwardFn = std::function<void(GraphT&, NodeId)>;

    GraphT() = default;
    GraphT(const GraphT&) = delete;
    GraphT& operator=(const GraphT&) = delete;

    /// Leaf with no gradient tracking (inputs, detached values).
    NodeId constant(TensorT<S> value) {
        return push("const", {}, std::move(value), nullptr, nullptr);
    }

    /// Leaf whose gradient is written back into `leaf.grad` by backward().
    /// The caller must keep `leaf` alive for the lifetime of this graph.
    /// Registering the same leaf again returns the existing node, so a batch
    /// of forwards shares one node per parameter and gradients accumulate.
    NodeId parameter(TensorT<S>& leaf) {
        auto it = param_ids_.find(&leaf);
        if (it != param_ids_.end()) return it->second;
        TensorT<S> copy = leaf;
        copy.grad.clear();
        NodeId id = push("param", {}, std::move(copy), nullptr, &leaf);
        param_ids_.emplace(&leaf, id);
        return id;
    }

    /// Appends an op node. `backward` receives the graph and the node's own
    /// id and must accumulate into the input nodes' gradient buffers.
    NodeId push(std::string tag, std::vector<NodeId> inputs, TensorT<S> value,
                BackwardFn backward, TensorT<S>* leaf = nullptr) {
        nodes_.push_back(Node{std::move(tag), std::move(inputs), std::move(value), {},
                              std::move(backward), leaf});
        return nodes_.size() - 1;
    }

    std::size_t size() const { return nodes_.size(); }

    const TensorT<S>& value(NodeId id) const { return nodes_.at(id).value; }
    const std::string& tag(NodeId id) const { return nodes_.at(id).tag; }
    const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }

    /// Gradient buffer of a node (valid after backward()).
    const std::vector<S>& grad(NodeId id) const { return nodes_.at(id).grad; }
    std::vector<S>& grad_mut(NodeId id) { return nodes_.at(id).grad; }

    /// Reverse sweep from a scalar loss. Every node is visited at most once;
    /// parameters not reachable from the loss end up with zero grad.
    void backward(NodeId loss) {
        if (loss >= nodes_.size()) throw ParamError("backward: unknown node id");
        if (nodes_[loss].value.numel() != 1)
            throw ParamError("backward requires a scalar loss, got shape " +
                             shape_str(nodes_[loss].value.shape));
        for (Node& n : nodes_) n.grad.assign(n.value.numel(), S(0));
        nodes_[loss].grad[0] = S(1);
        for (NodeId id = loss + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.backward_fn) n.backward_fn(*this, id);
        }
        for (Node& n : nodes_) {
            if (n.leaf != nullptr) n.leaf->grad = n.grad;
        }
    }

private:
    struct Node {
        std::string tag;
        std::vector<NodeId> inputs;
        TensorT<S> value;
        std::vector<S> grad;
        BackwardFn backward_fn;
        TensorT<S>* leaf;
    };

    std::vector<Node> nodes_;
    std::unordered_map<const TensorT<S>*, NodeId> param_ids_;
};

using Graph = GraphT<float>;
using Graph64 = GraphT<double>;

// ---------------------------------------------------------------------------
// Differentiable operations. Each wires a forward kernel from ops.hpp to a
// hand-derived backward rule; the finite-difference suite cross-checks every
// rule against central differences.
// ---------------------------------------------------------------------------

template <typename S>
typename GraphT<S>::NodeId conv3d(GraphT<S>& g, typename GraphT<S>::NodeId x,
                                  typename GraphT<S>::NodeId k, typename GraphT<S>::NodeId b,
                                  Triple stride, Triple pad) {
    TensorT<S> y = conv3d_forward(g.value(x), g.value(k), g.value(b), stride, pad);
    return g.push("conv3d", {x, k, b}, std::move(y),
                  [stride, pad](GraphT<S>& gr, std::size_t self) {
                      const auto& in = gr.inputs(self);
                      TensorT<S> gy(gr.value(self).shape, gr.grad(self));
                      conv3d_backward(gr.value(in[0]), gr.value(in[1]), stride, pad, gy,
                                      gr.grad_mut(in[0]), gr.grad_mut(in[1]), gr.grad_mut(in[2]));
                  });
}

template <typename S>
typename GraphT<S>::NodeId relu(GraphT<S>& g, typename GraphT<S>::NodeId x) {
    return g.push("relu", {x}, relu_forward(g.value(x)), [](GraphT<S>& gr, std::size_t self) {
        const auto& xin = gr.value(gr.inputs(self)[0]);
        auto& gx = gr.grad_mut(gr.inputs(self)[0]);
        const auto& gy = gr.grad(self);
        for (std::size_t i = 0; i < gx.size(); ++i)
            if (xin.data[i] > S(0)) gx[i] += gy[i];
    });
}

template <typename S>
typename GraphT<S>::NodeId avg_pool_global(GraphT<S>& g, typename GraphT<S>::NodeId x) {
    return g.push("avg_pool_global", {x}, avg_pool_global_forward(g.value(x)),
                  [](GraphT<S>& gr, std::size_t self) {
                      const auto& xin = gr.value(gr.inputs(self)[0]);
                      auto& gx = gr.grad_mut(gr.inputs(self)[0]);
                      const auto& gy = gr.grad(self);
                      const std::size_t inner = xin.shape[1] * xin.shape[2] * xin.shape[3];
                      const S scale = S(1) / static_cast<S>(inner);
                      for (std::size_t c = 0; c < gy.size(); ++c) {
                          S gc = gy[c] * scale;
                          S* p = gx.data() + c * inner;
                          for (std::size_t i = 0; i < inner; ++i) p[i] += gc;
                      }
                  });
}

template <typename S>
typename GraphT<S>::NodeId affine(GraphT<S>& g, typename GraphT<S>::NodeId x,
                                  typename GraphT<S>::NodeId w, typename GraphT<S>::NodeId b) {
    return g.push("affine", {x, w, b}, affine_forward(g.value(x), g.value(w), g.value(b)),
                  [](GraphT<S>& gr, std::size_t self) {
                      const auto& in = gr.inputs(self);
                      const auto& xv = gr.value(in[0]);
                      const auto& wv = gr.value(in[1]);
                      auto& gx = gr.grad_mut(in[0]);
                      auto& gw = gr.grad_mut(in[1]);
                      auto& gb = gr.grad_mut(in[2]);
                      const auto& gy = gr.grad(self);
                      const std::size_t No = wv.shape[0], Ni = wv.shape[1];
                      for (std::size_t o = 0; o < No; ++o) {
                          const S go = gy[o];
                          const S* wrow = wv.data.data() + o * Ni;
                          S* gwrow = gw.data() + o * Ni;
                          for (std::size_t i = 0; i < Ni; ++i) {
                              gx[i] += go * wrow[i];
                              gwrow[i] += go * xv.data[i];
                          }
                          gb[o] += go;
                      }
                  });
}

template <typename S>
typename GraphT<S>::NodeId softmax(GraphT<S>& g, typename GraphT<S>::NodeId logits,
                                   S temperature) {
    return g.push("softmax", {logits}, softmax_forward(g.value(logits), temperature),
                  [temperature](GraphT<S>& gr, std::size_t self) {
                      const auto& p = gr.value(self).data;
                      const auto& gy = gr.grad(self);
                      auto& gl = gr.grad_mut(gr.inputs(self)[0]);
                      S dot = S(0);
                      for (std::size_t i = 0; i < p.size(); ++i) dot += gy[i] * p[i];
                      for (std::size_t i = 0; i < p.size(); ++i)
                          gl[i] += p[i] * (gy[i] - dot) / temperature;
                  });
}

template <typename S>
typename GraphT<S>::NodeId log_softmax(GraphT<S>& g, typename GraphT<S>::NodeId logits,
                                       S temperature) {
    return g.push("log_softmax", {logits}, log_softmax_forward(g.value(logits), temperature),
                  [temperature](GraphT<S>& gr, std::size_t self) {
                      const auto& ls = gr.value(self).data;
                      const auto& gy = gr.grad(self);
                      auto& gl = gr.grad_mut(gr.inputs(self)[0]);
                      S gsum = S(0);
                      for (S v : gy) gsum += v;
                      for (std::size_t i = 0; i < ls.size(); ++i)
                          gl[i] += (gy[i] - std::exp(ls[i]) * gsum) / temperature;
                  });
}

/// Sum of all elements -> scalar.
template <typename S>
typename GraphT<S>::NodeId sum(GraphT<S>& g, typename GraphT<S>::NodeId x) {
    S acc = S(0);
    for (S v : g.value(x).data) acc += v;
    return g.push("sum", {x}, TensorT<S>::scalar(acc), [](GraphT<S>& gr, std::size_t self) {
        auto& gx = gr.grad_mut(gr.inputs(self)[0]);
        const S gy = gr.grad(self)[0];
        for (S& v : gx) v += gy;
    });
}

/// Elementwise product of same-shape tensors.
template <typename S>
typename GraphT<S>::NodeId mul(GraphT<S>& g, typename GraphT<S>::NodeId a,
                               typename GraphT<S>::NodeId b) {
    const auto& av = g.value(a);
    const auto& bv = g.value(b);
    if (!av.same_shape(bv))
        throw ShapeError("mul shapes differ: " + shape_str(av.shape) + " vs " +
                         shape_str(bv.shape));
    TensorT<S> y = TensorT<S>::zeros(av.shape);
    for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = av.data[i] * bv.data[i];
    return g.push("mul", {a, b}, std::move(y), [](GraphT<S>& gr, std::size_t self) {
        const auto& in = gr.inputs(self);
        const auto& av2 = gr.value(in[0]).data;
        const auto& bv2 = gr.value(in[1]).data;
        auto& ga = gr.grad_mut(in[0]);
        auto& gb = gr.grad_mut(in[1]);
        const auto& gy = gr.grad(self);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga[i] += gy[i] * bv2[i];
            gb[i] += gy[i] * av2[i];
        }
    });
}

/// y = ca*a + cb*b, elementwise over same-shape tensors.
template <typename S>
typename GraphT<S>::NodeId add_weighted(GraphT<S>& g, typename GraphT<S>::NodeId a, S ca,
                                        typename GraphT<S>::NodeId b, S cb) {
    const auto& av = g.value(a);
    const auto& bv = g.value(b);
    if (!av.same_shape(bv))
        throw ShapeError("add_weighted shapes differ: " + shape_str(av.shape) + " vs " +
                         shape_str(bv.shape));
    TensorT<S> y = TensorT<S>::zeros(av.shape);
    for (std::size_t i = 0; i < y.numel(); ++i) y.data[i] = ca * av.data[i] + cb * bv.data[i];
    return g.push("add_weighted", {a, b}, std::move(y), [ca, cb](GraphT<S>& gr, std::size_t self) {
        const auto& in = gr.inputs(self);
        auto& ga = gr.grad_mut(in[0]);
        auto& gb = gr.grad_mut(in[1]);
        const auto& gy = gr.grad(self);
        for (std::size_t i = 0; i < gy.size(); ++i) {
            ga[i] += ca * gy[i];
            gb[i] += cb * gy[i];
        }
    });
}

/// y = c * x.
template <typename S>
typename GraphT<S>::NodeId scale(GraphT<S>& g, typename GraphT<S>::NodeId x, S c) {
    TensorT<S> y = g.value(x);
    y.grad.clear();
    y.requires_grad = false;
    for (S& v : y.data) v *= c;
    return g.push("scale", {x}, std::move(y), [c](GraphT<S>& gr, std::size_t self) {
        auto& gx = gr.grad_mut(gr.inputs(self)[0]);
        const auto& gy = gr.grad(self);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += c * gy[i];
    });
}

/// Arithmetic mean of scalar nodes, accumulated in argument order.
template <typename S>
typename GraphT<S>::NodeId mean_of(GraphT<S>& g,
                                   const std::vector<typename GraphT<S>::NodeId>& xs) {
    if (xs.empty()) throw ParamError("mean_of requires at least one node");
    S acc = S(0);
    for (auto id : xs) acc += g.value(id).scalar_value();
    const S inv = S(1) / static_cast<S>(xs.size());
    return g.push("mean_of", xs, TensorT<S>::scalar(acc * inv),
                  [inv](GraphT<S>& gr, std::size_t self) {
                      const S gy = gr.grad(self)[0] * inv;
                      for (auto id : gr.inputs(self)) gr.grad_mut(id)[0] += gy;
                  });
}

} // namespace dlkd
