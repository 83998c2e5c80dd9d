#pragma once

#include <cstddef>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dlkd/errors.hpp"

namespace dlkd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

/// Dense n-dimensional array, row-major, with an optional gradient buffer.
/// The scalar type is a template parameter: float for training, double for
/// finite-difference gradient checking.
template <typename S>
struct TensorT {
    Shape shape;
    std::vector<S> data;
    std::vector<S> grad;        // empty until backward() fills it
    bool requires_grad = false;

    TensorT() = default;

    TensorT(Shape shp, std::vector<S> values) : shape(std::move(shp)), data(std::move(values)) {
        if (shape_numel(shape) != data.size())
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    }

    static TensorT zeros(Shape shp) {
        std::size_t n = shape_numel(shp);
        return TensorT(std::move(shp), std::vector<S>(n, S(0)));
    }

    static TensorT full(Shape shp, S value) {
        std::size_t n = shape_numel(shp);
        return TensorT(std::move(shp), std::vector<S>(n, value));
    }

    static TensorT scalar(S value) { return TensorT({1}, {value}); }

    std::size_t numel() const { return data.size(); }

    S scalar_value() const {
        if (data.size() != 1)
            throw ParamError("scalar_value() on tensor of shape " + shape_str(shape));
        return data[0];
    }

    bool same_shape(const TensorT& other) const { return shape == other.shape; }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void zero_grad() { grad.assign(data.size(), S(0)); }

    /// Convert element type (e.g. f32 model -> f64 gradient-check copy).
    template <typename T>
    TensorT<T> cast() const {
        TensorT<T> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
        out.requires_grad = requires_grad;
        return out;
    }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

} // namespace dlkd
