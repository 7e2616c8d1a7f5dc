#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfl/error.hpp"

namespace gfl {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(checked_count(shape_), fill) {}

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_count(shape_) != data_.size())
            throw UsageError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // 2-D access; callers guarantee rank() == 2.
    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_[1] + c]; }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    static std::size_t checked_count(const Shape& shape) {
        if (shape.empty()) throw UsageError("tensor shape must have at least one dimension");
        for (auto d : shape)
            if (d == 0) throw UsageError("tensor dimensions must be positive, got " + shape_string(shape));
        return element_count(shape);
    }

    Shape shape_;
    std::vector<double> data_;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered, uniquely named collection of parameter tensors. This is the unit that
// is trained, exchanged, averaged and checkpointed.
class ModelWeights {
public:
    ModelWeights() = default;

    void add(std::string name, Tensor tensor) {
        if (name.empty()) throw UsageError("layer name must be non-empty");
        if (find(name) != nullptr) throw UsageError("duplicate layer name '" + name + "'");
        layers_.push_back({std::move(name), std::move(tensor)});
    }

    const std::vector<NamedTensor>& layers() const noexcept { return layers_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    bool empty() const noexcept { return layers_.empty(); }

    Tensor& operator[](std::size_t i) noexcept { return layers_[i].tensor; }
    const Tensor& operator[](std::size_t i) const noexcept { return layers_[i].tensor; }

    const Tensor* find(std::string_view name) const noexcept {
        for (const auto& l : layers_)
            if (l.name == name) return &l.tensor;
        return nullptr;
    }

    const Tensor& get(std::string_view name) const {
        if (const auto* t = find(name)) return *t;
        throw UsageError("no layer named '" + std::string(name) + "'");
    }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.tensor.size();
        return n;
    }

    bool all_finite() const noexcept {
        return std::all_of(layers_.begin(), layers_.end(),
                           [](const NamedTensor& l) { return l.tensor.all_finite(); });
    }

    // Same structure, every value set to `fill`.
    ModelWeights zeros_like(double fill = 0.0) const {
        ModelWeights out;
        out.layers_.reserve(layers_.size());
        for (const auto& l : layers_) out.layers_.push_back({l.name, Tensor(l.tensor.shape(), fill)});
        return out;
    }

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;

private:
    std::vector<NamedTensor> layers_;
};

inline bool congruent(const ModelWeights& a, const ModelWeights& b) noexcept {
    if (a.layer_count() != b.layer_count()) return false;
    for (std::size_t i = 0; i < a.layer_count(); ++i) {
        const auto& la = a.layers()[i];
        const auto& lb = b.layers()[i];
        if (la.name != lb.name || la.tensor.shape() != lb.tensor.shape()) return false;
    }
    return true;
}

inline void require_congruent(const ModelWeights& a, const ModelWeights& b, std::string_view what) {
    if (!congruent(a, b)) throw CongruenceError(std::string(what) + ": weight sets are not congruent");
}

// Applies fn(dst_value, src_value) element-wise over two congruent weight sets.
template <typename Fn>
void zip_apply(ModelWeights& dst, const ModelWeights& src, Fn&& fn) {
    for (std::size_t i = 0; i < dst.layer_count(); ++i) {
        auto d = dst[i].values();
        auto s = src[i].values();
        for (std::size_t j = 0; j < d.size(); ++j) fn(d[j], s[j]);
    }
}

inline double max_abs_diff(const ModelWeights& a, const ModelWeights& b) {
    require_congruent(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.layer_count(); ++i) {
        auto x = a[i].values();
        auto y = b[i].values();
        for (std::size_t j = 0; j < x.size(); ++j) m = std::max(m, std::abs(x[j] - y[j]));
    }
    return m;
}

inline double l2_norm(const ModelWeights& w) {
    double s = 0.0;
    for (const auto& l : w.layers())
        for (double v : l.tensor.values()) s += v * v;
    return std::sqrt(s);
}

// Flattened copy of every parameter in layer order.
inline std::vector<double> flatten(const ModelWeights& w) {
    std::vector<double> out;
    out.reserve(w.parameter_count());
    for (const auto& l : w.layers()) out.insert(out.end(), l.tensor.values().begin(), l.tensor.values().end());
    return out;
}

}  // namespace gfl
