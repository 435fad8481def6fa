#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "galc/error.hpp"
#include "galc/rng.hpp"

namespace galc {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

inline void check_shape(const Shape& shape) {
    if (shape.empty()) fail(Errc::invalid_shape, "shape must have at least one dimension");
    for (auto d : shape)
        if (d == 0) fail(Errc::invalid_shape, "zero-sized dimension in " + shape_string(shape));
}

/// Dense row-major array. `T` is the storage type; reductions over it use
/// double accumulators regardless of `T`.
template <class T>
class BasicTensor {
   public:
    using value_type = T;

    BasicTensor() = default;

    explicit BasicTensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
        check_shape(shape_);
        data_.assign(shape_size(shape_), fill);
    }

    BasicTensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape(shape_);
        if (shape_size(shape_) != data_.size())
            fail(Errc::shape_mismatch, "data length " + std::to_string(data_.size()) +
                                           " does not match shape " + shape_string(shape_));
    }

    static BasicTensor scalar(T value) { return BasicTensor(Shape{1}, std::vector<T>{value}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<const T> data() const { return data_; }
    std::span<T> data() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// Value of a single-element tensor.
    T item() const {
        if (data_.size() != 1) fail(Errc::not_scalar, "item() on tensor of shape " + shape_string(shape_));
        return data_[0];
    }

    bool requires_grad() const { return requires_grad_; }
    BasicTensor& set_requires_grad(bool on) {
        requires_grad_ = on;
        return *this;
    }

    BasicTensor reshaped(Shape shape) const {
        check_shape(shape);
        if (shape_size(shape) != data_.size())
            fail(Errc::shape_mismatch,
                 "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
        BasicTensor out = *this;
        out.shape_ = std::move(shape);
        return out;
    }

    template <class U>
    BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        BasicTensor<U> t(shape_, std::move(out));
        t.set_requires_grad(requires_grad_);
        return t;
    }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// Value equality on shape and data (bitwise for non-NaN values).
    friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

   private:
    Shape shape_;
    std::vector<T> data_;
    bool requires_grad_ = false;
};

using Tensor = BasicTensor<float>;

template <class T>
BasicTensor<T> random_uniform(const Shape& shape, double lo, double hi, CounterRng& rng) {
    check_shape(shape);
    if (!(lo < hi)) fail(Errc::invalid_range, "random_uniform requires lo < hi");
    BasicTensor<T> out(shape);
    const T upper = static_cast<T>(hi);
    for (auto& v : out.data()) {
        T x = static_cast<T>(rng.uniform(lo, hi));
        // rounding to T may land on hi itself
        if (x >= upper) x = std::nextafter(upper, static_cast<T>(lo));
        v = x;
    }
    return out;
}

/// Values uniform in [lo, hi); identical arguments give identical tensors.
template <class T = float>
BasicTensor<T> random_uniform(const Shape& shape, double lo, double hi, std::uint64_t seed) {
    CounterRng rng(seed);
    return random_uniform<T>(shape, lo, hi, rng);
}

}  // namespace galc
