#pragma once

#include <algorithm>
#include <cmath>

#include "galc/tensor.hpp"

namespace galc {

/// Central differences (f(x + eps·e_i) − f(x − eps·e_i)) / (2·eps) for every
/// element of `x`. `f` maps a tensor to a scalar.
template <class T, class F>
BasicTensor<T> finite_diff_grad(F&& f, const BasicTensor<T>& x, double eps) {
    if (!(eps > 0)) fail(Errc::invalid_range, "finite_diff_grad requires eps > 0");
    BasicTensor<T> grad(x.shape());
    BasicTensor<T> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T orig = probe[i];
        probe[i] = static_cast<T>(orig + eps);
        const double up = static_cast<double>(f(probe));
        probe[i] = static_cast<T>(orig - eps);
        const double down = static_cast<double>(f(probe));
        probe[i] = orig;
        grad[i] = static_cast<T>((up - down) / (2.0 * eps));
    }
    return grad;
}

/// ‖a − b‖₂ / max(‖a‖₂, ‖b‖₂, floor).
template <class T>
double relative_error(const BasicTensor<T>& a, const BasicTensor<T>& b, double floor = 1e-8) {
    if (a.shape() != b.shape()) fail(Errc::shape_mismatch, "relative_error on different shapes");
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i], y = b[i];
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

}  // namespace galc
