#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "galc/autograd.hpp"
#include "galc/kernels.hpp"

namespace galc {

/// Probabilities fed to bce are clamped to [kBceEpsilon, 1 - kBceEpsilon].
inline constexpr double kBceEpsilon = 1e-7;

namespace detail {

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b)
        fail(Errc::shape_mismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

template <class T, class Forward, class Derivative>
Var<T> elementwise(const Var<T>& x, Forward f, Derivative df) {
    const auto& xv = x.value();
    BasicTensor<T> out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    BasicTensor<T> saved = out;
    return x.tape().record(std::move(out), {x.id()},
                           [x, saved = std::move(saved), df](const BasicTensor<T>& g, std::span<const bool>,
                                                             std::span<BasicTensor<T>> grads) {
                               const auto& xv = x.value();
                               BasicTensor<T> dx(xv.shape());
                               for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = g[i] * df(xv[i], saved[i]);
                               grads[0] = std::move(dx);
                           });
}

inline std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace detail

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "add");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return a.tape().record(std::move(out), {a.id(), b.id()},
                           [](const BasicTensor<T>& g, std::span<const bool> needs, std::span<BasicTensor<T>> grads) {
                               if (needs[0]) grads[0] = g;
                               if (needs[1]) grads[1] = g;
                           });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "sub");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return a.tape().record(std::move(out), {a.id(), b.id()},
                           [](const BasicTensor<T>& g, std::span<const bool> needs, std::span<BasicTensor<T>> grads) {
                               if (needs[0]) grads[0] = g;
                               if (needs[1]) {
                                   BasicTensor<T> neg = g;
                                   for (auto& v : neg.data()) v = -v;
                                   grads[1] = std::move(neg);
                               }
                           });
}

/// Elementwise product.
template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    detail::require_same_shape(a.shape(), b.shape(), "mul");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return a.tape().record(
        std::move(out), {a.id(), b.id()},
        [a, b](const BasicTensor<T>& g, std::span<const bool> needs, std::span<BasicTensor<T>> grads) {
            if (needs[0]) {
                BasicTensor<T> da = g;
                const auto& bv = b.value();
                for (std::size_t i = 0; i < da.size(); ++i) da[i] *= bv[i];
                grads[0] = std::move(da);
            }
            if (needs[1]) {
                BasicTensor<T> db = g;
                const auto& av = a.value();
                for (std::size_t i = 0; i < db.size(); ++i) db[i] *= av[i];
                grads[1] = std::move(db);
            }
        });
}

/// x * factor + offset, elementwise.
template <class T>
Var<T> affine(const Var<T>& x, double factor, double offset) {
    return detail::elementwise(
        x, [=](T v) { return static_cast<T>(v * factor + offset); },
        [=](T, T) { return static_cast<T>(factor); });
}

template <class T>
Var<T> scale(const Var<T>& x, double factor) {
    return affine(x, factor, 0.0);
}

template <class T>
Var<T> relu(const Var<T>& x) {
    return detail::elementwise(
        x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, double alpha) {
    const T a = static_cast<T>(alpha);
    return detail::elementwise(
        x, [a](T v) { return v > T{0} ? v : a * v; }, [a](T v, T) { return v > T{0} ? T{1} : a; });
}

/// Logistic function. Outputs are kept strictly inside (0, 1) even where the
/// storage type would round to an endpoint.
template <class T>
Var<T> sigmoid(const Var<T>& x) {
    const T lo = std::numeric_limits<T>::min();
    const T hi = std::nextafter(T{1}, T{0});
    return detail::elementwise(
        x,
        [=](T v) {
            const double d = v;
            const double s = d >= 0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
            return std::clamp(static_cast<T>(s), lo, hi);
        },
        [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> tanh(const Var<T>& x) {
    return detail::elementwise(
        x, [](T v) { return static_cast<T>(std::tanh(static_cast<double>(v))); },
        [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    BasicTensor<T> out = x.value().reshaped(std::move(shape));
    return x.tape().record(std::move(out), {x.id()},
                           [x](const BasicTensor<T>& g, std::span<const bool>, std::span<BasicTensor<T>> grads) {
                               grads[0] = g.reshaped(x.shape());
                           });
}

template <class T>
Var<T> sum(const Var<T>& x) {
    double acc = 0;
    for (T v : x.value().data()) acc += v;
    return x.tape().record(BasicTensor<T>::scalar(static_cast<T>(acc)), {x.id()},
                           [x](const BasicTensor<T>& g, std::span<const bool>, std::span<BasicTensor<T>> grads) {
                               grads[0] = BasicTensor<T>(x.shape(), g[0]);
                           });
}

template <class T>
Var<T> mean(const Var<T>& x) {
    double acc = 0;
    for (T v : x.value().data()) acc += v;
    const double n = static_cast<double>(x.value().size());
    return x.tape().record(BasicTensor<T>::scalar(static_cast<T>(acc / n)), {x.id()},
                           [x, n](const BasicTensor<T>& g, std::span<const bool>, std::span<BasicTensor<T>> grads) {
                               grads[0] = BasicTensor<T>(x.shape(), static_cast<T>(g[0] / n));
                           });
}

/// [m×k] · [k×n] -> [m×n]
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0])
        fail(Errc::shape_mismatch, "matmul: " + shape_string(as) + " · " + shape_string(bs));
    const std::size_t m = as[0], k = as[1], n = bs[1];
    std::vector<double> acc(m * n, 0.0);
    kernels::gemm_nn(m, n, k, a.value().data().data(), b.value().data().data(), acc.data());
    BasicTensor<T> out(Shape{m, n});
    kernels::store<T>(acc, out.data());
    return a.tape().record(
        std::move(out), {a.id(), b.id()},
        [a, b, m, k, n](const BasicTensor<T>& g, std::span<const bool> needs, std::span<BasicTensor<T>> grads) {
            if (needs[0]) {
                std::vector<double> da(m * k, 0.0);
                kernels::gemm_nt(m, k, n, g.data().data(), b.value().data().data(), da.data());
                BasicTensor<T> t(Shape{m, k});
                kernels::store<T>(da, t.data());
                grads[0] = std::move(t);
            }
            if (needs[1]) {
                std::vector<double> db(k * n, 0.0);
                kernels::gemm_tn(k, n, m, a.value().data().data(), g.data().data(), db.data());
                BasicTensor<T> t(Shape{k, n});
                kernels::store<T>(db, t.data());
                grads[1] = std::move(t);
            }
        });
}

/// x[N×F] + bias[F] broadcast over rows.
template <class T>
Var<T> add_row_bias(const Var<T>& x, const Var<T>& bias) {
    const auto& xs = x.shape();
    if (xs.size() != 2 || bias.shape() != Shape{xs[1]})
        fail(Errc::shape_mismatch, "add_row_bias: " + shape_string(xs) + " + " + shape_string(bias.shape()));
    const std::size_t rows = xs[0], cols = xs[1];
    BasicTensor<T> out = x.value();
    const auto& bv = bias.value();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
    return x.tape().record(
        std::move(out), {x.id(), bias.id()},
        [rows, cols](const BasicTensor<T>& g, std::span<const bool> needs, std::span<BasicTensor<T>> grads) {
            if (needs[0]) grads[0] = g;
            if (needs[1]) {
                std::vector<double> acc(cols, 0.0);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) acc[c] += g[r * cols + c];
                BasicTensor<T> db(Shape{cols});
                kernels::store<T>(acc, db.data());
                grads[1] = std::move(db);
            }
        });
}

/// x[N×C×H×W] + bias[C] broadcast over batch and space.
template <class T>
Var<T> add_channel_bias(const Var<T>& x, const Var<T>& bias) {
    const auto& xs = x.shape();
    if (xs.size() != 4 || bias.shape() != Shape{xs[1]})
        fail(Errc::shape_mismatch,
             "add_channel_bias: " + shape_string(xs) + " + " + shape_string(bias.shape()));
    const std::size_t batch = xs[0], channels = xs[1], plane = xs[2] * xs[3];
    BasicTensor<T> out = x.value();
    const auto& bv = bias.value();
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t c = 0; c < channels; ++c) {
            T* p = out.data().data() + (n * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) p[i] += bv[c];
        }
    return x.tape().record(
        std::move(out), {x.id(), bias.id()},
        [batch, channels, plane](const BasicTensor<T>& g, std::span<const bool> needs,
                                 std::span<BasicTensor<T>> grads) {
            if (needs[0]) grads[0] = g;
            if (needs[1]) {
                std::vector<double> acc(channels, 0.0);
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t c = 0; c < channels; ++c) {
                        const T* p = g.data().data() + (n * channels + c) * plane;
                        for (std::size_t i = 0; i < plane; ++i) acc[c] += p[i];
                    }
                BasicTensor<T> db(Shape{channels});
                kernels::store<T>(acc, db.data());
                grads[1] = std::move(db);
            }
        });
}

/// Strided, zero-padded cross-correlation.
/// input [N×C×H×W], kernels [F×C×kh×kw] -> [N×F×H'×W'],
/// H' = (H + 2·padding − kh) / stride + 1.
template <class T>
Var<T> conv2d(const Var<T>& input, const Var<T>& weight, std::size_t stride, std::size_t padding) {
    const auto& xs = input.shape();
    const auto& ks = weight.shape();
    if (xs.size() != 4 || ks.size() != 4)
        fail(Errc::shape_mismatch, "conv2d expects rank-4 input and kernels");
    if (xs[1] != ks[1])
        fail(Errc::shape_mismatch, "conv2d channel mismatch: input " + shape_string(xs) + ", kernels " +
                                       shape_string(ks));
    if (stride < 1) fail(Errc::invalid_shape, "conv2d stride must be >= 1");
    if (ks[2] > xs[2] + 2 * padding || ks[3] > xs[3] + 2 * padding)
        fail(Errc::invalid_shape, "conv2d kernel larger than padded input");

    kernels::ConvGeometry geo{xs[1], xs[2], xs[3], ks[2], ks[3], stride, padding,
                              detail::conv_out(xs[2], ks[2], stride, padding),
                              detail::conv_out(xs[3], ks[3], stride, padding)};
    const std::size_t batch = xs[0], filters = ks[0];
    const std::size_t image = geo.channels * geo.height * geo.width;
    const std::size_t patch = geo.patch(), positions = geo.positions();

    BasicTensor<T> out(Shape{batch, filters, geo.out_h, geo.out_w});
    std::vector<T> cols(patch * positions);
    std::vector<double> acc(filters * positions);
    for (std::size_t n = 0; n < batch; ++n) {
        kernels::im2col(input.value().data().data() + n * image, geo, cols.data());
        std::fill(acc.begin(), acc.end(), 0.0);
        kernels::gemm_nn(filters, positions, patch, weight.value().data().data(), cols.data(), acc.data());
        kernels::store<T>(acc, out.data().subspan(n * filters * positions, filters * positions));
    }

    return input.tape().record(
        std::move(out), {input.id(), weight.id()},
        [input, weight, geo, batch, filters, image](const BasicTensor<T>& g, std::span<const bool> needs,
                                                     std::span<BasicTensor<T>> grads) {
            const std::size_t patch = geo.patch(), positions = geo.positions();
            const T* kdata = weight.value().data().data();
            if (needs[0]) {
                BasicTensor<T> dx(input.shape());
                std::vector<double> dcols(patch * positions);
                std::vector<double> dimg(image);
                for (std::size_t n = 0; n < batch; ++n) {
                    std::fill(dcols.begin(), dcols.end(), 0.0);
                    std::fill(dimg.begin(), dimg.end(), 0.0);
                    kernels::gemm_tn(patch, positions, filters, kdata, g.data().data() + n * filters * positions,
                                     dcols.data());
                    kernels::col2im(dcols.data(), geo, dimg.data());
                    kernels::store<T>(dimg, dx.data().subspan(n * image, image));
                }
                grads[0] = std::move(dx);
            }
            if (needs[1]) {
                std::vector<T> cols(patch * positions);
                std::vector<double> acc(filters * patch, 0.0);
                for (std::size_t n = 0; n < batch; ++n) {
                    kernels::im2col(input.value().data().data() + n * image, geo, cols.data());
                    kernels::gemm_nt(filters, patch, positions, g.data().data() + n * filters * positions,
                                     cols.data(), acc.data());
                }
                BasicTensor<T> dk(weight.shape());
                kernels::store<T>(acc, dk.data());
                grads[1] = std::move(dk);
            }
        });
}

/// Adjoint of conv2d with the same kernel tensor.
/// input [N×F×H×W], kernels [F×C×kh×kw] -> [N×C×H'×W'],
/// H' = (H − 1)·stride − 2·padding + kh.
template <class T>
Var<T> transposed_conv2d(const Var<T>& input, const Var<T>& weight, std::size_t stride, std::size_t padding) {
    const auto& xs = input.shape();
    const auto& ks = weight.shape();
    if (xs.size() != 4 || ks.size() != 4)
        fail(Errc::shape_mismatch, "transposed_conv2d expects rank-4 input and kernels");
    if (xs[1] != ks[0])
        fail(Errc::shape_mismatch, "transposed_conv2d channel mismatch: input " + shape_string(xs) +
                                       ", kernels " + shape_string(ks));
    if (stride < 1) fail(Errc::invalid_shape, "transposed_conv2d stride must be >= 1");
    const std::size_t full_h = (xs[2] - 1) * stride + ks[2];
    const std::size_t full_w = (xs[3] - 1) * stride + ks[3];
    if (full_h <= 2 * padding || full_w <= 2 * padding)
        fail(Errc::invalid_shape, "transposed_conv2d padding consumes the whole output");

    kernels::ConvGeometry geo{ks[1], full_h - 2 * padding, full_w - 2 * padding, ks[2], ks[3], stride, padding,
                              xs[2], xs[3]};
    const std::size_t batch = xs[0], filters = ks[0];
    const std::size_t image = geo.channels * geo.height * geo.width;
    const std::size_t patch = geo.patch(), positions = geo.positions();

    BasicTensor<T> out(Shape{batch, geo.channels, geo.height, geo.width});
    std::vector<double> cols(patch * positions);
    std::vector<double> img(image);
    for (std::size_t n = 0; n < batch; ++n) {
        std::fill(cols.begin(), cols.end(), 0.0);
        std::fill(img.begin(), img.end(), 0.0);
        kernels::gemm_tn(patch, positions, filters, weight.value().data().data(),
                         input.value().data().data() + n * filters * positions, cols.data());
        kernels::col2im(cols.data(), geo, img.data());
        kernels::store<T>(img, out.data().subspan(n * image, image));
    }

    return input.tape().record(
        std::move(out), {input.id(), weight.id()},
        [input, weight, geo, batch, filters, image](const BasicTensor<T>& g, std::span<const bool> needs,
                                                     std::span<BasicTensor<T>> grads) {
            const std::size_t patch = geo.patch(), positions = geo.positions();
            std::vector<T> cols(patch * positions);
            BasicTensor<T> dx;
            if (needs[0]) dx = BasicTensor<T>(input.shape());
            std::vector<double> acc_x(filters * positions);
            std::vector<double> acc_k(needs[1] ? filters * patch : 0, 0.0);
            for (std::size_t n = 0; n < batch; ++n) {
                kernels::im2col(g.data().data() + n * image, geo, cols.data());
                if (needs[0]) {
                    std::fill(acc_x.begin(), acc_x.end(), 0.0);
                    kernels::gemm_nn(filters, positions, patch, weight.value().data().data(), cols.data(),
                                     acc_x.data());
                    kernels::store<T>(acc_x, dx.data().subspan(n * filters * positions, filters * positions));
                }
                if (needs[1])
                    kernels::gemm_nt(filters, patch, positions,
                                     input.value().data().data() + n * filters * positions, cols.data(),
                                     acc_k.data());
            }
            if (needs[0]) grads[0] = std::move(dx);
            if (needs[1]) {
                BasicTensor<T> dk(weight.shape());
                kernels::store<T>(acc_k, dk.data());
                grads[1] = std::move(dk);
            }
        });
}

/// Mean binary cross-entropy, −mean(t·log p + (1−t)·log(1−p)), with p clamped
/// to [1e-7, 1 − 1e-7]. The gradient is evaluated at the clamped probability.
template <class T>
Var<T> bce(const Var<T>& pred, const BasicTensor<T>& target) {
    detail::require_same_shape(pred.shape(), target.shape(), "bce");
    const auto& pv = pred.value();
    const double n = static_cast<double>(pv.size());
    double acc = 0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double p = std::clamp(static_cast<double>(pv[i]), kBceEpsilon, 1.0 - kBceEpsilon);
        const double t = target[i];
        acc += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return pred.tape().record(
        BasicTensor<T>::scalar(static_cast<T>(-acc / n)), {pred.id()},
        [pred, target, n](const BasicTensor<T>& g, std::span<const bool>, std::span<BasicTensor<T>> grads) {
            const auto& pv = pred.value();
            BasicTensor<T> dp(pv.shape());
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const double p = std::clamp(static_cast<double>(pv[i]), kBceEpsilon, 1.0 - kBceEpsilon);
                const double t = target[i];
                dp[i] = static_cast<T>(g[0] * -(t / p - (1.0 - t) / (1.0 - p)) / n);
            }
            grads[0] = std::move(dp);
        });
}

/// bce against a constant label for every element.
template <class T>
Var<T> bce(const Var<T>& pred, double label) {
    return bce(pred, BasicTensor<T>(pred.shape(), static_cast<T>(label)));
}

}  // namespace galc
