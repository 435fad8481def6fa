#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "galc/tensor.hpp"

namespace galc {

struct AdamHyper {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct BasicAdamState {
    std::uint64_t step = 0;
    std::vector<BasicTensor<T>> m;
    std::vector<BasicTensor<T>> v;
    AdamHyper hyper;

    static BasicAdamState fresh(std::span<const BasicTensor<T>> params, AdamHyper hyper = {}) {
        BasicAdamState s;
        s.hyper = hyper;
        for (const auto& p : params) {
            s.m.emplace_back(p.shape());
            s.v.emplace_back(p.shape());
        }
        return s;
    }
};

struct AdagradHyper {
    double lr = 0.01;
    double eps = 1e-8;
};

template <class T>
struct BasicAdagradState {
    std::vector<BasicTensor<T>> accum;
    AdagradHyper hyper;

    static BasicAdagradState fresh(std::span<const BasicTensor<T>> params, AdagradHyper hyper = {}) {
        BasicAdagradState s;
        s.hyper = hyper;
        for (const auto& p : params) s.accum.emplace_back(p.shape());
        return s;
    }
};

using AdamState = BasicAdamState<float>;
using AdagradState = BasicAdagradState<float>;

namespace detail {

template <class T>
void check_parallel(std::span<const BasicTensor<T>> params, const std::vector<BasicTensor<T>>& grads,
                    std::span<const BasicTensor<T>> slots, const char* who) {
    if (params.size() != grads.size() || params.size() != slots.size())
        fail(Errc::shape_mismatch, std::string(who) + ": parameter, gradient and state counts differ");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].shape() != grads[i].shape() || params[i].shape() != slots[i].shape())
            fail(Errc::shape_mismatch, std::string(who) + ": shape disagreement at parameter " + std::to_string(i));
}

}  // namespace detail

/// One bias-corrected Adam update:
///   m ← β1·m + (1−β1)·g,  v ← β2·v + (1−β2)·g²,
///   θ ← θ − lr · (m / (1−β1^t)) / (√(v / (1−β2^t)) + eps).
template <class T>
std::pair<std::vector<BasicTensor<T>>, BasicAdamState<T>> adam_step(std::vector<BasicTensor<T>> params,
                                                                    const std::vector<BasicTensor<T>>& grads,
                                                                    BasicAdamState<T> state) {
    detail::check_parallel<T>(params, grads, state.m, "adam_step");
    detail::check_parallel<T>(params, grads, state.v, "adam_step");
    const auto& h = state.hyper;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(h.beta1, t);
    const double correct2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        auto g = grads[i].data();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = g[k];
            const double mk = h.beta1 * m[k] + (1.0 - h.beta1) * gk;
            const double vk = h.beta2 * v[k] + (1.0 - h.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double update = h.lr * (mk / correct1) / (std::sqrt(vk / correct2) + h.eps);
            theta[k] = static_cast<T>(theta[k] - update);
        }
    }
    return {std::move(params), std::move(state)};
}

/// One Adagrad update: accum ← accum + g²,  θ ← θ − lr·g / (√accum + eps).
template <class T>
std::pair<std::vector<BasicTensor<T>>, BasicAdagradState<T>> adagrad_step(std::vector<BasicTensor<T>> params,
                                                                          const std::vector<BasicTensor<T>>& grads,
                                                                          BasicAdagradState<T> state) {
    detail::check_parallel<T>(params, grads, state.accum, "adagrad_step");
    const auto& h = state.hyper;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i].data();
        auto acc = state.accum[i].data();
        auto g = grads[i].data();
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = g[k];
            const double ak = static_cast<double>(acc[k]) + gk * gk;
            acc[k] = static_cast<T>(ak);
            theta[k] = static_cast<T>(theta[k] - h.lr * gk / (std::sqrt(ak) + h.eps));
        }
    }
    return {std::move(params), std::move(state)};
}

}  // namespace galc
