#include <gtest/gtest.h>

#include <cmath>

#include "galc/optim.hpp"

using namespace galc;

namespace {

using DTensor = BasicTensor<double>;

// Independent scalar recurrences used as oracles.
struct ScalarAdam {
    double m = 0, v = 0, lr, b1, b2, eps;
    int t = 0;
    double step(double theta, double g) {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

double squared_norm(const Tensor& t) {
    double s = 0;
    for (float v : t.data()) s += double(v) * v;
    return s;
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
    std::vector<DTensor> params{DTensor(Shape{3}, std::vector<double>{1, -2, 3})};
    std::vector<DTensor> grads{DTensor(Shape{3})};
    auto [next, state] = adam_step(params, grads, BasicAdamState<double>::fresh(params));
    EXPECT_EQ(next[0], params[0]);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepHandValue) {
    std::vector<DTensor> params{DTensor::scalar(1.0)};
    std::vector<DTensor> grads{DTensor::scalar(1.0)};
    AdamHyper h{0.001, 0.5, 0.999, 1e-8};
    auto [next, state] = adam_step(params, grads, BasicAdamState<double>::fresh(params, h));
    // m̂ = v̂ = 1 at t = 1
    EXPECT_NEAR(next[0][0], 1.0 - 0.001 / (1.0 + 1e-8), 1e-12);
    EXPECT_NEAR(next[0][0], 0.999, 1e-9);
    EXPECT_GE(state.v[0][0], 0.0);
}

TEST(Adam, MatchesScalarReferenceOnQuadratic) {
    AdamHyper h{0.1, 0.5, 0.999, 1e-8};
    std::vector<DTensor> params{DTensor::scalar(5.0)};
    auto state = BasicAdamState<double>::fresh(params, h);
    ScalarAdam ref{0, 0, h.lr, h.beta1, h.beta2, h.eps};
    double theta = 5.0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<DTensor> grads{DTensor::scalar(2 * params[0][0])};
        std::tie(params, state) = adam_step(std::move(params), grads, std::move(state));
        theta = ref.step(theta, 2 * theta);
        ASSERT_NEAR(params[0][0], theta, 1e-12);
    }
    EXPECT_LT(std::abs(params[0][0]), 0.01);
    EXPECT_EQ(state.step, 1000u);
}

TEST(Adam, FirstStepMagnitudeBoundedByLearningRate) {
    auto g = random_uniform<double>({64}, -100, 100, 3);
    std::vector<DTensor> params{DTensor(Shape{64})};
    AdamHyper h{0.01, 0.5, 0.999, 1e-8};
    auto [next, state] = adam_step(params, std::vector<DTensor>{g}, BasicAdamState<double>::fresh(params, h));
    for (double v : next[0].data()) EXPECT_LE(std::abs(v), h.lr * (1 + 1e-9));
}

TEST(Adam, ShapeMismatch) {
    std::vector<DTensor> params{DTensor(Shape{3})};
    std::vector<DTensor> grads{DTensor(Shape{2})};
    EXPECT_THROW(adam_step(params, grads, BasicAdamState<double>::fresh(params)), Error);
}

TEST(Adagrad, ZeroGradientLeavesEverythingUnchanged) {
    std::vector<DTensor> params{DTensor(Shape{2}, std::vector<double>{0.5, -0.5})};
    std::vector<DTensor> grads{DTensor(Shape{2})};
    auto [next, state] = adagrad_step(params, grads, BasicAdagradState<double>::fresh(params));
    EXPECT_EQ(next[0], params[0]);
    EXPECT_EQ(state.accum[0], DTensor(Shape{2}));
}

TEST(Adagrad, FirstStepHandValue) {
    std::vector<DTensor> params{DTensor::scalar(0.0)};
    std::vector<DTensor> grads{DTensor::scalar(2.0)};
    auto [next, state] = adagrad_step(params, grads, BasicAdagradState<double>::fresh(params, {0.1, 1e-8}));
    EXPECT_DOUBLE_EQ(state.accum[0][0], 4.0);
    EXPECT_NEAR(next[0][0], -0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
    EXPECT_NEAR(next[0][0], -0.1, 1e-9);
}

TEST(Adagrad, StepsShrinkUnderConstantGradient) {
    std::vector<DTensor> params{DTensor::scalar(0.0)};
    auto state = BasicAdagradState<double>::fresh(params);
    std::vector<DTensor> grads{DTensor::scalar(2.0)};
    double prev_theta = 0, prev_step = INFINITY, prev_accum = 0;
    for (int i = 0; i < 20; ++i) {
        std::tie(params, state) = adagrad_step(std::move(params), grads, std::move(state));
        const double step = std::abs(params[0][0] - prev_theta);
        EXPECT_LT(step, prev_step);
        EXPECT_GE(state.accum[0][0], prev_accum);
        prev_step = step;
        prev_theta = params[0][0];
        prev_accum = state.accum[0][0];
    }
}

TEST(Optimizers, DriveQuadraticDownAtDefaultRates) {
    const Tensor start = random_uniform(Shape{10}, -1.0, 1.0, 2024);
    const double f0 = squared_norm(start);

    std::vector<Tensor> adam_params{start};
    auto adam = AdamState::fresh(adam_params);
    std::vector<Tensor> ada_params{start};
    auto ada = AdagradState::fresh(ada_params);
    for (int i = 0; i < 10000; ++i) {
        std::vector<Tensor> g1{adam_params[0]}, g2{ada_params[0]};
        for (auto& v : g1[0].data()) v *= 2;
        for (auto& v : g2[0].data()) v *= 2;
        std::tie(adam_params, adam) = adam_step(std::move(adam_params), g1, std::move(adam));
        std::tie(ada_params, ada) = adagrad_step(std::move(ada_params), g2, std::move(ada));
    }
    EXPECT_LT(squared_norm(adam_params[0]), 1e-4 * f0);
    EXPECT_LT(squared_norm(ada_params[0]), 1e-4 * f0);
}
