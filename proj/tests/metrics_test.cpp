#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "galc/metrics.hpp"
#include "support/expect_error.hpp"

using namespace galc;
using galc::testing::error_of;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    CounterRng rng(seed);
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(-1, 1);
    return m;
}

Matrix random_spd(std::size_t d, std::uint64_t seed) {
    const Matrix b = random_matrix(d, d, seed);
    return symmetrized(b.transposed() * b);
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
    return e;
}

// Oracle: square root through Eigen's self-adjoint solver.
Eigen::MatrixXd eigen_sqrt(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXd r = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * r.asDiagonal() * es.eigenvectors().transpose();
}

double eigen_fid(const GaussianStats& r, const GaussianStats& g) {
    Eigen::VectorXd dm = Eigen::Map<const Eigen::VectorXd>(r.mu.data(), r.dim()) -
                         Eigen::Map<const Eigen::VectorXd>(g.mu.data(), g.dim());
    Eigen::MatrixXd sr = to_eigen(r.sigma), sg = to_eigen(g.sigma);
    Eigen::MatrixXd root = eigen_sqrt(sr);
    Eigen::MatrixXd inner = root * sg * root;
    inner = 0.5 * (inner + inner.transpose());
    return dm.squaredNorm() + sr.trace() + sg.trace() - 2.0 * eigen_sqrt(inner).trace();
}

GaussianStats gaussian_1d(double mu, double var) { return {{mu}, Matrix::diagonal({var})}; }

}  // namespace

TEST(Moments, HandComputedPair) {
    Matrix f(2, 2);
    f.data = {0, 0, 2, 2};
    auto s = moments(f);
    EXPECT_EQ(s.mu, (std::vector<double>{1, 1}));
    EXPECT_EQ(s.sigma.data, (std::vector<double>{2, 2, 2, 2}));
}

TEST(Moments, IdenticalRowsHaveZeroCovariance) {
    Matrix f(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        f(i, 0) = 0.25;
        f(i, 1) = -3;
        f(i, 2) = 7;
    }
    for (double v : moments(f).sigma.data) EXPECT_EQ(v, 0.0);
}

TEST(Moments, MatchesStreamingOracle) {
    const Matrix f = random_matrix(60, 6, 5);
    // Welford's streaming mean / co-moment update.
    std::vector<double> mean(6, 0.0);
    Matrix co(6, 6);
    for (std::size_t n = 0; n < f.rows; ++n) {
        std::vector<double> delta(6);
        for (std::size_t j = 0; j < 6; ++j) delta[j] = f(n, j) - mean[j];
        for (std::size_t j = 0; j < 6; ++j) mean[j] += delta[j] / static_cast<double>(n + 1);
        for (std::size_t i = 0; i < 6; ++i)
            for (std::size_t j = 0; j < 6; ++j) co(i, j) += delta[i] * (f(n, j) - mean[j]);
    }
    auto s = moments(f);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(s.mu[j], mean[j], 1e-10);
    for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(s.sigma.data[i], co.data[i] / 59.0, 1e-10);
}

TEST(Moments, TooFewSamples) {
    EXPECT_EQ(error_of([] { moments(Matrix(1, 3)); }), Errc::too_few_samples);
}

TEST(SqrtmPsd, IdentityAndDiagonal) {
    EXPECT_EQ(sqrtm_psd(Matrix::identity(4)), Matrix::identity(4));
    auto s = sqrtm_psd(Matrix::diagonal({4, 9}));
    EXPECT_NEAR(s(0, 0), 2, 1e-15);
    EXPECT_NEAR(s(1, 1), 3, 1e-15);
    EXPECT_EQ(s(0, 1), 0.0);
}

TEST(SqrtmPsd, ReconstructsRandomSpd) {
    for (std::size_t d : {2u, 8u, 17u, 64u}) {
        const Matrix a = random_spd(d, 40 + d);
        const Matrix s = sqrtm_psd(a);
        EXPECT_LE((s * s - a).frobenius(), 1e-6 * (1 + a.frobenius())) << d;
        EXPECT_EQ(s, symmetrized(s));
        const Eigen::MatrixXd ref = eigen_sqrt(to_eigen(a));
        EXPECT_LE((to_eigen(s) - ref).norm(), 1e-8 * (1 + ref.norm())) << d;
    }
}

TEST(SqrtmPsd, RankDeficientInput) {
    const Matrix b = random_matrix(3, 10, 9);  // rank 3 in 10 dims
    const Matrix a = symmetrized(b.transposed() * b);
    const Matrix s = sqrtm_psd(a);
    EXPECT_LE((s * s - a).frobenius(), 1e-6 * (1 + a.frobenius()));
}

TEST(SqrtmPsd, RejectsAsymmetricInput) {
    Matrix a = Matrix::identity(3);
    a(0, 2) = 0.5;
    EXPECT_EQ(error_of([&] { sqrtm_psd(a); }), Errc::not_symmetric);
}

TEST(Fid, IdenticalStatsGiveZero) {
    const Matrix f = random_matrix(30, 5, 3);
    auto s = moments(f);
    EXPECT_LE(std::abs(fid(s, s)), 1e-8);
}

TEST(Fid, OneDimensionalClosedForms) {
    EXPECT_NEAR(fid(gaussian_1d(0, 1), gaussian_1d(1, 1)), 1.0, 1e-12);
    EXPECT_NEAR(fid(gaussian_1d(0, 4), gaussian_1d(0, 1)), 1.0, 1e-12);
    for (double m1 : {-2.0, 0.0, 1.5})
        for (double v1 : {0.25, 1.0, 4.0})
            for (double m2 : {-1.0, 2.0})
                for (double v2 : {0.25, 9.0}) {
                    const double expected = (m1 - m2) * (m1 - m2) + std::pow(std::sqrt(v1) - std::sqrt(v2), 2);
                    EXPECT_NEAR(fid(gaussian_1d(m1, v1), gaussian_1d(m2, v2)), expected, 1e-9);
                }
}

TEST(Fid, MatchesDenseEigenReference) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto a = moments(random_matrix(20, 4, 100 + seed));
        auto b = moments(random_matrix(20, 4, 200 + seed));
        const double ours = fid(a, b);
        EXPECT_NEAR(ours, eigen_fid(a, b), 1e-6);
        EXPECT_LE(std::abs(ours - fid(b, a)), 1e-6 * (1 + ours));
        EXPECT_GE(ours, 0.0);
    }
}

TEST(Fid, DimensionMismatch) {
    EXPECT_EQ(error_of([] { fid(gaussian_1d(0, 1), GaussianStats{{0, 0}, Matrix::identity(2)}); }),
              Errc::dimension_mismatch);
}

TEST(Accuracy, HandCounts) {
    std::vector<float> p{0.9f, 0.2f, 0.6f};
    std::vector<int> y{1, 0, 0};
    EXPECT_DOUBLE_EQ(accuracy(p, y), 2.0 / 3.0);
    std::vector<int> all{1, 0, 1};
    EXPECT_DOUBLE_EQ(accuracy(p, all), 1.0);
    std::vector<float> tie{0.5f};
    std::vector<int> pos{1};
    EXPECT_DOUBLE_EQ(accuracy(tie, pos), 1.0);
}

TEST(Accuracy, InvariantUnderJointPermutation) {
    CounterRng rng(8);
    std::vector<float> p(101);
    std::vector<int> y(101);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<float>(rng.next_unit());
        y[i] = static_cast<int>(rng.below(2));
    }
    const double base = accuracy(p, y);
    std::vector<std::size_t> idx(p.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int round = 0; round < 10; ++round) {
        rng.shuffle(std::span<std::size_t>(idx));
        std::vector<float> pp;
        std::vector<int> yy;
        for (auto i : idx) {
            pp.push_back(p[i]);
            yy.push_back(y[i]);
        }
        EXPECT_DOUBLE_EQ(accuracy(pp, yy), base);
    }
}

TEST(RelativeIncrease, TableArithmetic) {
    EXPECT_EQ(relative_increase(80.00, 87.00), 8.75);
    EXPECT_EQ(relative_increase(50, 75), 50.0);
    EXPECT_EQ(relative_increase(63.2, 63.2), 0.0);
    EXPECT_EQ(error_of([] { relative_increase(0, 10); }), Errc::division_by_zero);
}

TEST(ExtractFeatures, RawPixelsFlatten) {
    Tensor images(Shape{2, 3, 2, 2});
    for (std::size_t i = 0; i < images.size(); ++i) images[i] = static_cast<float>(i) / 24.0f;
    auto f = extract_features(images, FeatureExtractor::raw_pixels());
    ASSERT_EQ(f.rows, 2u);
    ASSERT_EQ(f.cols, 12u);
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(f(1, j), images[12 + j]);
    EXPECT_EQ(extract_features(images, FeatureExtractor::raw_pixels()), f);
    EXPECT_EQ(error_of([] { extract_features(Tensor(Shape{1, 1, 2, 2}), FeatureExtractor::raw_pixels()); }),
              Errc::too_few_samples);
}

TEST(ExtractFeatures, PenultimateDimensionMatchesClassifier) {
    auto clf = build_classifier({3, 16, 16}, 3);
    auto fx = FeatureExtractor::penultimate_of(clf);
    auto images = random_uniform(Shape{150, 3, 16, 16}, 0, 1, 4);
    auto f = extract_features(images, fx);
    EXPECT_EQ(f.rows, 150u);
    EXPECT_EQ(f.cols, fx.dim(clf.geometry));
    EXPECT_EQ(extract_features(images, fx), f);
}
