#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "galc/linalg.hpp"
#include "galc/models.hpp"

namespace galc {

/// Mean and covariance of a feature distribution.
struct GaussianStats {
    std::vector<double> mu;
    Matrix sigma;

    std::size_t dim() const { return mu.size(); }
};

/// Sample mean and unbiased (n − 1) covariance of the rows of `features`,
/// computed in two passes and symmetrized.
inline GaussianStats moments(const Matrix& features) {
    const std::size_t n = features.rows, d = features.cols;
    if (n < 2) fail(Errc::too_few_samples, "moments need at least 2 samples, got " + std::to_string(n));
    GaussianStats s;
    s.mu.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mu[j] += features(i, j);
    for (auto& m : s.mu) m /= static_cast<double>(n);

    Matrix centered = features;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) -= s.mu[j];
    s.sigma = Matrix(d, d);
    kernels::gemm_tn(d, d, n, centered.data.data(), centered.data.data(), s.sigma.data.data());
    for (auto& v : s.sigma.data) v /= static_cast<double>(n - 1);
    s.sigma = symmetrized(s.sigma);
    return s;
}

/// Fréchet distance between two Gaussians:
///   ‖μ_r − μ_g‖² + tr(Σ_r + Σ_g − 2·(Σ_r^½ Σ_g Σ_r^½)^½).
/// Rounding residue below zero is clamped; anything clearly negative is a
/// numeric failure.
inline double fid(const GaussianStats& r, const GaussianStats& g) {
    if (r.dim() != g.dim() || r.sigma.rows != r.dim() || g.sigma.rows != g.dim())
        fail(Errc::dimension_mismatch,
             "fid between " + std::to_string(r.dim()) + "-d and " + std::to_string(g.dim()) + "-d stats");
    double mean_term = 0;
    for (std::size_t i = 0; i < r.dim(); ++i) mean_term += (r.mu[i] - g.mu[i]) * (r.mu[i] - g.mu[i]);

    const Matrix root_r = sqrtm_psd(r.sigma);
    const Matrix inner = symmetrized(root_r * g.sigma * root_r);
    const double cross = sqrtm_psd(inner).trace();
    const double traces = r.sigma.trace() + g.sigma.trace();
    const double value = mean_term + traces - 2.0 * cross;
    if (value >= 0) return value;
    if (value >= -1e-8 * std::max(1.0, traces)) return 0.0;
    fail(Errc::numeric_failure, "fid evaluated to " + std::to_string(value));
}

/// Fraction of items where (pred >= threshold) equals the label. A prediction
/// exactly at the threshold counts as positive.
inline double accuracy(std::span<const float> predicted, std::span<const int> labels, double threshold = 0.5) {
    if (predicted.size() != labels.size())
        fail(Errc::shape_mismatch, "accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                                       std::to_string(labels.size()) + " labels");
    if (predicted.empty()) fail(Errc::empty_dataset, "accuracy of an empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        correct += static_cast<int>(predicted[i] >= threshold) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

/// 100 · (new − old) / old.
inline double relative_increase(double old_pct, double new_pct) {
    if (old_pct == 0.0) fail(Errc::division_by_zero, "relative increase from 0");
    if (old_pct < 0.0) fail(Errc::invalid_range, "relative increase needs a positive baseline");
    return 100.0 * (new_pct - old_pct) / old_pct;
}

enum class FeatureMode { raw_pixel, classifier_penultimate };

inline std::string_view feature_mode_name(FeatureMode m) {
    return m == FeatureMode::raw_pixel ? "raw_pixel" : "classifier_penultimate";
}

inline std::optional<FeatureMode> parse_feature_mode(std::string_view s) {
    if (s == "raw_pixel") return FeatureMode::raw_pixel;
    if (s == "classifier_penultimate") return FeatureMode::classifier_penultimate;
    return std::nullopt;
}

/// Frozen embedding used for FID.
struct FeatureExtractor {
    FeatureMode mode = FeatureMode::raw_pixel;
    std::optional<ModelParams> classifier;

    static FeatureExtractor raw_pixels() { return {}; }
    static FeatureExtractor penultimate_of(ModelParams classifier) {
        return {FeatureMode::classifier_penultimate, std::move(classifier)};
    }

    std::size_t dim(const Geometry& g) const {
        return mode == FeatureMode::raw_pixel ? g.pixels() : feature_dim(*classifier);
    }
};

/// images [N × C × H × W] → features [N × d].
inline Matrix extract_features(const Tensor& images, const FeatureExtractor& fx, std::size_t batch = 100) {
    if (images.rank() != 4) fail(Errc::shape_mismatch, "extract_features expects an image batch");
    const std::size_t n = images.dim(0);
    if (n < 2) fail(Errc::too_few_samples, "need at least 2 images for features");
    const std::size_t per_image = images.size() / n;

    if (fx.mode == FeatureMode::raw_pixel) {
        Matrix out(n, per_image);
        std::copy(images.data().begin(), images.data().end(), out.data.begin());
        return out;
    }
    if (!fx.classifier) fail(Errc::shape_mismatch, "penultimate features need a classifier");
    const std::size_t d = feature_dim(*fx.classifier);
    Matrix out(n, d);
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min(batch, n - start);
        Shape shape = images.shape();
        shape[0] = count;
        std::vector<float> chunk(images.data().begin() + static_cast<std::ptrdiff_t>(start * per_image),
                                 images.data().begin() + static_cast<std::ptrdiff_t>((start + count) * per_image));
        const Tensor feats = penultimate(*fx.classifier, Tensor(shape, std::move(chunk)));
        std::copy(feats.data().begin(), feats.data().end(), out.data.begin() + static_cast<std::ptrdiff_t>(start * d));
    }
    return out;
}

}  // namespace galc
