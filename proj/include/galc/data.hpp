#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "galc/error.hpp"
#include "galc/models.hpp"
#include "galc/png.hpp"
#include "galc/rng.hpp"
#include "galc/tensor.hpp"

namespace galc {

enum class Provenance { real, synthetic };

inline std::string_view provenance_name(Provenance p) { return p == Provenance::real ? "real" : "synthetic"; }

/// Labelled patches of one geometry. Label 0 is non-tumor, 1 is tumor.
class PatchDataset {
   public:
    PatchDataset() = default;
    explicit PatchDataset(Geometry geometry) : geometry_(geometry) {}

    void add(Tensor image, int label, Provenance provenance, std::string name) {
        if (label != 0 && label != 1) fail(Errc::invalid_range, "label must be 0 or 1, got " + std::to_string(label));
        if (image.shape() != geometry_.image_shape())
            fail(Errc::geometry_mismatch, "item '" + name + "' is " + shape_string(image.shape()) +
                                              ", dataset is " + geometry_.str());
        images_.push_back(std::move(image));
        labels_.push_back(label);
        provenance_.push_back(provenance);
        names_.push_back(std::move(name));
        counts_[static_cast<std::size_t>(label)] += 1;
    }

    const Geometry& geometry() const { return geometry_; }
    std::size_t size() const { return images_.size(); }
    bool empty() const { return images_.empty(); }

    const Tensor& image(std::size_t i) const { return images_.at(i); }
    int label(std::size_t i) const { return labels_.at(i); }
    Provenance provenance(std::size_t i) const { return provenance_.at(i); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<int>& labels() const { return labels_; }

    /// Items per class, indexed by label.
    const std::array<std::size_t, 2>& counts() const { return counts_; }
    std::size_t count(int label) const { return counts_.at(static_cast<std::size_t>(label)); }

    /// Stacks the selected items into an [N × C × H × W] batch.
    Tensor batch(std::span<const std::size_t> indices) const {
        if (indices.empty()) fail(Errc::empty_batch, "cannot stack an empty batch");
        Shape shape{indices.size(), geometry_.channels, geometry_.height, geometry_.width};
        std::vector<float> data;
        data.reserve(shape_size(shape));
        for (auto i : indices) {
            const auto& img = images_.at(i).values();
            data.insert(data.end(), img.begin(), img.end());
        }
        return Tensor(std::move(shape), std::move(data));
    }

    Tensor all_images() const { return batch(indices_where([](int) { return true; })); }

    /// All images carrying `label`, as one batch.
    Tensor class_images(int label) const {
        return batch(indices_where([label](int l) { return l == label; }));
    }

    template <class Pred>
    std::vector<std::size_t> indices_where(Pred pred) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (pred(labels_[i])) out.push_back(i);
        return out;
    }

    PatchDataset subset(std::span<const std::size_t> indices) const {
        PatchDataset out(geometry_);
        for (auto i : indices) out.add(images_.at(i), labels_.at(i), provenance_.at(i), names_.at(i));
        return out;
    }

    friend bool operator==(const PatchDataset&, const PatchDataset&) = default;

   private:
    Geometry geometry_;
    std::vector<Tensor> images_;
    std::vector<int> labels_;
    std::vector<Provenance> provenance_;
    std::vector<std::string> names_;
    std::array<std::size_t, 2> counts_{0, 0};
};

struct SplitSpec {
    double train_fraction = 0.8;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const {
        if (!(train_fraction > 0) || !(test_fraction > 0) || std::abs(train_fraction + test_fraction - 1.0) > 1e-9)
            fail(Errc::invalid_range, "split fractions must be positive and sum to 1");
    }
};

struct SplitResult {
    PatchDataset train;
    PatchDataset test;
};

/// Seeded train/test partition. Each side keeps the original item order.
inline SplitResult split(const PatchDataset& ds, const SplitSpec& spec) {
    spec.validate();
    CounterRng rng(spec.seed);
    std::vector<std::size_t> train_idx, test_idx;

    auto take = [&](std::vector<std::size_t> pool, bool keep_both_sides) {
        rng.shuffle(std::span<std::size_t>(pool));
        auto k = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(pool.size())));
        if (keep_both_sides) k = std::clamp<std::size_t>(k, 1, pool.size() - 1);
        train_idx.insert(train_idx.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        test_idx.insert(test_idx.end(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
    };

    if (spec.stratified) {
        for (int label : {0, 1}) {
            auto pool = ds.indices_where([label](int l) { return l == label; });
            if (pool.empty()) continue;
            if (pool.size() < 2)
                fail(Errc::class_too_small, "class " + std::to_string(label) + " has " +
                                                std::to_string(pool.size()) + " item(s); stratified split needs 2");
            take(std::move(pool), true);
        }
    } else {
        take(ds.indices_where([](int) { return true; }), false);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    return {ds.subset(train_idx), ds.subset(test_idx)};
}

inline std::string indexed_name(std::string_view prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu.png", i);
    return std::string(prefix) + buf;
}

namespace detail {

// Smooth blobs: a sum of a few isotropic Gaussians on a mid-grey field.
inline void paint_blobs(Tensor& img, const Geometry& g, CounterRng& rng) {
    const double h = static_cast<double>(g.height), w = static_cast<double>(g.width);
    const int blobs = 2 + static_cast<int>(rng.below(2));
    for (int b = 0; b < blobs; ++b) {
        const double cy = rng.uniform(0.2, 0.8) * h, cx = rng.uniform(0.2, 0.8) * w;
        const double sigma = rng.uniform(0.15, 0.3) * std::min(h, w);
        const double amp = rng.uniform(0.25, 0.45) * (rng.below(2) ? 1.0 : -1.0);
        for (std::size_t c = 0; c < g.channels; ++c) {
            const double tint = 1.0 - 0.15 * static_cast<double>(c);
            for (std::size_t y = 0; y < g.height; ++y)
                for (std::size_t x = 0; x < g.width; ++x) {
                    const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                    img[(c * g.height + y) * g.width + x] +=
                        static_cast<float>(tint * amp * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)));
                }
        }
    }
}

// Oriented sinusoidal stripes with a random period, angle and phase.
inline void paint_stripes(Tensor& img, const Geometry& g, CounterRng& rng) {
    const double theta = rng.uniform(0, std::numbers::pi);
    const double period = rng.uniform(3.0, 5.0);
    const double phase = rng.uniform(0, 2 * std::numbers::pi);
    const double amp = rng.uniform(0.2, 0.35);
    const double ky = std::sin(theta) * 2 * std::numbers::pi / period;
    const double kx = std::cos(theta) * 2 * std::numbers::pi / period;
    for (std::size_t c = 0; c < g.channels; ++c) {
        const double tint = 1.0 - 0.15 * static_cast<double>(c);
        for (std::size_t y = 0; y < g.height; ++y)
            for (std::size_t x = 0; x < g.width; ++x)
                img[(c * g.height + y) * g.width + x] += static_cast<float>(
                    tint * amp * std::sin(ky * static_cast<double>(y) + kx * static_cast<double>(x) + phase));
    }
}

}  // namespace detail

inline constexpr double kSyntheticNoise = 0.04;

/// Desk-scale two-texture stand-in for tissue patches: class 0 holds smooth
/// Gaussian blobs, class 1 oriented stripes, both with additive pixel noise.
/// Items are ordered class 0 first.
inline PatchDataset generate_synthetic_dataset(std::size_t n_per_class, const Geometry& geometry, std::uint64_t seed) {
    if (n_per_class < 1) fail(Errc::invalid_range, "n_per_class must be at least 1");
    check_shape(geometry.image_shape());
    PatchDataset ds(geometry);
    for (int label : {0, 1}) {
        for (std::size_t i = 0; i < n_per_class; ++i) {
            // One stream per item keeps items independent of n_per_class.
            CounterRng rng(CounterRng::mix(derive_seed(seed, label == 0 ? "blobs" : "stripes") + i));
            Tensor img(geometry.image_shape(), 0.5f);
            if (label == 0)
                detail::paint_blobs(img, geometry, rng);
            else
                detail::paint_stripes(img, geometry, rng);
            for (auto& v : img.data())
                v = std::clamp(v + static_cast<float>(kSyntheticNoise * rng.normal()), 0.0f, 1.0f);
            ds.add(std::move(img), label, Provenance::real, indexed_name(label == 0 ? "blob_" : "stripe_", i));
        }
    }
    return ds;
}

/// Loads root/0/*.png and root/1/*.png, ordered by (label, filename).
inline PatchDataset load_patch_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<std::pair<int, fs::path>> files;
    for (int label : {0, 1}) {
        const fs::path dir = root / std::to_string(label);
        if (!fs::is_directory(dir)) fail(Errc::missing_class_directory, "missing class directory '" + dir.string() + "'");
        std::vector<fs::path> found;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto ext = entry.path().extension().string();
            if (entry.is_regular_file() && (ext == ".png" || ext == ".PNG")) found.push_back(entry.path());
        }
        std::sort(found.begin(), found.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
        for (auto& p : found) files.emplace_back(label, std::move(p));
    }
    if (files.empty()) fail(Errc::empty_dataset, "no PNG files under '" + root.string() + "'");

    PatchDataset ds;
    bool first = true;
    for (const auto& [label, path] : files) {
        Tensor img = read_png(path);
        const Geometry g{img.dim(0), img.dim(1), img.dim(2)};
        if (first) {
            ds = PatchDataset(g);
            first = false;
        } else if (!(g == ds.geometry())) {
            fail(Errc::mixed_geometry, "'" + path.string() + "' is " + g.str() + " but earlier files are " +
                                           ds.geometry().str());
        }
        ds.add(std::move(img), label, Provenance::real, path.filename().string());
    }
    return ds;
}

/// Writes the loadable directory layout plus manifest.csv
/// (`filename,label,provenance`).
inline void export_dataset(const PatchDataset& ds, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::error_code ec;
    for (int label : {0, 1}) {
        fs::create_directories(root / std::to_string(label), ec);
        if (ec) fail(Errc::io_error, "cannot create '" + (root / std::to_string(label)).string() + "': " + ec.message());
    }
    std::set<std::pair<int, std::string>> seen;
    std::ofstream manifest(root / "manifest.csv", std::ios::binary);
    if (!manifest) fail(Errc::io_error, "cannot write manifest in '" + root.string() + "'");
    manifest << "filename,label,provenance\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!seen.emplace(ds.label(i), ds.name(i)).second)
            fail(Errc::io_error, "duplicate file name '" + ds.name(i) + "' in class " + std::to_string(ds.label(i)));
        write_png(ds.image(i), root / std::to_string(ds.label(i)) / ds.name(i));
        manifest << ds.name(i) << ',' << ds.label(i) << ',' << provenance_name(ds.provenance(i)) << '\n';
    }
    if (!manifest.flush()) fail(Errc::io_error, "failed writing manifest in '" + root.string() + "'");
}

}  // namespace galc
