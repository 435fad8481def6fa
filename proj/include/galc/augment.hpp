#pragma once

#include <cmath>
#include <map>
#include <string>

#include "galc/data.hpp"
#include "galc/gan.hpp"

namespace galc {

enum class AugmentMode {
    per_class,   // every class grows by the ratio
    tumor_only,  // only label 1 grows, by ratio · |F_o|
};

inline std::string_view augment_mode_name(AugmentMode m) {
    return m == AugmentMode::per_class ? "per_class" : "tumor_only";
}

inline std::optional<AugmentMode> parse_augment_mode(std::string_view s) {
    if (s == "per_class") return AugmentMode::per_class;
    if (s == "tumor_only") return AugmentMode::tumor_only;
    return std::nullopt;
}

inline std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

/// Number of synthetic items to add for each label.
inline std::array<std::size_t, 2> synthetic_counts(const std::array<std::size_t, 2>& counts, double ratio,
                                                   AugmentMode mode) {
    if (!(ratio >= 0) || !std::isfinite(ratio)) fail(Errc::invalid_range, "augmentation ratio must be >= 0");
    if (mode == AugmentMode::tumor_only)
        return {0, round_half_up(ratio * static_cast<double>(counts[0] + counts[1]))};
    return {round_half_up(ratio * static_cast<double>(counts[0])), round_half_up(ratio * static_cast<double>(counts[1]))};
}

/// F_a: the real items of F_o unchanged, followed by generated items for each
/// class, each drawn from that class's generator.
inline PatchDataset augment(const PatchDataset& f_o, const std::map<int, ModelParams>& generators, double ratio,
                            std::uint64_t seed, AugmentMode mode = AugmentMode::per_class) {
    const auto extra = synthetic_counts(f_o.counts(), ratio, mode);
    PatchDataset f_a = f_o;
    for (int label : {0, 1}) {
        const std::size_t k = extra[static_cast<std::size_t>(label)];
        if (k == 0) continue;
        auto it = generators.find(label);
        if (it == generators.end())
            fail(Errc::missing_generator, "no generator for class " + std::to_string(label));
        if (!(it->second.geometry == f_o.geometry()))
            fail(Errc::geometry_mismatch, "generator for class " + std::to_string(label) + " makes " +
                                              it->second.geometry.str() + " images, dataset is " + f_o.geometry().str());
        const Tensor images = sample(it->second, k, derive_seed(seed, "augment/class" + std::to_string(label)));
        const std::size_t per = f_o.geometry().pixels();
        for (std::size_t i = 0; i < k; ++i) {
            auto first = images.data().begin() + static_cast<std::ptrdiff_t>(i * per);
            f_a.add(Tensor(f_o.geometry().image_shape(), std::vector<float>(first, first + static_cast<std::ptrdiff_t>(per))),
                    label, Provenance::synthetic, indexed_name("gan_", i));
        }
    }
    return f_a;
}

}  // namespace galc
