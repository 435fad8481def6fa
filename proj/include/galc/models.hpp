#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "galc/autograd.hpp"
#include "galc/ops.hpp"
#include "galc/rng.hpp"
#include "galc/tensor.hpp"

namespace galc {

/// Image geometry of a patch, channels-first.
struct Geometry {
    std::size_t channels = 3;
    std::size_t height = 50;
    std::size_t width = 50;

    Shape image_shape() const { return {channels, height, width}; }
    std::size_t pixels() const { return channels * height * width; }
    std::string str() const {
        return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
    }
    friend bool operator==(const Geometry&, const Geometry&) = default;
};

enum class Architecture { generator, discriminator, classifier };

inline std::string_view architecture_tag(Architecture a) {
    switch (a) {
        case Architecture::generator: return "generator";
        case Architecture::discriminator: return "discriminator";
        case Architecture::classifier: return "classifier";
    }
    return "unknown";
}

inline Architecture parse_architecture(std::string_view tag) {
    if (tag == "generator") return Architecture::generator;
    if (tag == "discriminator") return Architecture::discriminator;
    if (tag == "classifier") return Architecture::classifier;
    fail(Errc::corrupt_manifest, "unknown architecture tag '" + std::string(tag) + "'");
}

/// Named parameter tensors of one network, in declaration order, plus the
/// integer attributes its forward pass needs.
class ModelParams {
   public:
    Architecture arch = Architecture::generator;
    Geometry geometry;
    std::map<std::string, std::int64_t> attributes;

    void add(std::string name, Tensor value) {
        for (const auto& [n, _] : entries_)
            if (n == name) fail(Errc::shape_mismatch, "duplicate parameter name '" + name + "'");
        entries_.emplace_back(std::move(name), std::move(value));
    }

    const Tensor& at(std::string_view name) const { return entries_[index_of(name)].second; }
    Tensor& at(std::string_view name) { return entries_[index_of(name)].second; }

    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_.at(i).first; }
    const Tensor& tensor(std::size_t i) const { return entries_.at(i).second; }

    std::vector<Tensor> tensors() const {
        std::vector<Tensor> out;
        for (const auto& [_, t] : entries_) out.push_back(t);
        return out;
    }

    void set_tensors(std::vector<Tensor> values) {
        if (values.size() != entries_.size()) fail(Errc::shape_mismatch, "parameter count changed");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (values[i].shape() != entries_[i].second.shape())
                fail(Errc::shape_mismatch, "parameter '" + entries_[i].first + "' changed shape");
            entries_[i].second = std::move(values[i]);
        }
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [_, t] : entries_) n += t.size();
        return n;
    }

    std::int64_t attribute(const std::string& key) const {
        auto it = attributes.find(key);
        if (it == attributes.end()) fail(Errc::corrupt_manifest, "model is missing attribute '" + key + "'");
        return it->second;
    }

    friend bool operator==(const ModelParams& a, const ModelParams& b) {
        return a.arch == b.arch && a.geometry == b.geometry && a.attributes == b.attributes &&
               a.entries_ == b.entries_;
    }

   private:
    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].first == name) return i;
        fail(Errc::shape_mismatch, "no parameter named '" + std::string(name) + "'");
    }

    std::vector<std::pair<std::string, Tensor>> entries_;
};

struct GeneratorConfig {
    std::size_t latent_dim = 64;
    std::size_t base_channels = 16;
    std::size_t kernel = 4;  // padding is (kernel - 2) / 2 so stride 2 doubles the size exactly
    Geometry output;
};

struct ConvNetConfig {
    std::size_t channels1 = 16;
    std::size_t channels2 = 32;
    std::size_t hidden = 0;  // 0: no hidden dense layer
    std::size_t kernel = 4;
    std::size_t padding = 1;
};

inline constexpr double kLeakySlope = 0.2;

inline ConvNetConfig default_discriminator_config() { return {}; }
inline ConvNetConfig default_classifier_config() { return {8, 16, 32, 4, 1}; }

namespace detail {

/// Glorot-uniform in [−s, s], s = √(6 / (fan_in + fan_out)).
inline Tensor glorot(const Shape& shape, std::size_t fan_in, std::size_t fan_out, CounterRng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return random_uniform<float>(shape, -s, s, rng);
}

inline std::size_t stride2_out(std::size_t in, std::size_t k, std::size_t pad) {
    if (in + 2 * pad < k) return 0;
    return (in + 2 * pad - k) / 2 + 1;
}

struct ConvNetShape {
    std::size_t h1, w1, h2, w2;
};

inline ConvNetShape convnet_shape(const Geometry& g, std::size_t k, std::size_t pad) {
    ConvNetShape s{};
    s.h1 = stride2_out(g.height, k, pad);
    s.w1 = stride2_out(g.width, k, pad);
    s.h2 = s.h1 ? stride2_out(s.h1, k, pad) : 0;
    s.w2 = s.w1 ? stride2_out(s.w1, k, pad) : 0;
    if (s.h2 == 0 || s.w2 == 0)
        fail(Errc::geometry_mismatch, "geometry " + g.str() + " too small for two stride-2 convolutions");
    return s;
}

inline void check_geometry(const Geometry& g) {
    if (g.channels == 0 || g.height == 0 || g.width == 0)
        fail(Errc::geometry_mismatch, "geometry " + g.str() + " has a zero dimension");
}

inline ModelParams build_convnet(Architecture arch, const Geometry& geometry, const ConvNetConfig& cfg,
                                 std::uint64_t seed) {
    check_geometry(geometry);
    if (cfg.channels1 == 0 || cfg.channels2 == 0 || cfg.kernel == 0)
        fail(Errc::geometry_mismatch, "convolution widths must be positive");
    const auto s = convnet_shape(geometry, cfg.kernel, cfg.padding);
    const std::size_t k = cfg.kernel, c = geometry.channels;
    const std::size_t flat = cfg.channels2 * s.h2 * s.w2;

    CounterRng rng(seed);
    ModelParams m;
    m.arch = arch;
    m.geometry = geometry;
    m.attributes = {{"channels1", cfg.channels1},
                    {"channels2", cfg.channels2},
                    {"hidden", cfg.hidden},
                    {"kernel", cfg.kernel},
                    {"padding", cfg.padding}};
    m.add("conv1.weight", glorot({cfg.channels1, c, k, k}, c * k * k, cfg.channels1 * k * k, rng));
    m.add("conv1.bias", Tensor(Shape{cfg.channels1}));
    m.add("conv2.weight",
          glorot({cfg.channels2, cfg.channels1, k, k}, cfg.channels1 * k * k, cfg.channels2 * k * k, rng));
    m.add("conv2.bias", Tensor(Shape{cfg.channels2}));
    std::size_t last = flat;
    if (cfg.hidden > 0) {
        m.add("hidden.weight", glorot({flat, cfg.hidden}, flat, cfg.hidden, rng));
        m.add("hidden.bias", Tensor(Shape{cfg.hidden}));
        last = cfg.hidden;
    }
    m.add("head.weight", glorot({last, 1}, last, 1, rng));
    m.add("head.bias", Tensor(Shape{1}));
    return m;
}

}  // namespace detail

/// Generator: dense projection → reshape (base × H/2 × W/2) → leaky_relu →
/// stride-2 transposed convolution → tanh rescaled to [0, 1].
inline ModelParams build_generator(const GeneratorConfig& cfg, std::uint64_t seed) {
    const Geometry& g = cfg.output;
    detail::check_geometry(g);
    if (g.height % 2 != 0 || g.width % 2 != 0)
        fail(Errc::geometry_mismatch, "generator needs even height and width, got " + g.str());
    if (cfg.kernel < 2 || cfg.kernel % 2 != 0)
        fail(Errc::geometry_mismatch, "generator kernel must be even and >= 2");
    if (cfg.latent_dim == 0 || cfg.base_channels == 0)
        fail(Errc::geometry_mismatch, "latent_dim and base_channels must be positive");
    const std::size_t h2 = g.height / 2, w2 = g.width / 2, k = cfg.kernel;
    const std::size_t projected = cfg.base_channels * h2 * w2;

    CounterRng rng(seed);
    ModelParams m;
    m.arch = Architecture::generator;
    m.geometry = g;
    m.attributes = {{"latent_dim", cfg.latent_dim}, {"base_channels", cfg.base_channels}, {"kernel", cfg.kernel}};
    m.add("project.weight", detail::glorot({cfg.latent_dim, projected}, cfg.latent_dim, projected, rng));
    m.add("project.bias", Tensor(Shape{projected}));
    m.add("upsample.weight", detail::glorot({cfg.base_channels, g.channels, k, k}, cfg.base_channels * k * k,
                                            g.channels * k * k, rng));
    m.add("upsample.bias", Tensor(Shape{g.channels}));
    return m;
}

/// Discriminator: conv s2 → leaky_relu → conv s2 → leaky_relu → dense → sigmoid.
inline ModelParams build_discriminator(const Geometry& geometry, std::uint64_t seed,
                                       const ConvNetConfig& cfg = default_discriminator_config()) {
    return detail::build_convnet(Architecture::discriminator, geometry, cfg, seed);
}

/// Tumor classifier: same trunk as the discriminator plus a hidden dense layer
/// whose activations serve as penultimate features.
inline ModelParams build_classifier(const Geometry& geometry, std::uint64_t seed,
                                    const ConvNetConfig& cfg = default_classifier_config()) {
    return detail::build_convnet(Architecture::classifier, geometry, cfg, seed);
}

/// Parameters of one model placed on a tape. Records which names a forward
/// pass touched.
template <class T>
class BoundParams {
   public:
    BoundParams(Tape<T>& tape, const ModelParams& model, bool trainable) {
        for (std::size_t i = 0; i < model.size(); ++i) {
            BasicTensor<T> value = model.tensor(i).template cast<T>();
            value.set_requires_grad(trainable);
            names_.push_back(model.name(i));
            vars_.push_back(tape.leaf(std::move(value)));
        }
        used_.assign(vars_.size(), false);
    }

    const Var<T>& operator[](std::string_view name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) {
                used_[i] = true;
                return vars_[i];
            }
        fail(Errc::shape_mismatch, "no bound parameter named '" + std::string(name) + "'");
    }

    const std::vector<Var<T>>& vars() const { return vars_; }

    bool all_used() const {
        for (bool u : used_)
            if (!u) return false;
        return true;
    }

    /// Gradients in declaration order, converted back to storage precision.
    std::vector<Tensor> gradients(const Gradients<T>& grads) const {
        std::vector<Tensor> out;
        for (const auto& v : vars_) out.push_back(grads.get_or_zero(v).template cast<float>());
        return out;
    }

   private:
    std::vector<std::string> names_;
    std::vector<Var<T>> vars_;
    mutable std::vector<bool> used_;
};

namespace detail {

template <class T>
void require_image_batch(const Var<T>& x, const Geometry& g) {
    const auto& s = x.shape();
    if (s.size() != 4 || s[1] != g.channels || s[2] != g.height || s[3] != g.width)
        fail(Errc::geometry_mismatch, "expected batch of " + g.str() + " images, got " + shape_string(s));
}

}  // namespace detail

/// z [N × latent_dim] → images [N × C × H × W] in [0, 1].
template <class T>
Var<T> generator_forward(const ModelParams& m, const BoundParams<T>& p, const Var<T>& z) {
    const auto latent = static_cast<std::size_t>(m.attribute("latent_dim"));
    const auto base = static_cast<std::size_t>(m.attribute("base_channels"));
    const auto kernel = static_cast<std::size_t>(m.attribute("kernel"));
    if (z.shape().size() != 2 || z.shape()[1] != latent)
        fail(Errc::shape_mismatch, "latent batch must be N x " + std::to_string(latent));
    const std::size_t n = z.shape()[0];
    const Geometry& g = m.geometry;
    auto h = add_row_bias(matmul(z, p["project.weight"]), p["project.bias"]);
    h = leaky_relu(reshape(h, {n, base, g.height / 2, g.width / 2}), kLeakySlope);
    h = add_channel_bias(transposed_conv2d(h, p["upsample.weight"], 2, (kernel - 2) / 2), p["upsample.bias"]);
    return affine(galc::tanh(h), 0.5, 0.5);
}

/// Activations feeding the head: flattened conv features, or the hidden layer
/// when the network has one.
template <class T>
Var<T> convnet_features(const ModelParams& m, const BoundParams<T>& p, const Var<T>& x) {
    detail::require_image_batch(x, m.geometry);
    const auto pad = static_cast<std::size_t>(m.attribute("padding"));
    const std::size_t n = x.shape()[0];
    auto h = leaky_relu(add_channel_bias(conv2d(x, p["conv1.weight"], 2, pad), p["conv1.bias"]), kLeakySlope);
    h = leaky_relu(add_channel_bias(conv2d(h, p["conv2.weight"], 2, pad), p["conv2.bias"]), kLeakySlope);
    h = reshape(h, {n, h.value().size() / n});
    if (m.attribute("hidden") > 0)
        h = leaky_relu(add_row_bias(matmul(h, p["hidden.weight"]), p["hidden.bias"]), kLeakySlope);
    return h;
}

/// images [N × C × H × W] → probabilities [N × 1] in (0, 1).
template <class T>
Var<T> convnet_forward(const ModelParams& m, const BoundParams<T>& p, const Var<T>& x) {
    auto h = convnet_features(m, p, x);
    return sigmoid(add_row_bias(matmul(h, p["head.weight"]), p["head.bias"]));
}

inline std::size_t feature_dim(const ModelParams& m) {
    if (m.arch == Architecture::generator) fail(Errc::shape_mismatch, "generators have no feature layer");
    return m.at("head.weight").dim(0);
}

/// Untracked forward passes in storage precision.
inline Tensor generate(const ModelParams& m, const Tensor& z) {
    Tape<float> tape;
    BoundParams<float> p(tape, m, false);
    return generator_forward(m, p, tape.constant(z)).value();
}

inline Tensor predict(const ModelParams& m, const Tensor& images) {
    Tape<float> tape;
    BoundParams<float> p(tape, m, false);
    return convnet_forward(m, p, tape.constant(images)).value();
}

inline Tensor penultimate(const ModelParams& m, const Tensor& images) {
    Tape<float> tape;
    BoundParams<float> p(tape, m, false);
    return convnet_features(m, p, tape.constant(images)).value();
}

}  // namespace galc
