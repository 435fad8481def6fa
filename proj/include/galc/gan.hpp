#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "galc/autograd.hpp"
#include "galc/models.hpp"
#include "galc/ops.hpp"
#include "galc/optim.hpp"
#include "galc/rng.hpp"

namespace galc {

/// V(D, G) = mean(log d_real) + mean(log(1 − d_fake)), on clamped probabilities.
inline double value_v(std::span<const float> d_real, std::span<const float> d_fake) {
    if (d_real.empty() || d_fake.empty()) fail(Errc::empty_batch, "value_v needs non-empty batches");
    auto clamp = [](double p) { return std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon); };
    double real = 0, fake = 0;
    for (float p : d_real) real += std::log(clamp(p));
    for (float p : d_fake) fake += std::log(1.0 - clamp(p));
    return real / static_cast<double>(d_real.size()) + fake / static_cast<double>(d_fake.size());
}

/// The discriminator maximizes V, so it minimizes bce(d_real, 1) + bce(d_fake, 0).
template <class T>
Var<T> discriminator_loss(const Var<T>& d_real, const Var<T>& d_fake) {
    if (d_real.value().empty() || d_fake.value().empty()) fail(Errc::empty_batch, "discriminator loss on empty batch");
    return add(bce(d_real, 1.0), bce(d_fake, 0.0));
}

enum class GeneratorLoss {
    non_saturating,  // −mean(log d_fake)
    saturating,      // mean(log(1 − d_fake)), the minimax form
};

template <class T>
Var<T> generator_loss(const Var<T>& d_fake, GeneratorLoss form = GeneratorLoss::non_saturating) {
    if (d_fake.value().empty()) fail(Errc::empty_batch, "generator loss on empty batch");
    return form == GeneratorLoss::non_saturating ? bce(d_fake, 1.0) : scale(bce(d_fake, 0.0), -1.0);
}

/// Untracked conveniences over plain probability tensors.
inline double discriminator_loss(const Tensor& d_real, const Tensor& d_fake) {
    Tape<float> tape;
    return discriminator_loss(tape.constant(d_real), tape.constant(d_fake)).value().item();
}

inline double generator_loss(const Tensor& d_fake, GeneratorLoss form = GeneratorLoss::non_saturating) {
    Tape<float> tape;
    return generator_loss(tape.constant(d_fake), form).value().item();
}

struct GanTrainConfig {
    std::size_t batch_size = 100;
    std::size_t steps = 2000;  // generator updates
    std::size_t d_steps_per_g_step = 1;
    std::size_t latent_dim = 64;
    std::uint64_t seed = 0;
    std::size_t log_interval = 10;
    GeneratorLoss loss = GeneratorLoss::non_saturating;
    AdamHyper adam_g;
    AdamHyper adam_d;
    std::size_t generator_channels = 16;
    std::size_t generator_kernel = 4;
    ConvNetConfig discriminator = default_discriminator_config();

    void validate() const {
        if (batch_size == 0 || d_steps_per_g_step == 0 || latent_dim == 0 || log_interval == 0)
            fail(Errc::invalid_range, "GAN batch size, d-steps, latent dim and log interval must be positive");
    }
};

struct TrainLogEntry {
    std::size_t step = 0;
    double d_loss = 0;
    double g_loss = 0;
    double mean_d_real = 0;
    double mean_d_fake = 0;

    friend bool operator==(const TrainLogEntry&, const TrainLogEntry&) = default;
};

struct GanResult {
    ModelParams generator;
    ModelParams discriminator;
    std::vector<TrainLogEntry> log;
    CounterRng::State latent_rng;
};

/// Seed-derived starting points of the two networks.
inline ModelParams initial_generator(const Geometry& geometry, const GanTrainConfig& cfg) {
    GeneratorConfig g;
    g.latent_dim = cfg.latent_dim;
    g.base_channels = cfg.generator_channels;
    g.kernel = cfg.generator_kernel;
    g.output = geometry;
    return build_generator(g, derive_seed(cfg.seed, "gan/generator"));
}

inline ModelParams initial_discriminator(const Geometry& geometry, const GanTrainConfig& cfg) {
    return build_discriminator(geometry, derive_seed(cfg.seed, "gan/discriminator"), cfg.discriminator);
}

/// Draws z ~ U[−1, 1]^latent_dim for n items.
inline Tensor sample_latent(std::size_t n, std::size_t latent_dim, CounterRng& rng) {
    return random_uniform<float>(Shape{n, latent_dim}, -1.0, 1.0, rng);
}

/// n generated images [n × C × H × W] in [0, 1], seed-deterministic.
inline Tensor sample(const ModelParams& generator, std::size_t n, std::uint64_t seed) {
    if (n < 1) fail(Errc::invalid_range, "sample needs n >= 1");
    const auto latent = static_cast<std::size_t>(generator.attribute("latent_dim"));
    CounterRng rng(seed);
    const Geometry& g = generator.geometry;
    std::vector<float> out;
    out.reserve(n * g.pixels());
    for (std::size_t start = 0; start < n; start += 100) {
        const std::size_t count = std::min<std::size_t>(100, n - start);
        const Tensor images = generate(generator, sample_latent(count, latent, rng));
        out.insert(out.end(), images.data().begin(), images.data().end());
    }
    return Tensor(Shape{n, g.channels, g.height, g.width}, std::move(out));
}

namespace detail {

// Hands out indices without replacement, reshuffling at each epoch boundary.
// A partial tail that cannot fill a batch starts the next epoch instead.
class EpochSampler {
   public:
    EpochSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        reshuffle();
    }

    std::vector<std::size_t> next(std::size_t batch) {
        batch = std::min(batch, order_.size());
        if (cursor_ + batch > order_.size()) reshuffle();
        std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch));
        cursor_ += batch;
        return out;
    }

   private:
    void reshuffle() {
        rng_.shuffle(std::span<std::size_t>(order_));
        cursor_ = 0;
    }

    std::vector<std::size_t> order_;
    CounterRng rng_;
    std::size_t cursor_ = 0;
};

inline Tensor gather_rows(const Tensor& images, std::span<const std::size_t> rows) {
    const std::size_t per = images.size() / images.dim(0);
    Shape shape = images.shape();
    shape[0] = rows.size();
    std::vector<float> out;
    out.reserve(rows.size() * per);
    for (auto r : rows) {
        auto first = images.data().begin() + static_cast<std::ptrdiff_t>(r * per);
        out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(per));
    }
    return Tensor(std::move(shape), std::move(out));
}

inline double mean_of(const Tensor& t) {
    double s = 0;
    for (float v : t.data()) s += v;
    return s / static_cast<double>(t.size());
}

inline void require_finite(double v, const char* what, std::size_t step) {
    if (!std::isfinite(v)) fail(Errc::numeric_failure, std::string(what) + " is not finite at step " + std::to_string(step));
}

}  // namespace detail

/// Alternating adversarial training on a batch of real images [N × C × H × W].
inline GanResult train_gan(const Tensor& images, const GanTrainConfig& cfg) {
    cfg.validate();
    if (images.rank() != 4 || images.dim(0) == 0) fail(Errc::empty_dataset, "GAN training set is empty");
    const Geometry geometry{images.dim(1), images.dim(2), images.dim(3)};

    GanResult result{initial_generator(geometry, cfg), initial_discriminator(geometry, cfg), {}, {}};
    ModelParams& G = result.generator;
    ModelParams& D = result.discriminator;
    auto g_state = AdamState::fresh(G.tensors(), cfg.adam_g);
    auto d_state = AdamState::fresh(D.tensors(), cfg.adam_d);

    detail::EpochSampler sampler(images.dim(0), derive_seed(cfg.seed, "gan/batches"));
    CounterRng latent_rng(derive_seed(cfg.seed, "gan/latent"));

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        TrainLogEntry entry;
        entry.step = step;
        for (std::size_t k = 0; k < cfg.d_steps_per_g_step; ++k) {
            const auto rows = sampler.next(cfg.batch_size);
            const Tensor real = detail::gather_rows(images, rows);
            const Tensor fake = generate(G, sample_latent(rows.size(), cfg.latent_dim, latent_rng));
            Tape<float> tape;
            BoundParams<float> p(tape, D, true);
            auto d_real = convnet_forward(D, p, tape.constant(real));
            auto d_fake = convnet_forward(D, p, tape.constant(fake));
            auto loss = discriminator_loss(d_real, d_fake);
            entry.d_loss = loss.value().item();
            entry.mean_d_real = detail::mean_of(d_real.value());
            detail::require_finite(entry.d_loss, "discriminator loss", step);
            auto [params, state] = adam_step(D.tensors(), p.gradients(backward(loss)), std::move(d_state));
            D.set_tensors(std::move(params));
            d_state = std::move(state);
        }
        {
            const std::size_t n = std::min(cfg.batch_size, images.dim(0));
            Tape<float> tape;
            BoundParams<float> pg(tape, G, true);
            BoundParams<float> pd(tape, D, false);
            auto fake = generator_forward(G, pg, tape.constant(sample_latent(n, cfg.latent_dim, latent_rng)));
            auto d_fake = convnet_forward(D, pd, fake);
            auto loss = generator_loss(d_fake, cfg.loss);
            entry.g_loss = loss.value().item();
            entry.mean_d_fake = detail::mean_of(d_fake.value());
            detail::require_finite(entry.g_loss, "generator loss", step);
            auto [params, state] = adam_step(G.tensors(), pg.gradients(backward(loss)), std::move(g_state));
            G.set_tensors(std::move(params));
            g_state = std::move(state);
        }
        if (step % cfg.log_interval == 0 || step == cfg.steps) result.log.push_back(entry);
    }
    result.latent_rng = latent_rng.state();
    return result;
}

inline std::string format_gan_log(const std::vector<TrainLogEntry>& log) {
    std::string out = "step,d_loss,g_loss,mean_d_real,mean_d_fake\n";
    char line[160];
    for (const auto& e : log) {
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.9g\n", e.step, e.d_loss, e.g_loss, e.mean_d_real,
                      e.mean_d_fake);
        out += line;
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text) || !f.flush()) fail(Errc::io_error, "cannot write '" + path.string() + "'");
}

}  // namespace galc
