#pragma once

#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "galc/data.hpp"
#include "galc/gan.hpp"
#include "galc/metrics.hpp"
#include "galc/optim.hpp"

namespace galc {

struct ClassifierTrainConfig {
    std::size_t batch_size = 100;
    std::size_t epochs = 10;
    AdagradHyper adagrad;
    std::uint64_t seed = 0;
    ConvNetConfig architecture = default_classifier_config();

    void validate() const {
        if (batch_size == 0) fail(Errc::invalid_range, "classifier batch size must be positive");
    }
};

struct EpochStats {
    std::size_t epoch = 0;
    double mean_bce = 0;
    double train_accuracy = 0;  // over the predictions made while training that epoch

    friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct ClassifierResult {
    ModelParams params;
    std::vector<EpochStats> curve;
};

/// The seed-derived starting point; identical for every run sharing cfg.seed.
inline ModelParams initial_classifier(const Geometry& g, const ClassifierTrainConfig& cfg) {
    return build_classifier(g, derive_seed(cfg.seed, "classifier/init"), cfg.architecture);
}

/// Adagrad on bce over shuffled mini-batches; the last batch of an epoch may
/// be short.
inline ClassifierResult train_classifier(const PatchDataset& train, const ClassifierTrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) fail(Errc::empty_dataset, "classifier training set is empty");
    if (train.count(0) == 0 || train.count(1) == 0)
        fail(Errc::single_class_dataset, "classifier training set holds only one class");

    ClassifierResult result{initial_classifier(train.geometry(), cfg), {}};
    ModelParams& m = result.params;
    auto state = AdagradState::fresh(m.tensors(), cfg.adagrad);
    CounterRng rng(derive_seed(cfg.seed, "classifier/shuffle"));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> rows(order.data() + start, count);
            Tensor labels(Shape{count, 1});
            for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<float>(train.label(rows[i]));

            Tape<float> tape;
            BoundParams<float> p(tape, m, true);
            auto probs = convnet_forward(m, p, tape.constant(train.batch(rows)));
            auto loss = bce(probs, labels);
            const double l = loss.value().item();
            detail::require_finite(l, "classifier loss", epoch);
            loss_sum += l * static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i)
                correct += static_cast<int>(probs.value()[i] >= 0.5f) == static_cast<int>(labels[i]);

            auto [params, next] = adagrad_step(m.tensors(), p.gradients(backward(loss)), std::move(state));
            m.set_tensors(std::move(params));
            state = std::move(next);
        }
        const double n = static_cast<double>(order.size());
        result.curve.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
    }
    return result;
}

/// Probability of the tumor class for every item, in dataset order.
inline std::vector<float> predict_dataset(const ModelParams& m, const PatchDataset& ds, std::size_t batch = 100) {
    std::vector<float> out;
    out.reserve(ds.size());
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < ds.size(); start += batch) {
        rows.resize(std::min(batch, ds.size() - start));
        std::iota(rows.begin(), rows.end(), start);
        const Tensor probs = predict(m, ds.batch(rows));
        out.insert(out.end(), probs.data().begin(), probs.data().end());
    }
    return out;
}

inline double evaluate(const ModelParams& m, const PatchDataset& test) {
    if (test.empty()) fail(Errc::empty_dataset, "evaluation set is empty");
    return accuracy(predict_dataset(m, test), test.labels());
}

inline std::string format_loss_curve(const std::vector<EpochStats>& curve) {
    std::string out = "epoch,mean_bce,train_accuracy\n";
    char line[96];
    for (const auto& e : curve) {
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", e.epoch, e.mean_bce, e.train_accuracy);
        out += line;
    }
    return out;
}

}  // namespace galc
