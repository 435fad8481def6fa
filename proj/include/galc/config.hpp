#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "galc/augment.hpp"
#include "galc/classifier.hpp"
#include "galc/data.hpp"
#include "galc/gan.hpp"
#include "galc/metrics.hpp"

namespace galc {

enum class DataSource { synthetic, directory };

/// Everything one experiment run needs. Seeds for the individual stages are
/// derived from `seed` and the stage name.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out = "galc_out";

    DataSource source = DataSource::synthetic;
    std::filesystem::path data_root;
    std::size_t synthetic_per_class = 500;
    Geometry synthetic_geometry{3, 16, 16};

    SplitSpec split;
    GanTrainConfig gan;
    ClassifierTrainConfig classifier;
    double augment_ratio = 0.5;
    AugmentMode augment_mode = AugmentMode::per_class;
    FeatureMode fid_features = FeatureMode::classifier_penultimate;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <class Int>
bool parse_int(std::string_view text, Int& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

inline bool parse_double(std::string_view text, double& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

// Binds every accepted key to a parser that writes into the config.
using Setter = std::function<bool(ExperimentConfig&, std::string_view)>;

inline std::map<std::string, Setter, std::less<>> config_keys() {
    auto count = [](auto member_ptr, bool allow_zero = false) -> Setter {
        return [=](ExperimentConfig& c, std::string_view v) {
            std::size_t n = 0;
            if (!parse_int(v, n) || (!allow_zero && n == 0)) return false;
            member_ptr(c) = n;
            return true;
        };
    };
    auto real = [](auto member_ptr, bool strictly_positive) -> Setter {
        return [=](ExperimentConfig& c, std::string_view v) {
            double x = 0;
            if (!parse_double(v, x) || (strictly_positive ? !(x > 0) : !(x >= 0))) return false;
            member_ptr(c) = x;
            return true;
        };
    };
    auto unit = [](auto member_ptr) -> Setter {
        return [=](ExperimentConfig& c, std::string_view v) {
            double x = 0;
            if (!parse_double(v, x) || !(x >= 0 && x < 1)) return false;
            member_ptr(c) = x;
            return true;
        };
    };
    auto flag = [](auto member_ptr) -> Setter {
        return [=](ExperimentConfig& c, std::string_view v) {
            if (v == "true") member_ptr(c) = true;
            else if (v == "false") member_ptr(c) = false;
            else return false;
            return true;
        };
    };

    std::map<std::string, Setter, std::less<>> keys;
    keys["seed"] = [](ExperimentConfig& c, std::string_view v) { return parse_int(v, c.seed); };
    keys["out"] = [](ExperimentConfig& c, std::string_view v) {
        c.out = std::string(v);
        return !v.empty();
    };

    keys["data.source"] = [](ExperimentConfig& c, std::string_view v) {
        if (v == "synthetic") c.source = DataSource::synthetic;
        else if (v == "directory") c.source = DataSource::directory;
        else return false;
        return true;
    };
    keys["data.root"] = [](ExperimentConfig& c, std::string_view v) {
        c.data_root = std::string(v);
        return !v.empty();
    };
    keys["data.synthetic_per_class"] = count([](ExperimentConfig& c) -> auto& { return c.synthetic_per_class; });
    keys["data.channels"] = [](ExperimentConfig& c, std::string_view v) {
        std::size_t n = 0;
        if (!parse_int(v, n) || (n != 1 && n != 3)) return false;
        c.synthetic_geometry.channels = n;
        return true;
    };
    keys["data.height"] = count([](ExperimentConfig& c) -> auto& { return c.synthetic_geometry.height; });
    keys["data.width"] = count([](ExperimentConfig& c) -> auto& { return c.synthetic_geometry.width; });

    keys["split.train_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.split.train_fraction; }, true);
    keys["split.test_fraction"] = real([](ExperimentConfig& c) -> auto& { return c.split.test_fraction; }, true);
    keys["split.stratified"] = flag([](ExperimentConfig& c) -> auto& { return c.split.stratified; });

    keys["gan.batch_size"] = count([](ExperimentConfig& c) -> auto& { return c.gan.batch_size; });
    keys["gan.steps"] = count([](ExperimentConfig& c) -> auto& { return c.gan.steps; }, true);
    keys["gan.d_steps_per_g_step"] = count([](ExperimentConfig& c) -> auto& { return c.gan.d_steps_per_g_step; });
    keys["gan.latent_dim"] = count([](ExperimentConfig& c) -> auto& { return c.gan.latent_dim; });
    keys["gan.log_interval"] = count([](ExperimentConfig& c) -> auto& { return c.gan.log_interval; });
    keys["gan.generator_channels"] = count([](ExperimentConfig& c) -> auto& { return c.gan.generator_channels; });
    keys["gan.discriminator_channels1"] =
        count([](ExperimentConfig& c) -> auto& { return c.gan.discriminator.channels1; });
    keys["gan.discriminator_channels2"] =
        count([](ExperimentConfig& c) -> auto& { return c.gan.discriminator.channels2; });
    keys["gan.loss"] = [](ExperimentConfig& c, std::string_view v) {
        if (v == "non_saturating") c.gan.loss = GeneratorLoss::non_saturating;
        else if (v == "saturating") c.gan.loss = GeneratorLoss::saturating;
        else return false;
        return true;
    };
    for (const char* side : {"g", "d"}) {
        const std::string prefix = std::string("gan.adam_") + side + ".";
        auto hyper = [side](ExperimentConfig& c) -> AdamHyper& { return side[0] == 'g' ? c.gan.adam_g : c.gan.adam_d; };
        keys[prefix + "lr"] = real([=](ExperimentConfig& c) -> auto& { return hyper(c).lr; }, true);
        keys[prefix + "beta1"] = unit([=](ExperimentConfig& c) -> auto& { return hyper(c).beta1; });
        keys[prefix + "beta2"] = unit([=](ExperimentConfig& c) -> auto& { return hyper(c).beta2; });
        keys[prefix + "eps"] = real([=](ExperimentConfig& c) -> auto& { return hyper(c).eps; }, true);
    }

    keys["classifier.batch_size"] = count([](ExperimentConfig& c) -> auto& { return c.classifier.batch_size; });
    keys["classifier.epochs"] = count([](ExperimentConfig& c) -> auto& { return c.classifier.epochs; }, true);
    keys["classifier.lr"] = real([](ExperimentConfig& c) -> auto& { return c.classifier.adagrad.lr; }, true);
    keys["classifier.eps"] = real([](ExperimentConfig& c) -> auto& { return c.classifier.adagrad.eps; }, true);

    keys["augment.ratio"] = real([](ExperimentConfig& c) -> auto& { return c.augment_ratio; }, false);
    keys["augment.mode"] = [](ExperimentConfig& c, std::string_view v) {
        auto m = parse_augment_mode(v);
        if (m) c.augment_mode = *m;
        return m.has_value();
    };
    keys["fid.features"] = [](ExperimentConfig& c, std::string_view v) {
        auto m = parse_feature_mode(v);
        if (m) c.fid_features = *m;
        return m.has_value();
    };
    return keys;
}

}  // namespace detail

/// Parses flat `key = value` text. `#` starts a comment; blank lines are
/// skipped. Unknown keys, repeated keys and bad values are errors naming the
/// line.
inline ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>") {
    ExperimentConfig cfg;
    const auto keys = detail::config_keys();
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    auto where = [&] { return std::string(source) + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(Errc::config_parse, where() + "expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        auto it = keys.find(key);
        if (it == keys.end()) fail(Errc::config_parse, where() + "unknown key '" + std::string(key) + "'");
        if (!seen.emplace(key).second) fail(Errc::config_parse, where() + "key '" + std::string(key) + "' given twice");
        if (!it->second(cfg, value))
            fail(Errc::config_parse, where() + "invalid value '" + std::string(value) + "' for " + std::string(key));
    }
    if (std::abs(cfg.split.train_fraction + cfg.split.test_fraction - 1.0) > 1e-9)
        fail(Errc::config_parse, std::string(source) + ": split.train_fraction + split.test_fraction must equal 1");
    if (cfg.source == DataSource::directory && cfg.data_root.empty())
        fail(Errc::config_parse, std::string(source) + ": data.source = directory needs data.root");
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(Errc::config_parse, "cannot open config '" + path.string() + "'");
    std::ostringstream text;
    text << f.rdbuf();
    return parse_config(text.str(), path.string());
}

}  // namespace galc
