#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "galc/augment.hpp"
#include "galc/checkpoint.hpp"
#include "galc/classifier.hpp"
#include "galc/config.hpp"
#include "galc/data.hpp"
#include "galc/gan.hpp"
#include "galc/metrics.hpp"

namespace galc {

/// One row of report.csv. Accuracies are percentages held at two decimals,
/// so the relative increase can be recomputed exactly from the file.
struct MetricsReport {
    double fid = 0;  // pooled over both classes
    double fid_class0 = 0;
    double fid_class1 = 0;
    FeatureMode fid_features = FeatureMode::classifier_penultimate;
    double baseline_accuracy = 0;
    double augmented_accuracy = 0;
    double augmentation_ratio = 0;
    double relative_increase = 0;
    std::size_t size_f_o = 0;
    std::size_t size_f_a = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline constexpr std::string_view kReportHeader =
    "fid,fid_class0,fid_class1,fid_features,baseline_accuracy,augmented_accuracy,augmentation_ratio,"
    "relative_increase,size_f_o,size_f_a,seed";

/// Accuracy fraction → percentage rounded to two decimals.
inline double percent_2dp(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

inline std::string report_csv(const MetricsReport& r) {
    char row[512];
    std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%s,%.2f,%.2f,%.17g,%.17g,%zu,%zu,%llu", r.fid, r.fid_class0,
                  r.fid_class1, std::string(feature_mode_name(r.fid_features)).c_str(), r.baseline_accuracy,
                  r.augmented_accuracy, r.augmentation_ratio, r.relative_increase, r.size_f_o, r.size_f_a,
                  static_cast<unsigned long long>(r.seed));
    return std::string(kReportHeader) + "\n" + row + "\n";
}

inline MetricsReport parse_report_csv(std::string_view text) {
    auto bad = [](const std::string& why) { fail(Errc::corrupt_manifest, "report.csv: " + why); };
    std::istringstream in{std::string(text)};
    std::string header, row, extra;
    if (!std::getline(in, header) || header != kReportHeader) bad("unexpected header");
    if (!std::getline(in, row)) bad("missing data row");
    if (std::getline(in, extra) && !extra.empty()) bad("more than one data row");

    std::vector<std::string> f;
    std::stringstream cells(row);
    for (std::string cell; std::getline(cells, cell, ',');) f.push_back(cell);
    if (f.size() != 11) bad("expected 11 fields, got " + std::to_string(f.size()));
    auto num = [&](const std::string& s) {
        double x = 0;
        if (!detail::parse_double(s, x)) bad("bad number '" + s + "'");
        return x;
    };
    auto whole = [&](const std::string& s) {
        std::uint64_t x = 0;
        if (!detail::parse_int(s, x)) bad("bad count '" + s + "'");
        return x;
    };
    MetricsReport r;
    r.fid = num(f[0]);
    r.fid_class0 = num(f[1]);
    r.fid_class1 = num(f[2]);
    auto mode = parse_feature_mode(f[3]);
    if (!mode) bad("bad feature mode '" + f[3] + "'");
    r.fid_features = *mode;
    r.baseline_accuracy = num(f[4]);
    r.augmented_accuracy = num(f[5]);
    r.augmentation_ratio = num(f[6]);
    r.relative_increase = num(f[7]);
    r.size_f_o = whole(f[8]);
    r.size_f_a = whole(f[9]);
    r.seed = whole(f[10]);
    return r;
}

/// Wall-clock bookkeeping. Kept out of report.csv so reruns compare byte for byte.
struct RunTimes {
    std::string started;
    std::string finished;
    double seconds = 0;
};

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string report_text(const MetricsReport& r, const RunTimes& times) {
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "Augmentation experiment\n"
                  "  seed                     %llu\n"
                  "  |F_o| / |F_a|            %zu / %zu (ratio %.4g)\n"
                  "  baseline accuracy        %.2f%%\n"
                  "  augmented accuracy       %.2f%%\n"
                  "  relative increase        %.4f%%\n"
                  "  FID (%s)   pooled %.6g, class 0 %.6g, class 1 %.6g\n"
                  "  started %s, finished %s (%.1f s)\n",
                  static_cast<unsigned long long>(r.seed), r.size_f_o, r.size_f_a, r.augmentation_ratio,
                  r.baseline_accuracy, r.augmented_accuracy, r.relative_increase,
                  std::string(feature_mode_name(r.fid_features)).c_str(), r.fid, r.fid_class0, r.fid_class1,
                  times.started.c_str(), times.finished.c_str(), times.seconds);
    return buf;
}

inline void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(Errc::io_error, "cannot create directory '" + dir.string() + "': " + ec.message());
}

/// Writes report.csv and report.txt into `dir`, creating it if needed.
inline void emit_report(const MetricsReport& r, const std::filesystem::path& dir, const RunTimes& times = {}) {
    ensure_directory(dir);
    write_text_file(dir / "report.csv", report_csv(r));
    write_text_file(dir / "report.txt", report_text(r, times));
}

inline std::string dataset_manifest(const PatchDataset& ds) {
    std::string out = "filename,label,provenance\n";
    for (std::size_t i = 0; i < ds.size(); ++i)
        out += ds.name(i) + "," + std::to_string(ds.label(i)) + "," + std::string(provenance_name(ds.provenance(i))) + "\n";
    return out;
}

/// Runs `body` as a named pipeline stage: announces it, and re-raises any
/// error with the stage name in front.
template <class F>
auto run_stage(const char* name, std::ostream* log, F&& body) {
    if (log) *log << "[stage] " << name << std::endl;
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.code(), "stage '" + std::string(name) + "': " + e.message());
    }
}

inline PatchDataset experiment_dataset(const ExperimentConfig& cfg) {
    if (cfg.source == DataSource::directory) return load_patch_dataset(cfg.data_root);
    return generate_synthetic_dataset(cfg.synthetic_per_class, cfg.synthetic_geometry, derive_seed(cfg.seed, "data"));
}

inline SplitResult experiment_split(const ExperimentConfig& cfg, const PatchDataset& ds) {
    SplitSpec spec = cfg.split;
    spec.seed = derive_seed(cfg.seed, "split");
    return split(ds, spec);
}

inline ClassifierTrainConfig experiment_classifier_config(const ExperimentConfig& cfg) {
    ClassifierTrainConfig c = cfg.classifier;
    c.seed = derive_seed(cfg.seed, "classifier");
    return c;
}

inline GanTrainConfig experiment_gan_config(const ExperimentConfig& cfg, int label) {
    GanTrainConfig g = cfg.gan;
    g.seed = derive_seed(cfg.seed, "gan/class" + std::to_string(label));
    return g;
}

/// FID between real images and an equal number of generated ones.
inline double fid_against_generator(const Tensor& real, const ModelParams& generator, const FeatureExtractor& fx,
                                    std::uint64_t seed) {
    const Tensor fake = sample(generator, real.dim(0), seed);
    return fid(moments(extract_features(real, fx)), moments(extract_features(fake, fx)));
}

/// data → baseline classifier → per-class GANs → FID → augmentation →
/// augmented classifier → report. Every artifact lands in cfg.out.
inline MetricsReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    RunTimes times{utc_now(), {}, 0};
    const auto data = run_stage("data", log, [&] {
        ensure_directory(cfg.out);
        auto ds = experiment_split(cfg, experiment_dataset(cfg));
        write_text_file(cfg.out / "f_o_manifest.csv", dataset_manifest(ds.train));
        write_text_file(cfg.out / "test_manifest.csv", dataset_manifest(ds.test));
        return ds;
    });
    const PatchDataset& f_o = data.train;
    const auto clf_cfg = experiment_classifier_config(cfg);

    const auto baseline = run_stage("baseline-classifier", log, [&] {
        auto r = train_classifier(f_o, clf_cfg);
        save_checkpoint(r.params, cfg.out / "classifier_baseline.galc");
        write_text_file(cfg.out / "classifier_baseline_loss.csv", format_loss_curve(r.curve));
        return r;
    });

    const auto generators = run_stage("gan", log, [&] {
        std::map<int, ModelParams> gens;
        for (int label : {0, 1}) {
            if (f_o.count(label) == 0) continue;
            const auto gcfg = experiment_gan_config(cfg, label);
            auto r = train_gan(f_o.class_images(label), gcfg);
            const std::string tag = "class" + std::to_string(label);
            save_checkpoint({r.generator, gcfg.steps, r.latent_rng}, cfg.out / ("generator_" + tag + ".galc"));
            save_checkpoint({r.discriminator, gcfg.steps, r.latent_rng}, cfg.out / ("discriminator_" + tag + ".galc"));
            write_text_file(cfg.out / ("gan_" + tag + "_log.csv"), format_gan_log(r.log));
            gens.emplace(label, std::move(r.generator));
        }
        return gens;
    });

    MetricsReport report;
    report.seed = cfg.seed;
    report.fid_features = cfg.fid_features;
    report.augmentation_ratio = cfg.augment_ratio;

    run_stage("fid", log, [&] {
        const FeatureExtractor fx = cfg.fid_features == FeatureMode::raw_pixel
                                        ? FeatureExtractor::raw_pixels()
                                        : FeatureExtractor::penultimate_of(baseline.params);
        const std::uint64_t seed = derive_seed(cfg.seed, "fid");
        std::vector<Matrix> real_parts, fake_parts;
        std::string csv = "population,feature_mode,n_real,n_generated,fid\n";
        char line[160];
        for (int label : {0, 1}) {
            const Tensor real = f_o.class_images(label);
            const Tensor fake = sample(generators.at(label), real.dim(0), derive_seed(seed, std::to_string(label)));
            real_parts.push_back(extract_features(real, fx));
            fake_parts.push_back(extract_features(fake, fx));
            const double value = fid(moments(real_parts.back()), moments(fake_parts.back()));
            (label == 0 ? report.fid_class0 : report.fid_class1) = value;
            std::snprintf(line, sizeof line, "class%d,%s,%zu,%zu,%.17g\n", label,
                          std::string(feature_mode_name(cfg.fid_features)).c_str(), real.dim(0), fake.dim(0), value);
            csv += line;
        }
        auto stack = [](const std::vector<Matrix>& parts) {
            Matrix all(0, parts.front().cols);
            for (const auto& p : parts) {
                all.data.insert(all.data.end(), p.data.begin(), p.data.end());
                all.rows += p.rows;
            }
            return all;
        };
        const Matrix real_all = stack(real_parts), fake_all = stack(fake_parts);
        report.fid = fid(moments(real_all), moments(fake_all));
        std::snprintf(line, sizeof line, "pooled,%s,%zu,%zu,%.17g\n",
                      std::string(feature_mode_name(cfg.fid_features)).c_str(), real_all.rows, fake_all.rows, report.fid);
        csv += line;
        write_text_file(cfg.out / "fid.csv", csv);
        return 0;
    });

    const auto f_a = run_stage("augment", log, [&] {
        auto ds = augment(f_o, generators, cfg.augment_ratio, derive_seed(cfg.seed, "augment"), cfg.augment_mode);
        write_text_file(cfg.out / "f_a_manifest.csv", dataset_manifest(ds));
        return ds;
    });

    const auto augmented = run_stage("augmented-classifier", log, [&] {
        auto r = train_classifier(f_a, clf_cfg);
        save_checkpoint(r.params, cfg.out / "classifier_augmented.galc");
        write_text_file(cfg.out / "classifier_augmented_loss.csv", format_loss_curve(r.curve));
        return r;
    });

    run_stage("report", log, [&] {
        report.baseline_accuracy = percent_2dp(evaluate(baseline.params, data.test));
        report.augmented_accuracy = percent_2dp(evaluate(augmented.params, data.test));
        report.relative_increase = relative_increase(report.baseline_accuracy, report.augmented_accuracy);
        report.size_f_o = f_o.size();
        report.size_f_a = f_a.size();
        times.finished = utc_now();
        times.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        emit_report(report, cfg.out, times);
        return 0;
    });
    return report;
}

/// Process exit status for an error kind: 2 config, 3 data, 4 numeric, 5 io.
inline int exit_code_for(Errc code) {
    switch (code) {
        case Errc::config_parse:
        case Errc::invalid_range:
            return 2;
        case Errc::missing_class_directory:
        case Errc::mixed_geometry:
        case Errc::unreadable_file:
        case Errc::class_too_small:
        case Errc::missing_generator:
        case Errc::single_class_dataset:
        case Errc::empty_dataset:
        case Errc::empty_batch:
        case Errc::too_few_samples:
        case Errc::geometry_mismatch:
            return 3;
        case Errc::io_error:
        case Errc::version_mismatch:
        case Errc::corrupt_manifest:
            return 5;
        default:
            return 4;
    }
}

}  // namespace galc
