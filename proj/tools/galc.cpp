// galc: command-line driver for the augmentation experiment and its stages.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "galc/experiment.hpp"

namespace {

using namespace galc;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Experiment config file (key = value lines)");
    cmd->add_option("--seed", o.seed, "Global seed; overrides the config");
    cmd->add_option("--out", o.out, "Output directory; overrides the config");
    cmd->add_flag("--deterministic", o.deterministic, "Serial, bitwise-reproducible execution (always the case)");
}

ExperimentConfig resolve(const CommonOptions& o) {
    ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.out = o.out;
    return cfg;
}

PatchDataset training_set(const ExperimentConfig& cfg) { return experiment_split(cfg, experiment_dataset(cfg)).train; }

int cmd_experiment(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const auto report = run_experiment(cfg, &std::cout);
    std::cout << report_csv(report);
    return 0;
}

int cmd_synth_data(const CommonOptions& o) {
    auto cfg = resolve(o);
    const auto ds = generate_synthetic_dataset(cfg.synthetic_per_class, cfg.synthetic_geometry, derive_seed(cfg.seed, "data"));
    export_dataset(ds, cfg.out);
    std::cout << "wrote " << ds.size() << " patches (" << ds.count(0) << " class 0, " << ds.count(1)
              << " class 1) to " << cfg.out.string() << "\n";
    return 0;
}

int cmd_train_gan(const CommonOptions& o, int label) {
    const auto cfg = resolve(o);
    ensure_directory(cfg.out);
    const auto train = training_set(cfg);
    const auto gcfg = experiment_gan_config(cfg, label);
    const auto r = train_gan(train.class_images(label), gcfg);
    const std::string tag = "class" + std::to_string(label);
    save_checkpoint({r.generator, gcfg.steps, r.latent_rng}, cfg.out / ("generator_" + tag + ".galc"));
    save_checkpoint({r.discriminator, gcfg.steps, r.latent_rng}, cfg.out / ("discriminator_" + tag + ".galc"));
    write_text_file(cfg.out / ("gan_" + tag + "_log.csv"), format_gan_log(r.log));
    if (!r.log.empty())
        std::cout << "step " << r.log.back().step << ": mean D(x) " << r.log.back().mean_d_real << ", mean D(G(z)) "
                  << r.log.back().mean_d_fake << "\n";
    return 0;
}

int cmd_train_classifier(const CommonOptions& o, const std::string& data_dir) {
    const auto cfg = resolve(o);
    ensure_directory(cfg.out);
    const auto parts = experiment_split(cfg, experiment_dataset(cfg));
    const PatchDataset train = data_dir.empty() ? parts.train : load_patch_dataset(data_dir);
    const auto r = train_classifier(train, experiment_classifier_config(cfg));
    save_checkpoint(r.params, cfg.out / "classifier.galc");
    write_text_file(cfg.out / "classifier_loss.csv", format_loss_curve(r.curve));
    std::printf("test accuracy %.2f%% on %zu items\n", percent_2dp(evaluate(r.params, parts.test)), parts.test.size());
    return 0;
}

int cmd_fid(const CommonOptions& o, const std::string& generator, int label, const std::string& classifier) {
    const auto cfg = resolve(o);
    const auto g = load_checkpoint(generator);
    FeatureExtractor fx = FeatureExtractor::raw_pixels();
    if (cfg.fid_features == FeatureMode::classifier_penultimate) {
        if (classifier.empty())
            fail(Errc::config_parse, "fid.features = classifier_penultimate needs --classifier CHECKPOINT");
        fx = FeatureExtractor::penultimate_of(load_checkpoint(classifier));
    }
    const double value =
        fid_against_generator(training_set(cfg).class_images(label), g, fx, derive_seed(cfg.seed, "fid"));
    std::printf("%.17g\n", value);
    return 0;
}

int cmd_augment(const CommonOptions& o, const std::string& g0, const std::string& g1) {
    const auto cfg = resolve(o);
    std::map<int, ModelParams> gens;
    if (!g0.empty()) gens.emplace(0, load_checkpoint(g0));
    if (!g1.empty()) gens.emplace(1, load_checkpoint(g1));
    const auto f_a = augment(training_set(cfg), gens, cfg.augment_ratio, derive_seed(cfg.seed, "augment"), cfg.augment_mode);
    export_dataset(f_a, cfg.out);
    std::cout << "F_a: " << f_a.size() << " items (" << f_a.count(0) << " class 0, " << f_a.count(1) << " class 1)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAN-based data augmentation for binary patch classification"};
    app.require_subcommand(1);

    CommonOptions common;
    int label = 0;
    std::string data_dir, generator, classifier, gen0, gen1;

    auto* experiment = app.add_subcommand("experiment", "Run the full pipeline and write the report");
    add_common(experiment, common);

    auto* synth = app.add_subcommand("synth-data", "Export the synthetic two-texture dataset as PNGs");
    add_common(synth, common);

    auto* gan = app.add_subcommand("train-gan", "Train the GAN for one class of the training split");
    add_common(gan, common);
    gan->add_option("--class", label, "Class label (0 or 1)")->check(CLI::Range(0, 1));

    auto* clf = app.add_subcommand("train-classifier", "Train and evaluate the classifier");
    add_common(clf, common);
    clf->add_option("--data", data_dir, "Train on this PNG directory instead of the config's training split");

    auto* fid_cmd = app.add_subcommand("fid", "FID between one class of the training split and a generator");
    add_common(fid_cmd, common);
    fid_cmd->add_option("--generator", generator, "Generator checkpoint")->required();
    fid_cmd->add_option("--class", label, "Class label (0 or 1)")->check(CLI::Range(0, 1));
    fid_cmd->add_option("--classifier", classifier, "Classifier checkpoint for penultimate features");

    auto* aug = app.add_subcommand("augment", "Build F_a from the training split and export it");
    add_common(aug, common);
    aug->add_option("--generator0", gen0, "Generator checkpoint for class 0");
    aug->add_option("--generator1", gen1, "Generator checkpoint for class 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*experiment) return cmd_experiment(common);
        if (*synth) return cmd_synth_data(common);
        if (*gan) return cmd_train_gan(common, label);
        if (*clf) return cmd_train_classifier(common, data_dir);
        if (*fid_cmd) return cmd_fid(common, generator, label, classifier);
        if (*aug) return cmd_augment(common, gen0, gen1);
    } catch (const Error& e) {
        std::cerr << "galc: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "galc: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
