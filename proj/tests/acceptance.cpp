// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes. Pass criterion numbers as arguments to
// run a subset, e.g. `acceptance 1 2 7`.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "galc/experiment.hpp"
#include "galc/gradcheck.hpp"
#include "support/grad_harness.hpp"

using namespace galc;
namespace fs = std::filesystem;
using galc::testing::check_gradients;
using galc::testing::random_input;
using galc::testing::random_input_off_zero;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("galc_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    using galc::testing::BuildFn;
    using DT = BasicTensor<double>;
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t cases = 0, failures = 0;
    double worst = 0;
    std::string worst_name;
    auto check = [&](const std::string& name, const BuildFn& build, const std::vector<DT>& inputs, std::uint64_t seed) {
        const auto r = check_gradients(build, inputs, seed, 1e-4);
        cases += r.inputs_checked;
        if (!(r.worst_relative_error < 1e-3)) ++failures;
        if (!(r.worst_relative_error <= worst)) {
            worst = r.worst_relative_error;
            worst_name = name;
        }
    };

    for (std::uint64_t s = 0; s < 6; ++s) {
        const std::uint64_t b = 1000 * (s + 1);
        check(
            "add", [](auto&, const auto& v) { return add(v[0], v[1]); },
            {random_input({3, 4}, b), random_input({3, 4}, b + 1)}, b + 2);
        check(
            "sub", [](auto&, const auto& v) { return sub(v[0], v[1]); },
            {random_input({5}, b + 3), random_input({5}, b + 4)}, b + 5);
        check(
            "mul", [](auto&, const auto& v) { return mul(v[0], v[1]); },
            {random_input({2, 3}, b + 6), random_input({2, 3}, b + 7)}, b + 8);
        check(
            "affine", [](auto&, const auto& v) { return affine(v[0], -1.5, 0.25); }, {random_input({4, 2}, b + 9)},
            b + 10);
        check("scale", [](auto&, const auto& v) { return scale(v[0], 3.0); }, {random_input({6}, b + 11)}, b + 12);
        check("relu", [](auto&, const auto& v) { return relu(v[0]); }, {random_input_off_zero({4, 3}, b + 13)}, b + 14);
        check(
            "leaky_relu", [](auto&, const auto& v) { return leaky_relu(v[0], 0.2); },
            {random_input_off_zero({4, 3}, b + 15)}, b + 16);
        check(
            "sigmoid", [](auto&, const auto& v) { return sigmoid(v[0]); }, {random_input({3, 3}, b + 17, -4, 4)},
            b + 18);
        check(
            "tanh", [](auto&, const auto& v) { return galc::tanh(v[0]); }, {random_input({3, 3}, b + 19, -2, 2)},
            b + 20);
        check(
            "reshape", [](auto&, const auto& v) { return reshape(v[0], Shape{3, 4}); }, {random_input({2, 6}, b + 21)},
            b + 22);
        check("sum", [](auto&, const auto& v) { return sum(v[0]); }, {random_input({2, 2, 3}, b + 23)}, b + 24);
        check("mean", [](auto&, const auto& v) { return mean(v[0]); }, {random_input({7}, b + 25)}, b + 26);
        check(
            "matmul", [](auto&, const auto& v) { return matmul(v[0], v[1]); },
            {random_input({3, 4}, b + 27), random_input({4, 2}, b + 28)}, b + 29);
        check(
            "add_row_bias", [](auto&, const auto& v) { return add_row_bias(v[0], v[1]); },
            {random_input({3, 4}, b + 30), random_input({4}, b + 31)}, b + 32);
        check(
            "add_channel_bias", [](auto&, const auto& v) { return add_channel_bias(v[0], v[1]); },
            {random_input({2, 3, 2, 2}, b + 33), random_input({3}, b + 34)}, b + 35);
        const std::size_t stride = 1 + s % 2, pad = s % 3 == 0 ? 0 : 1;
        check(
            "conv2d", [=](auto&, const auto& v) { return conv2d(v[0], v[1], stride, pad); },
            {random_input({2, 2, 5, 5}, b + 36), random_input({3, 2, 3, 3}, b + 37)}, b + 38);
        check(
            "transposed_conv2d", [=](auto&, const auto& v) { return transposed_conv2d(v[0], v[1], stride, pad); },
            {random_input({2, 3, 3, 3}, b + 39), random_input({3, 2, 4, 4}, b + 40)}, b + 41);
        check(
            "bce(label)", [=](auto&, const auto& v) { return bce(v[0], static_cast<double>(s % 2)); },
            {random_input({8, 1}, b + 42, 0.05, 0.95)}, b + 43);
        const DT target = random_uniform<double>({8, 1}, 0, 1, b + 44);
        check(
            "bce(target)", [=](auto&, const auto& v) { return bce(v[0], target); },
            {random_input({8, 1}, b + 45, 0.05, 0.95)}, b + 46);
    }

    // Composite networks, every weight and input checked.
    for (std::uint64_t s = 0; s < 3; ++s) {
        const std::uint64_t b = 50000 + 100 * s;
        check(
            "discriminator-like net",
            [](auto&, const auto& v) {
                auto h = leaky_relu(add_channel_bias(conv2d(v[0], v[1], 2, 1), v[2]), 0.2);
                h = leaky_relu(conv2d(h, v[3], 2, 1), 0.2);
                auto flat = reshape(h, Shape{h.shape()[0], h.shape()[1] * h.shape()[2] * h.shape()[3]});
                return bce(sigmoid(add_row_bias(matmul(flat, v[4]), v[5])), 1.0);
            },
            {random_input({2, 1, 8, 8}, b), random_input({3, 1, 4, 4}, b + 1), random_input({3}, b + 2),
             random_input({2, 3, 4, 4}, b + 3), random_input({8, 1}, b + 4), random_input({1}, b + 5)},
            b + 6);
        check(
            "generator-like net",
            [](auto&, const auto& v) {
                auto h = relu(add_row_bias(matmul(v[0], v[1]), v[2]));
                auto img = transposed_conv2d(reshape(h, Shape{h.shape()[0], 2, 2, 2}), v[3], 2, 1);
                return mean(sigmoid(add_channel_bias(img, v[4])));
            },
            {random_input({3, 4}, b + 10), random_input({4, 8}, b + 11), random_input({8}, b + 12, 0.2, 1.0),
             random_input({2, 3, 4, 4}, b + 13), random_input({3}, b + 14)},
            b + 15);
        check(
            "mlp",
            [](auto&, const auto& v) {
                auto h = galc::tanh(add_row_bias(matmul(v[0], v[1]), v[2]));
                auto g = mul(h, sub(h, affine(h, 0.5, 0.1)));
                return add(bce(sigmoid(matmul(g, v[3])), 0.0), scale(sum(v[1]), 0.01));
            },
            {random_input({5, 4}, b + 20), random_input({4, 6}, b + 21), random_input({6}, b + 22),
             random_input({6, 1}, b + 23)},
            b + 24);
    }

    // The real model forwards, differentiated with respect to their inputs.
    const auto d = build_discriminator({2, 8, 8}, 71, {4, 6, 0, 4, 1});
    check(
        "discriminator",
        [&](Tape<double>& tape, const auto& v) {
            return convnet_forward(d, BoundParams<double>(tape, d, false), v[0]);
        },
        {random_input({2, 2, 8, 8}, 72, 0, 1)}, 73);
    const auto c = build_classifier({1, 8, 8}, 74, {4, 4, 6, 4, 1});
    check(
        "classifier",
        [&](Tape<double>& tape, const auto& v) {
            return convnet_forward(c, BoundParams<double>(tape, c, false), v[0]);
        },
        {random_input({3, 1, 8, 8}, 75, 0, 1)}, 76);
    GeneratorConfig gc;
    gc.latent_dim = 5;
    gc.base_channels = 3;
    gc.output = {1, 6, 6};
    const auto g = build_generator(gc, 77);
    check(
        "generator",
        [&](Tape<double>& tape, const auto& v) {
            return generator_forward(g, BoundParams<double>(tape, g, false), v[0]);
        },
        {random_input({2, 5}, 78)}, 79);

    const double secs = seconds_since(t0);
    return {failures == 0 && cases >= 100 && secs < 60,
            fmt("%zu cases, %zu over tolerance, worst rel err %.2e (%s), %.1f s", cases, failures, worst,
                worst_name.c_str(), secs)};
}

// ---------------------------------------------------------------------------

Outcome fid_analytics() {
    const auto t0 = std::chrono::steady_clock::now();
    Matrix feats(300, 12);
    const auto noise = random_uniform<double>({300, 12}, -2, 3, 5);
    feats.data.assign(noise.data().begin(), noise.data().end());
    const auto p = moments(feats);
    const double self = fid(p, p);

    double grid_err = 0;
    const double mus[] = {-2, -1, 0, 1, 2}, vars[] = {0.25, 1, 4};
    for (double m1 : mus)
        for (double v1 : vars)
            for (double m2 : mus)
                for (double v2 : vars) {
                    const GaussianStats a{{m1}, Matrix(1, 1, v1)}, b{{m2}, Matrix(1, 1, v2)};
                    const double closed = (m1 - m2) * (m1 - m2) + std::pow(std::sqrt(v1) - std::sqrt(v2), 2);
                    grid_err = std::max(grid_err, std::abs(fid(a, b) - closed));
                }

    double worst_ratio = 0;
    std::size_t max_d = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        const std::size_t d = i == 49 ? 64 : 1 + (i * 13) % 64;
        max_d = std::max(max_d, d);
        const auto b = random_uniform<double>({d, d}, -1, 1, 900 + i);
        Matrix bm(d, d);
        bm.data.assign(b.data().begin(), b.data().end());
        Matrix a = symmetrized(bm * bm.transposed());
        for (std::size_t k = 0; k < d; ++k) a(k, k) += 1e-3;
        const Matrix s = sqrtm_psd(a);
        worst_ratio = std::max(worst_ratio, (s * s - a).frobenius() / (1 + a.frobenius()));
    }
    const double secs = seconds_since(t0);
    return {self <= 1e-8 && grid_err <= 1e-6 && worst_ratio <= 1e-6 && secs < 30,
            fmt("fid(p,p) %.2e, 1-D grid max err %.2e over 225 pairs, sqrtm worst residual/(1+|A|) %.2e over 50 "
                "matrices up to d=%zu, %.1f s",
                self, grid_err, worst_ratio, max_d, secs)};
}

// ---------------------------------------------------------------------------

Outcome loss_values() {
    const std::vector<float> half(64, 0.5f), ones(64, 1.0f), zeros(64, 0.0f);
    const double at_half = value_v(half, half);
    const double half_err = std::abs(at_half + 2 * std::numbers::ln2);
    const double perfect = std::abs(value_v(ones, zeros));

    double worst = 0;
    for (std::uint64_t b = 0; b < 100; ++b) {
        const std::size_t n = 1 + b % 100;
        const Tensor real = random_uniform(Shape{n, 1}, 0.001, 0.999, 3000 + b);
        const Tensor fake = random_uniform(Shape{n, 1}, 0.001, 0.999, 4000 + b);
        worst = std::max(worst, std::abs(discriminator_loss(real, fake) + value_v(real.data(), fake.data())));
    }
    return {half_err <= 1e-6 && perfect <= 1e-5 && worst <= 1e-6,
            fmt("V(0.5,0.5) off by %.2e, perfect-D |V| %.2e, max |L_D + V| %.2e over 100 batches", half_err, perfect,
                worst)};
}

// ---------------------------------------------------------------------------

Outcome optimizer_convergence() {
    using DT = BasicTensor<double>;
    auto norm2 = [](const DT& t) {
        double s = 0;
        for (double v : t.data()) s += v * v;
        return s;
    };
    auto doubled = [](const DT& t) {
        DT g = t;
        for (auto& v : g.data()) v *= 2;
        return g;
    };
    const DT start = random_uniform<double>({10}, -1, 1, 77);
    const double f0 = norm2(start);

    const AdamHyper adam_h{};
    std::vector<DT> ap{start};
    auto as = BasicAdamState<double>::fresh(ap, adam_h);
    int adam_steps = -1;
    for (int i = 1; i <= 10000 && adam_steps < 0; ++i) {
        std::tie(ap, as) = adam_step(std::move(ap), std::vector<DT>{doubled(ap[0])}, std::move(as));
        if (norm2(ap[0]) < 1e-4 * f0) adam_steps = i;
    }
    std::vector<DT> gp{start};
    auto gs = BasicAdagradState<double>::fresh(gp, AdagradHyper{});
    int ada_steps = -1;
    for (int i = 1; i <= 10000 && ada_steps < 0; ++i) {
        std::tie(gp, gs) = adagrad_step(std::move(gp), std::vector<DT>{doubled(gp[0])}, std::move(gs));
        if (norm2(gp[0]) < 1e-4 * f0) ada_steps = i;
    }

    // Hand-computed first steps. Adam at t = 1 has m̂ = g and v̂ = g², so the
    // update is lr·g/(|g| + eps). Adagrad's is lr·g/(sqrt(g²) + eps).
    const DT theta(Shape{3}, std::vector<double>{1.0, -2.0, 0.5});
    const DT grad(Shape{3}, std::vector<double>{0.5, -3.0, 0.0});
    auto [a1, a1s] = adam_step(std::vector<DT>{theta}, std::vector<DT>{grad},
                               BasicAdamState<double>::fresh(std::vector<DT>{theta}, {0.1, 0.5, 0.999, 1e-8}));
    const double adam_hand[] = {1.0 - 0.1 * 0.5 / (0.5 + 1e-8), -2.0 + 0.1 * 3.0 / (3.0 + 1e-8), 0.5};
    auto [g1, g1s] = adagrad_step(std::vector<DT>{theta}, std::vector<DT>{grad},
                                  BasicAdagradState<double>::fresh(std::vector<DT>{theta}, {0.01, 1e-8}));
    const double ada_hand[] = {1.0 - 0.01 * 0.5 / (0.5 + 1e-8), -2.0 + 0.01 * 3.0 / (3.0 + 1e-8), 0.5};
    double hand_err = 0;
    for (std::size_t i = 0; i < 3; ++i)
        hand_err = std::max({hand_err, std::abs(a1[0][i] - adam_hand[i]), std::abs(g1[0][i] - ada_hand[i])});

    return {adam_h.beta1 == 0.5 && adam_steps > 0 && ada_steps > 0 && hand_err <= 1e-9,
            fmt("Adam (lr %g, beta1 %g) reached 1e-4 of start in %d steps, Adagrad (lr %g) in %d, first-step err %.1e",
                adam_h.lr, adam_h.beta1, adam_steps, AdagradHyper{}.lr, ada_steps, hand_err)};
}

// ---------------------------------------------------------------------------

Outcome classifier_sanity() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto train = generate_synthetic_dataset(400, {3, 16, 16}, 101);
    const auto test = generate_synthetic_dataset(100, {3, 16, 16}, 202);
    ClassifierTrainConfig cfg;
    cfg.seed = 303;
    const auto r = train_classifier(train, cfg);
    const double acc = evaluate(r.params, test);
    const double secs = seconds_since(t0);
    return {acc >= 0.95 && secs < 300, fmt("held-out accuracy %.2f%% on %zu items after %zu epochs, %.1f s", 100 * acc,
                                           test.size(), cfg.epochs, secs)};
}

// ---------------------------------------------------------------------------

Outcome gan_sanity() {
    const auto t0 = std::chrono::steady_clock::now();
    const Geometry geom{3, 16, 16};
    const Tensor train = generate_synthetic_dataset(400, geom, 1).class_images(0);
    const Tensor held_out = generate_synthetic_dataset(500, geom, 2).class_images(0);
    GanTrainConfig cfg;
    cfg.seed = 7;
    cfg.log_interval = 1;
    const auto r = train_gan(train, cfg);
    const double train_secs = seconds_since(t0);

    double tail = 0;
    std::size_t n_tail = 0;
    for (const auto& e : r.log)
        if (e.step + 100 > cfg.steps) {
            tail += e.mean_d_fake;
            ++n_tail;
        }
    tail /= static_cast<double>(n_tail);

    const auto fx = FeatureExtractor::raw_pixels();
    const auto ref = moments(extract_features(held_out, fx));
    const double gen_fid = fid(ref, moments(extract_features(sample(r.generator, 500, 11), fx)));
    const double noise_fid = fid(ref, moments(extract_features(random_uniform(Shape{500, 3, 16, 16}, 0, 1, 12), fx)));
    const double secs = seconds_since(t0);
    return {n_tail == 100 && tail > 0.2 && tail < 0.8 && gen_fid <= 0.2 * noise_fid && secs < 600,
            fmt("%zu steps, mean D(G(z)) over last %zu = %.3f, raw-pixel FID generated %.2f vs noise %.2f (ratio "
                "%.3f), train %.0f s, total %.0f s",
                cfg.steps, n_tail, tail, gen_fid, noise_fid, gen_fid / noise_fid, train_secs, secs)};
}

// ---------------------------------------------------------------------------

Outcome augmentation_arithmetic() {
    const Geometry tiny{1, 2, 2};
    PatchDataset f_o(tiny);
    for (std::size_t i = 0; i < 3324; ++i)
        f_o.add(Tensor(tiny.image_shape(), 0.25f), 0, Provenance::real, indexed_name("n", i));
    for (std::size_t i = 0; i < 4289; ++i)
        f_o.add(Tensor(tiny.image_shape(), 0.75f), 1, Provenance::real, indexed_name("t", i));
    GanTrainConfig small;
    small.latent_dim = 4;
    small.generator_channels = 2;
    std::map<int, ModelParams> gens;
    for (int label : {0, 1}) {
        small.seed = 40 + static_cast<std::uint64_t>(label);
        gens.emplace(label, initial_generator(tiny, small));
    }
    const auto f_a = augment(f_o, gens, 0.5, 99);
    const bool counts_ok = f_a.count(0) == 4986 && f_a.count(1) == 6434 && f_a.size() == 11420;
    const double rel = relative_increase(80.00, 87.00);
    return {counts_ok && rel == 8.75,
            fmt("{3324, 4289} at ratio 0.5 -> {%zu, %zu}, total %zu; relative_increase(80.00, 87.00) = %.17g",
                f_a.count(0), f_a.count(1), f_a.size(), rel)};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + GALC_CLI_PATH + "\" " + args + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_arg() { return std::string("--config \"") + GALC_SOURCE_DIR + "/configs/synthetic.conf\""; }

Outcome end_to_end_determinism() {
    const auto a = scratch("determinism_a"), b = scratch("determinism_b");
    const auto t0 = std::chrono::steady_clock::now();
    const int rc_a = run_cli("experiment " + config_arg() + " --seed 31 --deterministic --out \"" + a.string() + "\"");
    const double secs_a = seconds_since(t0);
    const int rc_b = run_cli("experiment " + config_arg() + " --seed 31 --deterministic --out \"" + b.string() + "\"");
    if (rc_a != 0 || rc_b != 0) return {false, fmt("experiment exited with %d and %d", rc_a, rc_b)};

    std::size_t compared = 0;
    std::vector<std::string> differing;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename().string();
        if (name == "report.txt") continue;  // wall-clock timestamps only
        ++compared;
        if (!fs::exists(b / name) || slurp(entry.path()) != slurp(b / name)) differing.push_back(name);
    }
    const bool have_all = fs::exists(a / "report.csv") && fs::exists(a / "generator_class0.galc") &&
                          fs::exists(a / "classifier_augmented.galc") && fs::exists(a / "gan_class1_log.csv");
    std::string detail =
        fmt("%zu artifacts compared, %zu differ; one full run took %.0f s", compared, differing.size(), secs_a);
    for (const auto& d : differing) detail += " [" + d + "]";
    return {have_all && differing.empty() && secs_a < 1200, detail};
}

Outcome end_to_end_plumbing() {
    const auto out = scratch("plumbing");
    const auto conf = scratch("plumbing.conf");
    // 50 per class with an 80/20 split leaves 40 per class for training.
    std::ofstream(conf) << "seed = 32\ndata.synthetic_per_class = 50\naugment.ratio = 0.5\n";
    const int rc = run_cli("experiment --config \"" + conf.string() + "\" --out \"" + out.string() + "\"");
    if (rc != 0) return {false, fmt("experiment exited with %d", rc)};
    const auto r = parse_report_csv(slurp(out / "report.csv"));
    const bool consistent = r.relative_increase == relative_increase(r.baseline_accuracy, r.augmented_accuracy);
    return {r.size_f_o == 80 && r.size_f_a == 120 && consistent && r.baseline_accuracy > 0,
            fmt("|F_o| %zu, |F_a| %zu, baseline %.2f%%, augmented %.2f%%, relative increase %.4f%% (recomputed %s)",
                r.size_f_o, r.size_f_a, r.baseline_accuracy, r.augmented_accuracy, r.relative_increase,
                consistent ? "matches" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"FID analytics", fid_analytics},
        {"adversarial loss values", loss_values},
        {"optimizer convergence", optimizer_convergence},
        {"classifier sanity", classifier_sanity},
        {"GAN sanity", gan_sanity},
        {"augmentation arithmetic", augmentation_arithmetic},
        {"end-to-end determinism", end_to_end_determinism},
        {"end-to-end effect plumbing", end_to_end_plumbing},
    };
    std::set<std::size_t> only;
    for (int i = 1; i < argc; ++i) only.insert(static_cast<std::size_t>(std::atoi(argv[i])));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.count(i + 1)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %zu %-28s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
