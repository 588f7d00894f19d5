// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each criterion is self-contained and uses its own oracle where one is
// called for, independent of the implementation path it checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mix2/experiment.hpp"
#include "mix2/mel.hpp"

using namespace mix2;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what, double seconds) {
    std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                seconds);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo, double hi) {
    Matrix m(r, c);
    for (double& v : m.storage()) v = rng.uniform(lo, hi);
    return m;
}

Matrix random_labels(std::size_t r, std::size_t c, Rng& rng, double p = 0.4) {
    Matrix m(r, c);
    for (double& v : m.storage()) v = rng.uniform() < p ? 1.0 : 0.0;
    return m;
}

// --- criterion 1: loss-level mixing equals materialized-target mixing ------

void criterion_loss_equivalence() {
    Timer timer;
    Rng rng(1001);
    bool ok = true;
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-6 * std::max({1e-30, std::abs(a), std::abs(b)});
    };
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(10);
        const std::size_t c = 1 + rng.uniform_index(6);
        Matrix logits = random_matrix(n, c, rng, -6.0, 6.0);
        Matrix labels = random_labels(n, c, rng);
        PairingPlan plan{rng.permutation(n)};
        MixCoefficient lambda(rng.uniform());
        ok = ok && close(mixed_bce_loss(logits, labels, plan, lambda),
                         bce_loss(logits, mixed_targets(labels, plan, lambda)));
        MixMatrix mat = sample_mix_matrix(n, 0.8, rng);
        ok = ok && close(multimix_bce_loss(logits, mat, labels),
                         bce_loss(logits, multimix_targets(labels, mat)));
    }
    report(1, ok && timer.seconds() < 5.0,
           "loss-level mixed BCE equals BCE against materialized targets (1e-6 rel, 1000x)",
           timer.seconds());
}

// --- criterion 2: gradient fidelity under every strategy -------------------

void criterion_gradient_fidelity() {
    Timer timer;
    const NetConfig cfg{6, {8, 5}, 4};  // 121 parameters, well under 500
    bool ok = true;
    double worst = 0.0;

    // deterministic rejection for rectifier-kink margin
    for (std::uint64_t seed = 2001;; ++seed) {
        TappedNetwork net(cfg, seed);
        Rng rng(seed * 13 + 5);
        Matrix x = random_matrix(6, 6, rng, -1.5, 1.5);
        Matrix y = random_labels(6, 4, rng);

        std::vector<MixRecord> records(4);
        records[1].strategy = MixStrategy::Mixup;
        records[1].lambda = MixCoefficient(0.35);
        records[1].plan = PairingPlan{rng.permutation(6)};
        records[1].tap = 0;
        records[2].strategy = MixStrategy::ManifoldMixup;
        records[2].lambda = MixCoefficient(0.6);
        records[2].plan = PairingPlan{rng.permutation(6)};
        records[2].tap = 2;
        records[3].strategy = MixStrategy::MultiMix;
        records[3].matrix = sample_mix_matrix(6, 1.0, rng);
        records[3].tap = 2;

        bool margin_ok = true;
        for (const MixRecord& rec : records) {
            net.forward_mixed(x, rec);
            if (net.min_abs_preactivation() < 2e-3) margin_ok = false;
        }
        if (!margin_ok) continue;

        const double h = 1e-4;
        for (const MixRecord& rec : records) {
            Matrix logits = net.forward_mixed(x, rec);
            ParameterStore store = net.parameters();
            store.zero_grads();
            net.backward(mixed_loss_gradient(logits, y, rec));
            for (auto& e : store.entries()) {
                for (std::size_t k = 0; k < e.value->size(); ++k) {
                    const double saved = (*e.value)[k];
                    (*e.value)[k] = saved + h;
                    const double up = mixed_loss_value(net.forward_mixed(x, rec), y, rec);
                    (*e.value)[k] = saved - h;
                    const double down = mixed_loss_value(net.forward_mixed(x, rec), y, rec);
                    (*e.value)[k] = saved;
                    const double fd = (up - down) / (2.0 * h);
                    const double analytic = (*e.grad)[k];
                    const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
                    worst = std::max(worst, std::abs(fd - analytic) / denom);
                }
            }
        }
        break;
    }
    ok = worst <= 1e-4;
    report(2, ok && timer.seconds() < 30.0,
           "analytic gradients match central differences for all four strategies (max rel " +
               fmt6(worst) + ")",
           timer.seconds());
}

// --- criterion 3: scheduler frequencies ------------------------------------

void criterion_scheduler() {
    Timer timer;
    Rng rng(3001);
    const int n = 100000;
    int counts[4] = {0, 0, 0, 0};
    Mix2Policy policy = Mix2Policy::mix2();
    for (int i = 0; i < n; ++i) counts[static_cast<int>(select_strategy(policy, rng))]++;
    const bool ok = counts[0] == 0 && std::abs(counts[1] / double(n) - 0.25) <= 0.02 &&
                    std::abs(counts[2] / double(n) - 0.50) <= 0.02 &&
                    std::abs(counts[3] / double(n) - 0.25) <= 0.02;
    report(3, ok && timer.seconds() < 1.0,
           "10^5 draws match (0.25, 0.50, 0.25) within 0.02", timer.seconds());
}

// --- criterion 4: operator identities --------------------------------------

void criterion_identities() {
    Timer timer;
    Rng rng(4001);
    bool ok = true;

    Matrix h = random_matrix(16, 7, rng, -2.0, 2.0);
    ok = ok && multimix(h, MixMatrix(Matrix::identity(16))) == h;

    PairingPlan plan{rng.permutation(16)};
    ok = ok && mix_rows(h, plan, MixCoefficient(1.0)) == h;

    TappedNetwork net(NetConfig{7, {9}, 3}, 41);
    Matrix plain = net.forward(h);
    MixRecord eye;
    eye.strategy = MixStrategy::MultiMix;
    eye.matrix = MixMatrix(Matrix::identity(16));
    eye.tap = 1;
    ok = ok && net.forward_mixed(h, eye) == plain;
    MixRecord lam1;
    lam1.strategy = MixStrategy::ManifoldMixup;
    lam1.lambda = MixCoefficient(1.0);
    lam1.plan = plan;
    lam1.tap = 1;
    ok = ok && net.forward_mixed(h, lam1) == plain;

    for (int i = 0; i < 10000 && ok; ++i) {
        MixMatrix m = sample_mix_matrix(1 + rng.uniform_index(12), 0.5, rng);
        for (std::size_t r = 0; r < m.size(); ++r) {
            double sum = 0.0;
            for (std::size_t c = 0; c < m.size(); ++c) {
                if (m(r, c) < 0.0) ok = false;
                sum += m(r, c);
            }
            if (std::abs(sum - 1.0) > 1e-9) ok = false;
        }
    }
    report(4, ok,
           "identity mixes are bit-exact no-ops; 10^4 Dirichlet matrices are row-stochastic "
           "within 1e-9",
           timer.seconds());
}

// --- criterion 5: metrics against the exhaustive oracle --------------------

void criterion_metrics_oracle() {
    Timer timer;
    Rng rng(5001);
    bool ok = true;

    {  // F(tp=2, fp=1, fn=1) = 2/3
        Matrix labels = Matrix::from_rows({{1.0}, {1.0}, {1.0}, {0.0}});
        Matrix preds = Matrix::from_rows({{1.0}, {1.0}, {0.0}, {1.0}});
        PerClassF f = per_class_f(preds, labels);
        ok = f.counts[0].tp == 2 && f.counts[0].fp == 1 && f.counts[0].fn == 1 &&
             std::abs(*f.f[0] - 2.0 / 3.0) < 1e-15;
    }

    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(50);
        const std::size_t c = 1 + rng.uniform_index(8);
        Matrix labels = random_labels(n, c, rng, 0.35);
        Matrix probs = random_matrix(n, c, rng, 0.0, 1.0);
        Matrix preds = binarize(probs, 0.5);

        std::vector<ClassProfile> profiles;
        for (std::size_t k = 0; k < c; ++k)
            profiles.push_back({k, k + 1,
                                k % 3 == 0   ? FrequencyGroup::Frequent
                                : k % 3 == 1 ? FrequencyGroup::Common
                                             : FrequencyGroup::Rare});
        StratifiedReport rep = stratified_report(probs, labels, profiles, 0.5);

        // exhaustive recount, class by class and group by group
        double sum_all = 0.0, sum_g[3] = {0, 0, 0};
        std::size_t n_all = 0, n_g[3] = {0, 0, 0};
        for (std::size_t k = 0; k < c && ok; ++k) {
            std::size_t tp = 0, fp = 0, fn = 0, pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool p = preds(i, k) != 0.0;
                const bool y = labels(i, k) != 0.0;
                pos += y;
                if (p && y) ++tp;
                if (p && !y) ++fp;
                if (!p && y) ++fn;
            }
            if (pos == 0) {
                ok = ok && !rep.per_class[k].has_value();
                continue;
            }
            const double f = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
            ok = ok && rep.per_class[k].has_value() && *rep.per_class[k] == f;
            sum_all += f;
            ++n_all;
            const int g = static_cast<int>(profiles[k].group);
            sum_g[g] += f;
            ++n_g[g];
        }
        if (!ok) break;
        auto check_cell = [&](const std::optional<double>& got, double sum, std::size_t cnt) {
            if (cnt == 0) return !got.has_value();
            return got.has_value() && *got == sum / static_cast<double>(cnt);
        };
        ok = ok && check_cell(rep.groups.all, sum_all, n_all);
        ok = ok && check_cell(rep.groups.frequent, sum_g[0], n_g[0]);
        ok = ok && check_cell(rep.groups.common, sum_g[1], n_g[1]);
        ok = ok && check_cell(rep.groups.rare, sum_g[2], n_g[2]);

        // polyphony rollup: recompute by filtering
        for (const auto& level : rep.polyphony) {
            double sum_l = 0.0;
            std::size_t n_l = 0, rows = 0;
            for (std::size_t k = 0; k < c; ++k) {
                std::size_t tp = 0, fp = 0, fn = 0, pos = 0;
                rows = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t ply = 0;
                    for (std::size_t cc = 0; cc < c; ++cc) ply += labels(i, cc) != 0.0 ? 1 : 0;
                    if (ply != level.level) continue;
                    ++rows;
                    const bool p = preds(i, k) != 0.0;
                    const bool y = labels(i, k) != 0.0;
                    pos += y;
                    if (p && y) ++tp;
                    if (p && !y) ++fp;
                    if (!p && y) ++fn;
                }
                if (pos == 0) continue;
                sum_l += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
                ++n_l;
            }
            ok = ok && n_l > 0 && level.macro_f == sum_l / static_cast<double>(n_l) &&
                 level.n_examples == rows;
        }
    }
    report(5, ok, "macro/group/polyphony reports equal the exhaustive oracle on 100 instances",
           timer.seconds());
}

// --- criterion 6: front-end shapes -----------------------------------------

void criterion_frontend() {
    Timer timer;
    std::vector<double> segment(kSegmentSamples, 0.0);
    for (std::size_t i = 0; i < segment.size(); ++i)
        segment[i] = 0.3 * std::sin(0.17 * static_cast<double>(i));
    MelSpectrogram spec = mel_spectrogram(segment);
    bool ok = spec.bands() == 128 && spec.frames() == 376;

    std::vector<double> minute(60 * kSampleRate, 0.05);
    ok = ok && segment_recording(minute, kSampleRate).size() == 58;
    report(6, ok, "3 s / 16 kHz segment -> (128, 376) mel; 60 s recording -> 58 segments",
           timer.seconds());
}

// --- criterion 7: directional replication at desk scale --------------------

void criterion_directional() {
    Timer timer;
    ExperimentConfig cfg;  // the default desk-scale experiment
    PreparedData data = prepare_dataset(cfg);
    const std::vector<std::string> policies = {"none", "mixup", "manifold", "multimix", "mix2"};
    std::vector<PolicyResult> results = run_ablation(cfg, data, policies);

    double none_rare = -1.0, mix2_rare = -1.0, mix2_all = -1.0, max_single = -1.0;
    for (const auto& r : results) {
        std::printf("  %-10s all %s rare %s\n", r.label.c_str(), fmt6(r.all.mean).c_str(),
                    fmt6(r.rare.mean).c_str());
        if (r.label == "none") none_rare = r.rare.mean.value_or(-1.0);
        if (r.label == "mix2") {
            mix2_rare = r.rare.mean.value_or(-1.0);
            mix2_all = r.all.mean.value_or(-1.0);
        }
        if (r.label == "mixup" || r.label == "manifold" || r.label == "multimix")
            max_single = std::max(max_single, r.all.mean.value_or(-1.0));
    }
    const bool rare_ok = mix2_rare >= none_rare;
    const bool all_ok = mix2_all >= max_single - 0.01;
    report(7, rare_ok && all_ok && timer.seconds() < 900.0,
           "mix2 rare " + fmt6(mix2_rare) + " >= none rare " + fmt6(none_rare) +
               "; mix2 all " + fmt6(mix2_all) + " >= max(single) - 0.01 = " +
               fmt6(max_single - 0.01),
           timer.seconds());
}

// --- criterion 8: ablation determinism -------------------------------------

void criterion_determinism() {
    Timer timer;
    namespace fs = std::filesystem;
    ExperimentConfig cfg;
    cfg.epochs = 6;  // full 8-policy grid; identical configs for both runs
    cfg.seeds = {1, 2};
    PreparedData data = prepare_dataset(cfg);

    const fs::path base = fs::temp_directory_path() / "mix2_acceptance_determinism";
    fs::remove_all(base);
    auto run_once = [&](const std::string& out) {
        std::vector<PolicyResult> results = run_ablation(cfg, data, ablation_policy_names());
        write_ablation_files(out, cfg, data, results);
    };
    run_once((base / "a").string());
    run_once((base / "b").string());
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(is)),
                           std::istreambuf_iterator<char>());
    };
    const std::string csv_a = slurp(base / "a" / "ablation.csv");
    const std::string csv_b = slurp(base / "b" / "ablation.csv");
    bool ok = !csv_a.empty() && csv_a == csv_b;
    // per-policy plot tables must agree byte for byte as well
    for (const auto& name : ablation_policy_names())
        ok = ok && slurp(base / "a" / name / "polyphony.csv") ==
                       slurp(base / "b" / name / "polyphony.csv");
    report(8, ok, "two ablate runs with identical configs produce byte-identical CSV tables",
           timer.seconds());
}

// --- criterion 9: subset semantics ------------------------------------------

void criterion_subsets() {
    Timer timer;
    const std::size_t C = 12;
    DatasetSplit split;
    for (auto* side : {&split.train, &split.test}) {
        for (std::size_t c = 0; c < C; ++c) side->class_names.push_back("c" + std::to_string(c));
        side->mel_rows = 1;
        side->mel_frames = 3;
    }
    auto add = [&](MultiLabelDataset& ds, std::vector<std::size_t> active, const char* rec) {
        Example e;
        e.features = {0.1, 0.2, 0.3};
        e.labels.assign(C, 0);
        for (std::size_t c : active) e.labels[c] = 1;
        e.recording_id = rec;
        ds.examples.push_back(std::move(e));
    };
    // classes 0..5 overlap; 6..9 train-only; 10..11 test-only
    add(split.train, {0, 1}, "t0");
    add(split.train, {2, 3}, "t1");
    add(split.train, {4, 5}, "t2");
    add(split.train, {6, 7}, "t3");
    add(split.train, {8, 9}, "t4");
    add(split.train, {}, "t5");
    add(split.test, {0, 2, 4}, "e0");
    add(split.test, {1, 3, 5}, "e1");
    add(split.test, {10, 11}, "e2");
    add(split.test, {}, "e3");

    DatasetSplit dropped = build_subset(split, SubsetMode::DropNonOverlap);
    bool ok = dropped.train.n_classes() == C - 6 && dropped.test.n_classes() == C - 6;

    DatasetSplit clean = build_subset(split, SubsetMode::DropNonOverlapAndNegatives);
    for (const auto& e : clean.train.examples) ok = ok && e.polyphony() >= 1;
    for (const auto& e : clean.test.examples) ok = ok && e.polyphony() >= 1;
    ok = ok && clean.train.size() == 3 && clean.test.size() == 2;
    report(9, ok,
           "4 train-only + 2 test-only classes -> C-6 kept; negatives mode leaves no all-zero "
           "rows",
           timer.seconds());
}

}  // namespace

int main() {
    criterion_loss_equivalence();
    criterion_gradient_fidelity();
    criterion_scheduler();
    criterion_identities();
    criterion_metrics_oracle();
    criterion_frontend();
    criterion_directional();
    criterion_determinism();
    criterion_subsets();
    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria failed\n", g_failures);
    return 1;
}
