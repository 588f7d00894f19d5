// Experiment runner: synthetic data generation, WAV featurization, training
// under any mixing policy, stratified evaluation, the ablation grid, and
// report regeneration from cached predictions.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mix2/checkpoint.hpp"
#include "mix2/experiment.hpp"

namespace {

using namespace mix2;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::string policy;
    std::string subset;
    double threshold = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ExperimentConfig load_config(const CommonFlags& flags) {
    ExperimentConfig cfg = flags.config_path.empty()
                               ? ExperimentConfig{}
                               : ExperimentConfig::from_file(flags.config_path);
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (!flags.policy.empty()) cfg.policy = parse_policy(flags.policy);
    if (!flags.subset.empty()) cfg.subset = parse_subset_mode(flags.subset);
    if (flags.threshold >= 0.0) cfg.threshold = flags.threshold;
    if (flags.seed_set) cfg.seeds = {flags.seed};
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_policy = true) {
    cmd->add_option("--config", flags.config_path, "experiment config file");
    cmd->add_option("--out", flags.out, "output directory or file");
    cmd->add_option("--seed", flags.seed, "single seed, replaces the config seed list")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    if (with_policy)
        cmd->add_option("--policy", flags.policy,
                        "mixing policy: none|mixup|manifold|multimix|mixup+manifold|"
                        "mixup+multimix|manifold+multimix|mix2|w1,w2,w3");
    cmd->add_option("--subset", flags.subset, "evaluation subset: full|36n|36");
    cmd->add_option("--threshold", flags.threshold, "decision threshold in [0, 1]");
}

void print_profiles(const std::vector<ClassProfile>& profiles,
                    const std::vector<std::string>& names) {
    std::printf("%-12s %8s  %s\n", "class", "count", "group");
    for (const auto& p : profiles)
        std::printf("%-12s %8zu  %s\n", names[p.class_id].c_str(), p.train_count,
                    group_name(p.group));
}

int cmd_gen_data(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config(flags);
    if (flags.seed_set) cfg.data_seed = flags.seed;
    const std::string out = flags.out.empty() ? "synthetic.mix2feat" : flags.out;
    SyntheticDataset gen = generate_synthetic(cfg.synthetic_spec(), cfg.thresholds);
    write_feature_cache(gen.dataset, out);
    print_profiles(gen.profiles, gen.dataset.class_names);
    const std::size_t negatives = gen.dataset.negative_count();
    std::printf("examples: %zu  negatives: %zu (%.3f)\n", gen.dataset.size(), negatives,
                gen.dataset.size() ? double(negatives) / double(gen.dataset.size()) : 0.0);
    std::printf("wrote %s\n", out.c_str());
    return kExitOk;
}

int cmd_featurize(const std::string& audio_dir, const std::string& annotations,
                  const std::string& out) {
    FeaturizeSummary summary = featurize_directory(audio_dir, annotations, out);
    for (const auto& [rec, count] : summary.segments_per_recording)
        std::printf("%s: %zu segments\n", rec.c_str(), count);
    for (const auto& warning : summary.warnings)
        std::fprintf(stderr, "warning: %s\n", warning.c_str());
    std::printf("wrote %s (%zu segments)\n", out.c_str(), summary.total_segments);
    return kExitOk;
}

int cmd_train(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config(flags);
    PreparedData data = prepare_dataset(cfg);
    std::printf("train %zu / test %zu examples, %zu classes, policy %s\n",
                data.split.train.size(), data.split.test.size(), data.split.train.n_classes(),
                policy_label(cfg.policy).c_str());
    for (std::uint64_t seed : cfg.seeds) {
        const auto t0 = std::chrono::steady_clock::now();
        TrainedRun run = train_model(cfg, data.split.train, cfg.policy, seed);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::string dir = cfg.out_dir + "/seed" + std::to_string(seed);
        std::filesystem::create_directories(dir);
        save_checkpoint(run.net, dir + "/checkpoint.ckpt");

        nlohmann::json j;
        j["seed"] = seed;
        j["policy"] = policy_label(cfg.policy);
        j["epochs"] = nlohmann::json::array();
        for (const auto& log : run.epochs)
            j["epochs"].push_back({{"loss", log.mean_loss},
                                   {"iterations", log.iterations},
                                   {"batch_clamped", log.batch_clamped},
                                   {"strategies",
                                    {{"nomix", log.count(MixStrategy::NoMix)},
                                     {"mixup", log.count(MixStrategy::Mixup)},
                                     {"manifold", log.count(MixStrategy::ManifoldMixup)},
                                     {"multimix", log.count(MixStrategy::MultiMix)}}}});
        atomic_write_text(dir + "/train_log.json", j.dump(2) + "\n");
        std::printf("seed %llu: final loss %.6f (%zu epochs, %.1f s) -> %s\n",
                    static_cast<unsigned long long>(seed),
                    run.epochs.empty() ? 0.0 : run.epochs.back().mean_loss, run.epochs.size(),
                    secs, dir.c_str());
    }
    return kExitOk;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint) {
    ExperimentConfig cfg = load_config(flags);
    PreparedData data = prepare_dataset(cfg);
    TappedNetwork net(make_net_config(cfg, data.split.train), 0);
    load_checkpoint(net, checkpoint);
    EvalResult eval =
        evaluate_model(net, data.split.test, data.profiles, cfg.augment, cfg.threshold);
    const std::string dir = cfg.out_dir;
    write_report_files(dir, eval, labels_matrix(data.split.test), data.class_names,
                       data.profiles);
    auto show = [](const char* name, const std::optional<double>& v) {
        std::printf("%s: %s\n", name, v ? fmt6(*v).c_str() : "n/a");
    };
    show("macro_f all", eval.report.groups.all);
    show("macro_f frequent", eval.report.groups.frequent);
    show("macro_f common", eval.report.groups.common);
    show("macro_f rare", eval.report.groups.rare);
    std::printf("wrote reports to %s\n", dir.c_str());
    return kExitOk;
}

int cmd_ablate(const CommonFlags& flags) {
    ExperimentConfig cfg = load_config(flags);
    PreparedData data = prepare_dataset(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<PolicyResult> results = run_ablation(cfg, data, ablation_policy_names());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_ablation_files(cfg.out_dir, cfg, data, results);
    std::printf("%-18s %10s %10s %10s %10s\n", "policy", "frequent", "common", "rare", "all");
    for (const auto& r : results)
        std::printf("%-18s %10s %10s %10s %10s\n", r.label.c_str(), fmt6(r.frequent.mean).c_str(),
                    fmt6(r.common.mean).c_str(), fmt6(r.rare.mean).c_str(),
                    fmt6(r.all.mean).c_str());
    std::printf("%zu policies x %zu seeds in %.1f s -> %s/ablation.csv\n", results.size(),
                cfg.seeds.size(), secs, cfg.out_dir.c_str());
    return kExitOk;
}

int cmd_report(const std::string& pred_path, const std::string& out, double threshold) {
    Predictions pred = read_predictions(pred_path);
    StratifiedReport report =
        stratified_report(pred.probabilities, pred.labels, pred.profiles, threshold);
    std::filesystem::create_directories(out);
    atomic_write_text(out + "/report.json",
                      report_to_json(report, pred.class_names, pred.profiles).dump(2) + "\n");
    atomic_write_text(out + "/report_classes.csv",
                      report_classes_csv(report, pred.class_names, pred.profiles));
    atomic_write_text(out + "/report_polyphony.csv", report_polyphony_csv(report));
    std::printf("macro_f all: %s\n",
                report.groups.all ? fmt6(*report.groups.all).c_str() : "n/a");
    std::printf("wrote reports to %s\n", out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mix2: mixing-regularization training and evaluation harness"};
    app.require_subcommand(1);

    CommonFlags gen_flags;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic feature cache");
    add_common(gen, gen_flags, false);

    std::string fz_audio, fz_annotations, fz_out;
    CLI::App* featurize = app.add_subcommand("featurize", "WAV directory -> feature cache");
    featurize->add_option("--audio", fz_audio, "directory of .wav files")->required();
    featurize->add_option("--annotations", fz_annotations, "annotation csv")->required();
    featurize->add_option("--out", fz_out, "output cache path")->required();

    CommonFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "train under the configured policy");
    add_common(train, train_flags);

    CommonFlags eval_flags;
    std::string eval_checkpoint;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();

    CommonFlags ablate_flags;
    CLI::App* ablate = app.add_subcommand("ablate", "run the full policy grid");
    add_common(ablate, ablate_flags, false);

    std::string report_pred, report_out = "report";
    double report_threshold = 0.5;
    CLI::App* report = app.add_subcommand("report", "regenerate reports from predictions");
    report->add_option("--pred", report_pred, "predictions file")->required();
    report->add_option("--out", report_out, "output directory");
    report->add_option("--threshold", report_threshold, "decision threshold in [0, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_flags);
        if (featurize->parsed()) return cmd_featurize(fz_audio, fz_annotations, fz_out);
        if (train->parsed()) return cmd_train(train_flags);
        if (eval->parsed()) return cmd_eval(eval_flags, eval_checkpoint);
        if (ablate->parsed()) return cmd_ablate(ablate_flags);
        if (report->parsed()) return cmd_report(report_pred, report_out, report_threshold);
    } catch (const mix2::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const mix2::ParameterError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const mix2::NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const mix2::Error& e) {
        // ShapeError / DataError / unclassified library failures
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
