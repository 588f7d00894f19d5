#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mix2/cache.hpp"
#include "mix2/checkpoint.hpp"
#include "mix2/config.hpp"
#include "mix2/dataset.hpp"
#include "mix2/metrics.hpp"
#include "mix2/mixops.hpp"
#include "mix2/nn.hpp"
#include "mix2/train.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// Deterministic file output
// ---------------------------------------------------------------------------

inline std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string fmt6(const std::optional<double>& v) { return v ? fmt6(*v) : "nan"; }

/// write-temp-then-rename so partially written result files never appear.
inline void atomic_write_text(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot open " + tmp.string());
        os << content;
        if (!os) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

// ---------------------------------------------------------------------------
// Dataset preparation
// ---------------------------------------------------------------------------

struct PreparedData {
    DatasetSplit split;
    std::vector<ClassProfile> profiles;  // train-split counts and groups
    std::vector<std::string> class_names;
};

/// Loads or generates the configured dataset, splits it at the recording
/// level, applies the subset mode, and profiles classes on the train counts.
inline PreparedData prepare_dataset(const ExperimentConfig& cfg) {
    MultiLabelDataset full;
    if (cfg.source == "synthetic") {
        full = generate_synthetic(cfg.synthetic_spec(), cfg.thresholds).dataset;
    } else {
        full = read_feature_cache(cfg.source);
    }
    DatasetSplit split = split_by_recording(full, cfg.split_ratio, cfg.data_seed);
    split = build_subset(split, cfg.subset);
    PreparedData out;
    out.profiles = build_class_profiles(split.train, cfg.thresholds);
    out.class_names = split.train.class_names;
    out.split = std::move(split);
    return out;
}

// ---------------------------------------------------------------------------
// Training and evaluation
// ---------------------------------------------------------------------------

struct TrainedRun {
    TappedNetwork net;
    std::vector<EpochLog> epochs;
};

inline NetConfig make_net_config(const ExperimentConfig& cfg, const MultiLabelDataset& train) {
    NetConfig nc;
    nc.input_dim = batch_feature_dim(train, cfg.augment);
    nc.encoder_dims = cfg.hidden;
    nc.n_classes = train.n_classes();
    return nc;
}

inline TrainedRun train_model(const ExperimentConfig& cfg, const MultiLabelDataset& train,
                              const Mix2Policy& policy, std::uint64_t seed) {
    TrainedRun run{TappedNetwork(make_net_config(cfg, train), seed), {}};
    AdamWState opt(cfg.optimizer);
    TrainOptions options{cfg.batch_size, cfg.mix, cfg.augment};
    Rng rng(seed);
    run.epochs.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch)
        run.epochs.push_back(train_epoch(run.net, train, policy, opt, options, rng));
    return run;
}

struct EvalResult {
    Matrix probabilities;  // n x C, sigmoid of the logits
    StratifiedReport report;
};

/// Forward pass over an evaluation set (no augmentation, same pooling as
/// training) followed by the stratified report.
inline EvalResult evaluate_model(TappedNetwork& net, const MultiLabelDataset& eval_set,
                                 const std::vector<ClassProfile>& profiles,
                                 const AugmentOptions& train_augment, double threshold) {
    if (eval_set.size() == 0) throw DataError("evaluate_model: empty evaluation set");
    AugmentOptions plain;
    plain.pool_time = train_augment.pool_time;
    const std::size_t want = batch_feature_dim(eval_set, plain);
    if (want != net.config().input_dim)
        throw ShapeError("evaluate_model: dataset feature width " + std::to_string(want) +
                         " vs network input_dim " + std::to_string(net.config().input_dim));

    Rng rng(0);  // unused by un-augmented materialization
    EvalResult out;
    out.probabilities = Matrix(eval_set.size(), eval_set.n_classes());
    Matrix labels(eval_set.size(), eval_set.n_classes());
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < eval_set.size(); start += chunk) {
        const std::size_t end = std::min(start + chunk, eval_set.size());
        std::vector<std::size_t> idx(end - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        MultiLabelBatch batch = materialize_batch(eval_set, idx, plain, rng);
        Matrix logits = net.forward(batch.features);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < logits.cols(); ++c) {
                out.probabilities(start + i, c) = stable_sigmoid(logits(i, c));
                labels(start + i, c) = batch.labels(i, c);
            }
    }
    out.report = stratified_report(out.probabilities, labels, profiles, threshold);
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const StratifiedReport& report,
                                     const std::vector<std::string>& class_names,
                                     const std::vector<ClassProfile>& profiles) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["threshold"] = report.threshold;
    j["macro_f"] = {{"all", opt(report.groups.all)},
                    {"frequent", opt(report.groups.frequent)},
                    {"common", opt(report.groups.common)},
                    {"rare", opt(report.groups.rare)}};
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        classes.push_back({{"class", class_names[c]},
                           {"group", group_name(profiles[c].group)},
                           {"train_count", profiles[c].train_count},
                           {"f", opt(report.per_class[c])},
                           {"tp", report.counts[c].tp},
                           {"fp", report.counts[c].fp},
                           {"fn", report.counts[c].fn},
                           {"support", report.counts[c].support()}});
    }
    j["per_class"] = std::move(classes);
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& level : report.polyphony)
        poly.push_back({{"level", level.level},
                        {"macro_f", level.macro_f},
                        {"n_examples", level.n_examples}});
    j["polyphony"] = std::move(poly);
    return j;
}

inline std::string report_classes_csv(const StratifiedReport& report,
                                      const std::vector<std::string>& class_names,
                                      const std::vector<ClassProfile>& profiles) {
    std::string csv = "class,group,f,tp,fp,fn,support\n";
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        csv += class_names[c];
        csv += ',';
        csv += group_name(profiles[c].group);
        csv += ',';
        csv += fmt6(report.per_class[c]);
        csv += ',' + std::to_string(report.counts[c].tp);
        csv += ',' + std::to_string(report.counts[c].fp);
        csv += ',' + std::to_string(report.counts[c].fn);
        csv += ',' + std::to_string(report.counts[c].support());
        csv += '\n';
    }
    return csv;
}

inline std::string report_polyphony_csv(const StratifiedReport& report) {
    std::string csv = "polyphony_level,macro_f,std\n";
    for (const auto& level : report.polyphony)
        csv += std::to_string(level.level) + ',' + fmt6(level.macro_f) + ',' + fmt6(0.0) + '\n';
    return csv;
}

// ---------------------------------------------------------------------------
// Predictions artifact: everything a report needs, so every emitted number is
// recomputable from this file alone.
// ---------------------------------------------------------------------------

inline constexpr const char* kPredMagic = "MIX2PRED";
inline constexpr std::uint8_t kPredVersion = 1;

struct Predictions {
    Matrix probabilities;  // n x C
    Matrix labels;         // n x C, 0/1
    std::vector<std::string> class_names;
    std::vector<ClassProfile> profiles;
};

inline void write_predictions(const Predictions& pred, const std::string& path) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("predictions: cannot open " + tmp);
    const std::size_t n = pred.probabilities.rows();
    const std::size_t c = pred.probabilities.cols();
    binio::write_bytes(os, kPredMagic, 8);
    binio::write_u8(os, kPredVersion);
    binio::write_u32(os, static_cast<std::uint32_t>(n));
    binio::write_u32(os, static_cast<std::uint32_t>(c));
    for (std::size_t k = 0; k < c; ++k) {
        binio::write_u16(os, static_cast<std::uint16_t>(pred.class_names[k].size()));
        binio::write_bytes(os, pred.class_names[k].data(), pred.class_names[k].size());
        binio::write_u8(os, static_cast<std::uint8_t>(pred.profiles[k].group));
        binio::write_u32(os, static_cast<std::uint32_t>(pred.profiles[k].train_count));
    }
    for (double v : pred.probabilities.storage()) binio::write_f32(os, static_cast<float>(v));
    const std::size_t words = (c + 31) / 32;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t w = 0; w < words; ++w) {
            std::uint32_t bits = 0;
            for (std::size_t b = 0; b < 32; ++b) {
                const std::size_t cc = w * 32 + b;
                if (cc < c && pred.labels(i, cc) != 0.0) bits |= 1u << b;
            }
            binio::write_u32(os, bits);
        }
    if (!os) throw DataError("predictions: write failed for " + tmp);
    os.close();
    fs::rename(tmp, target);
}

inline Predictions read_predictions(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("predictions: cannot open " + path);
    binio::expect_magic(is, kPredMagic, "predictions");
    const std::uint8_t version = binio::read_u8(is, "predictions version");
    if (version != kPredVersion)
        throw DataError("predictions: unsupported version " + std::to_string(version));
    const std::uint32_t n = binio::read_u32(is, "row count");
    const std::uint32_t c = binio::read_u32(is, "class count");
    Predictions pred;
    for (std::uint32_t k = 0; k < c; ++k) {
        const std::uint16_t len = binio::read_u16(is, "class name length");
        std::string name(len, '\0');
        binio::read_bytes(is, name.data(), len, "class name");
        pred.class_names.push_back(std::move(name));
        ClassProfile profile;
        profile.class_id = k;
        profile.group = static_cast<FrequencyGroup>(binio::read_u8(is, "group"));
        profile.train_count = binio::read_u32(is, "train count");
        pred.profiles.push_back(profile);
    }
    pred.probabilities = Matrix(n, c);
    for (double& v : pred.probabilities.storage())
        v = static_cast<double>(binio::read_f32(is, "probability"));
    pred.labels = Matrix(n, c);
    const std::size_t words = (c + 31) / 32;
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::size_t w = 0; w < words; ++w) {
            const std::uint32_t bits = binio::read_u32(is, "label bits");
            for (std::size_t b = 0; b < 32; ++b) {
                const std::size_t cc = w * 32 + b;
                if (cc < c) pred.labels(i, cc) = (bits >> b) & 1u ? 1.0 : 0.0;
            }
        }
    return pred;
}

/// Writes report.json, report_classes.csv, report_polyphony.csv and the
/// predictions artifact for one evaluated run.
inline void write_report_files(const std::string& dir, const EvalResult& eval,
                               const Matrix& labels, const std::vector<std::string>& class_names,
                               const std::vector<ClassProfile>& profiles) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    atomic_write_text(dir + "/report.json",
                      report_to_json(eval.report, class_names, profiles).dump(2) + "\n");
    atomic_write_text(dir + "/report_classes.csv",
                      report_classes_csv(eval.report, class_names, profiles));
    atomic_write_text(dir + "/report_polyphony.csv", report_polyphony_csv(eval.report));
    write_predictions({eval.probabilities, labels, class_names, profiles},
                      dir + "/predictions.mix2pred");
}

inline Matrix labels_matrix(const MultiLabelDataset& ds) {
    Matrix labels(ds.size(), ds.n_classes());
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < ds.n_classes(); ++c) labels(i, c) = ds.examples[i].labels[c];
    return labels;
}

// ---------------------------------------------------------------------------
// Multi-seed aggregation and the ablation grid
// ---------------------------------------------------------------------------

struct SeedOutcome {
    std::uint64_t seed = 0;
    StratifiedReport report;
    Matrix probabilities;
    std::array<std::size_t, 4> strategy_counts{};
    std::vector<double> epoch_losses;
};

struct MeanStd {
    std::optional<double> mean;
    std::optional<double> stddev;  // population std over the declared seeds
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - m) * (x - m);
    var /= static_cast<double>(xs.size());
    return {m, std::sqrt(var)};
}

struct PolicyResult {
    std::string label;
    Mix2Policy policy;
    std::vector<SeedOutcome> runs;
    MeanStd frequent, common, rare, all;
    std::map<std::size_t, MeanStd> polyphony;
};

inline void aggregate_policy(PolicyResult& result) {
    auto gather = [&](auto pick) {
        std::vector<double> xs;
        for (const auto& run : result.runs) {
            const std::optional<double> v = pick(run.report);
            if (v) xs.push_back(*v);
        }
        return mean_std(xs);
    };
    result.frequent = gather([](const StratifiedReport& r) { return r.groups.frequent; });
    result.common = gather([](const StratifiedReport& r) { return r.groups.common; });
    result.rare = gather([](const StratifiedReport& r) { return r.groups.rare; });
    result.all = gather([](const StratifiedReport& r) { return r.groups.all; });
    std::map<std::size_t, std::vector<double>> levels;
    for (const auto& run : result.runs)
        for (const auto& level : run.report.polyphony)
            levels[level.level].push_back(level.macro_f);
    for (const auto& [level, xs] : levels) result.polyphony[level] = mean_std(xs);
}

/// Trains and evaluates one policy across the configured seeds.
inline PolicyResult run_policy(const ExperimentConfig& cfg, const PreparedData& data,
                               const Mix2Policy& policy, const std::string& label) {
    PolicyResult result;
    result.label = label;
    result.policy = policy;
    result.runs.resize(cfg.seeds.size());
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        const std::uint64_t seed = cfg.seeds[i];
        TrainedRun trained = train_model(cfg, data.split.train, policy, seed);
        EvalResult eval = evaluate_model(trained.net, data.split.test, data.profiles,
                                         cfg.augment, cfg.threshold);
        SeedOutcome outcome;
        outcome.seed = seed;
        outcome.report = std::move(eval.report);
        outcome.probabilities = std::move(eval.probabilities);
        for (const auto& log : trained.epochs) {
            for (std::size_t s = 0; s < 4; ++s)
                outcome.strategy_counts[s] += log.strategy_counts[s];
            outcome.epoch_losses.push_back(log.mean_loss);
        }
        result.runs[i] = std::move(outcome);
    }
    aggregate_policy(result);
    return result;
}

inline const std::vector<std::string>& ablation_policy_names() {
    static const std::vector<std::string> names = {
        "none",           "mixup",          "manifold",
        "multimix",       "mixup+manifold", "mixup+multimix",
        "manifold+multimix", "mix2"};
    return names;
}

/// Fixed column order: policy, frequent, common, rare, all (mean then std).
inline std::string ablation_csv(const std::vector<PolicyResult>& results) {
    std::string csv =
        "policy,frequent_mean,frequent_std,common_mean,common_std,"
        "rare_mean,rare_std,all_mean,all_std\n";
    for (const auto& r : results) {
        csv += r.label;
        for (const MeanStd* cell : {&r.frequent, &r.common, &r.rare, &r.all}) {
            csv += ',' + fmt6(cell->mean);
            csv += ',' + fmt6(cell->stddev);
        }
        csv += '\n';
    }
    return csv;
}

inline std::string policy_polyphony_csv(const PolicyResult& result) {
    std::string csv = "polyphony_level,macro_f,std\n";
    for (const auto& [level, cell] : result.polyphony)
        csv += std::to_string(level) + ',' + fmt6(cell.mean) + ',' + fmt6(cell.stddev) + '\n';
    return csv;
}

inline std::size_t worker_count(std::size_t n_jobs) {
    std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MIX2_THREADS")) {
        try {
            workers = std::max<std::size_t>(1, std::stoul(env));
        } catch (const std::exception&) {
            throw UsageError("MIX2_THREADS must be a positive integer");
        }
    }
    return std::min(workers, std::max<std::size_t>(1, n_jobs));
}

/// Runs the policy grid (one run per policy and seed, optionally in parallel)
/// and aggregates per policy. Results land in deterministic slots, so output
/// files do not depend on scheduling.
inline std::vector<PolicyResult> run_ablation(const ExperimentConfig& cfg,
                                              const PreparedData& data,
                                              const std::vector<std::string>& policy_names) {
    std::vector<PolicyResult> results(policy_names.size());
    for (std::size_t p = 0; p < policy_names.size(); ++p) {
        results[p].label = policy_names[p];
        results[p].policy = parse_policy(policy_names[p]);
        results[p].runs.resize(cfg.seeds.size());
    }

    struct Job {
        std::size_t policy_index;
        std::size_t seed_index;
    };
    std::vector<Job> jobs;
    for (std::size_t p = 0; p < policy_names.size(); ++p)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.push_back({p, s});

    const std::size_t workers = worker_count(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size() || failed.load()) return;
            const Job job = jobs[j];
            try {
                const std::uint64_t seed = cfg.seeds[job.seed_index];
                TrainedRun trained =
                    train_model(cfg, data.split.train, results[job.policy_index].policy, seed);
                EvalResult eval = evaluate_model(trained.net, data.split.test, data.profiles,
                                                 cfg.augment, cfg.threshold);
                SeedOutcome outcome;
                outcome.seed = seed;
                outcome.report = std::move(eval.report);
                outcome.probabilities = std::move(eval.probabilities);
                for (const auto& log : trained.epochs) {
                    for (std::size_t s = 0; s < 4; ++s)
                        outcome.strategy_counts[s] += log.strategy_counts[s];
                    outcome.epoch_losses.push_back(log.mean_loss);
                }
                results[job.policy_index].runs[job.seed_index] = std::move(outcome);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw Error("ablation run failed: " + first_error);

    for (auto& r : results) aggregate_policy(r);
    return results;
}

/// Writes the ablation table plus per-policy and per-seed artifacts.
inline void write_ablation_files(const std::string& out_dir, const ExperimentConfig& cfg,
                                 const PreparedData& data,
                                 const std::vector<PolicyResult>& results) {
    atomic_write_text(out_dir + "/ablation.csv", ablation_csv(results));
    const Matrix test_labels = labels_matrix(data.split.test);
    for (const auto& r : results) {
        const std::string policy_dir = out_dir + "/" + r.label;
        atomic_write_text(policy_dir + "/polyphony.csv", policy_polyphony_csv(r));
        for (const auto& run : r.runs) {
            const std::string run_dir = policy_dir + "/seed" + std::to_string(run.seed);
            EvalResult eval;
            eval.probabilities = run.probabilities;
            eval.report = run.report;
            write_report_files(run_dir, eval, test_labels, data.class_names, data.profiles);
        }
    }
    nlohmann::json j;
    j["policies"] = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json p;
        p["policy"] = r.label;
        auto cell = [](const MeanStd& c) {
            return nlohmann::json{{"mean", c.mean ? nlohmann::json(*c.mean) : nullptr},
                                  {"std", c.stddev ? nlohmann::json(*c.stddev) : nullptr}};
        };
        p["frequent"] = cell(r.frequent);
        p["common"] = cell(r.common);
        p["rare"] = cell(r.rare);
        p["all"] = cell(r.all);
        nlohmann::json counts = nlohmann::json::object();
        std::array<std::size_t, 4> totals{};
        for (const auto& run : r.runs)
            for (std::size_t s = 0; s < 4; ++s) totals[s] += run.strategy_counts[s];
        counts["nomix"] = totals[0];
        counts["mixup"] = totals[1];
        counts["manifold"] = totals[2];
        counts["multimix"] = totals[3];
        p["strategy_counts"] = std::move(counts);
        j["policies"].push_back(std::move(p));
    }
    j["seeds"] = cfg.seeds;
    atomic_write_text(out_dir + "/ablation.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Featurization pipeline: WAV directory + annotation CSV -> feature cache
// ---------------------------------------------------------------------------

struct FeaturizeSummary {
    std::vector<std::pair<std::string, std::size_t>> segments_per_recording;
    std::vector<std::string> warnings;
    std::size_t total_segments = 0;
};

inline FeaturizeSummary featurize_directory(const std::string& audio_dir,
                                            const std::string& annotations_csv,
                                            const std::string& out_cache) {
    namespace fs = std::filesystem;
    AnnotationTable table = parse_annotations(annotations_csv);

    std::vector<fs::path> wavs;
    if (!fs::is_directory(audio_dir)) throw DataError("featurize: not a directory: " + audio_dir);
    for (const auto& entry : fs::directory_iterator(audio_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) throw DataError("featurize: no .wav files in " + audio_dir);

    MultiLabelDataset ds;
    ds.class_names = table.class_names;
    ds.mel_rows = kMelBands;
    ds.mel_frames = kMelFrames;

    FeaturizeSummary summary;
    for (const auto& wav : wavs) {
        const std::string recording_id = wav.stem().string();
        WavData audio;
        try {
            audio = read_wav(wav.string());
        } catch (const DataError& e) {
            summary.warnings.push_back(std::string("skipped ") + wav.string() + ": " + e.what());
            continue;
        }
        const std::vector<double> at16k =
            audio.sample_rate == kSampleRate ? std::move(audio.samples)
                                             : resample(audio.samples, audio.sample_rate,
                                                        kSampleRate);
        const auto segments = segment_recording(at16k, kSampleRate, recording_id);
        for (const auto& seg : segments) {
            MelSpectrogram spec = mel_spectrogram(seg);
            Example e;
            e.features = spec.values.storage();
            e.recording_id = seg.recording_id;
            e.offset_s = seg.offset_s;
            e.labels.assign(ds.class_names.size(), 0);
            const auto it = table.rows.find({recording_id, std::lround(seg.offset_s)});
            if (it != table.rows.end())
                for (const auto& name : it->second) {
                    const auto pos = std::lower_bound(ds.class_names.begin(),
                                                      ds.class_names.end(), name);
                    if (pos != ds.class_names.end() && *pos == name)
                        e.labels[static_cast<std::size_t>(pos - ds.class_names.begin())] = 1;
                }
            ds.examples.push_back(std::move(e));
        }
        summary.segments_per_recording.emplace_back(recording_id, segments.size());
        summary.total_segments += segments.size();
    }
    if (summary.total_segments == 0)
        throw DataError("featurize: every input was skipped or too short");
    write_feature_cache(ds, out_cache);
    return summary;
}

}  // namespace mix2
