#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mix2/errors.hpp"
#include "mix2/matrix.hpp"
#include "mix2/mel.hpp"
#include "mix2/mixops.hpp"
#include "mix2/rng.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// Dataset containers
// ---------------------------------------------------------------------------

struct Example {
    std::vector<double> features;       // flattened (mel_rows x mel_frames), row-major
    std::vector<std::uint8_t> labels;   // one 0/1 entry per class
    std::string recording_id;
    double offset_s = 0.0;

    std::size_t polyphony() const {
        std::size_t p = 0;
        for (auto v : labels) p += v;
        return p;
    }
};

struct MultiLabelDataset {
    std::vector<Example> examples;
    std::vector<std::string> class_names;
    std::size_t mel_rows = 1;    // 1 for plain feature vectors
    std::size_t mel_frames = 0;  // feature length / mel_rows

    std::size_t size() const { return examples.size(); }
    std::size_t n_classes() const { return class_names.size(); }

    void validate() const {
        for (const auto& e : examples) {
            if (e.labels.size() != class_names.size())
                throw ShapeError("dataset: label width " + std::to_string(e.labels.size()) +
                                 " vs " + std::to_string(class_names.size()) + " classes");
            if (mel_rows * mel_frames != e.features.size())
                throw ShapeError("dataset: feature length " + std::to_string(e.features.size()) +
                                 " vs mel shape " + std::to_string(mel_rows) + "x" +
                                 std::to_string(mel_frames));
        }
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(class_names.size(), 0);
        for (const auto& e : examples)
            for (std::size_t c = 0; c < e.labels.size(); ++c) counts[c] += e.labels[c];
        return counts;
    }

    std::size_t negative_count() const {
        std::size_t n = 0;
        for (const auto& e : examples) n += e.polyphony() == 0 ? 1 : 0;
        return n;
    }
};

// ---------------------------------------------------------------------------
// Class frequency groups
// ---------------------------------------------------------------------------

enum class FrequencyGroup { Frequent, Common, Rare };

inline const char* group_name(FrequencyGroup g) {
    switch (g) {
        case FrequencyGroup::Frequent: return "frequent";
        case FrequencyGroup::Common: return "common";
        case FrequencyGroup::Rare: return "rare";
    }
    return "?";
}

/// Half-open thresholds on training counts: count >= frequent_min is
/// frequent, common_min <= count < frequent_min is common, below is rare.
struct GroupThresholds {
    std::size_t frequent_min = 10000;
    std::size_t common_min = 5000;
};

inline FrequencyGroup classify_count(std::size_t count, const GroupThresholds& t) {
    if (count >= t.frequent_min) return FrequencyGroup::Frequent;
    if (count >= t.common_min) return FrequencyGroup::Common;
    return FrequencyGroup::Rare;
}

struct ClassProfile {
    std::size_t class_id = 0;
    std::size_t train_count = 0;
    FrequencyGroup group = FrequencyGroup::Rare;
};

inline std::vector<ClassProfile> build_class_profiles(const MultiLabelDataset& train,
                                                      const GroupThresholds& thresholds) {
    std::vector<ClassProfile> profiles;
    const auto counts = train.class_counts();
    profiles.reserve(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        profiles.push_back({c, counts[c], classify_count(counts[c], thresholds)});
    return profiles;
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

/// Structural mirror of the corpus at desk scale: long-tail per-class counts,
/// multi-label polyphony, and a sizeable fraction of negative examples.
struct SyntheticSpec {
    std::vector<std::size_t> class_counts;  // exact positives per class
    std::vector<double> polyphony;          // P(level == index + 1)
    double negative_fraction = 0.36;
    std::size_t feature_dim = 64;
    double noise_std = 0.6;
    double prototype_scale = 1.0;
    std::uint64_t seed = 99;

    void validate() const {
        if (class_counts.empty()) throw ParameterError("SyntheticSpec: no classes");
        if (polyphony.empty()) throw ParameterError("SyntheticSpec: empty polyphony");
        if (polyphony.size() > class_counts.size())
            throw ParameterError("SyntheticSpec: max polyphony exceeds class count");
        double sum = 0.0;
        for (double p : polyphony) {
            if (p < 0.0) throw ParameterError("SyntheticSpec: negative polyphony weight");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ParameterError("SyntheticSpec: polyphony probabilities sum to " +
                                 std::to_string(sum));
        if (negative_fraction < 0.0 || negative_fraction > 1.0)
            throw ParameterError("SyntheticSpec: negative_fraction outside [0, 1]");
        if (feature_dim == 0) throw ParameterError("SyntheticSpec: zero feature_dim");
    }

    /// Geometric per-class count law, one knob for imbalance severity.
    static std::vector<std::size_t> geometric_counts(std::size_t n_classes, double base,
                                                     double ratio) {
        std::vector<std::size_t> counts(n_classes);
        for (std::size_t c = 0; c < n_classes; ++c)
            counts[c] = static_cast<std::size_t>(
                std::llround(base * std::pow(ratio, static_cast<double>(c))));
        return counts;
    }
};

struct SyntheticDataset {
    MultiLabelDataset dataset;
    std::vector<ClassProfile> profiles;  // groups over the full generated set
};

/// Count-driven generation: each class c receives exactly class_counts[c]
/// positive slots; an example with active set S is the superposition of the
/// class prototypes plus Gaussian noise, negatives are pure noise. The number
/// of negatives is round(n_pos * f / (1 - f)). When f == 1 the count mass is
/// reinterpreted as a pure-noise dataset size (positives and an all-negative
/// dataset cannot coexist).
inline SyntheticDataset generate_synthetic(const SyntheticSpec& spec,
                                           const GroupThresholds& thresholds = {}) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t n_classes = spec.class_counts.size();
    const std::size_t d = spec.feature_dim;

    // Fixed unit prototypes, scaled.
    std::vector<std::vector<double>> prototypes(n_classes, std::vector<double>(d));
    for (auto& proto : prototypes) {
        double norm = 0.0;
        for (double& v : proto) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : proto) v = v / norm * spec.prototype_scale;
    }

    MultiLabelDataset ds;
    ds.mel_rows = 1;
    ds.mel_frames = d;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::string name = "class" + std::to_string(c);
        if (c < 10) name.insert(5, "0");
        ds.class_names.push_back(std::move(name));
    }

    auto noise_example = [&] {
        Example e;
        e.features.resize(d);
        for (double& v : e.features) v = rng.normal() * spec.noise_std;
        e.labels.assign(n_classes, 0);
        return e;
    };

    std::size_t n_pos = 0;
    if (spec.negative_fraction < 1.0) {
        std::vector<std::size_t> remaining = spec.class_counts;
        std::size_t total_remaining = 0;
        for (std::size_t c : remaining) total_remaining += c;

        while (total_remaining > 0) {
            // Draw a polyphony level, clamped to what is still available.
            std::size_t level = 1;
            {
                const double u = rng.uniform();
                double acc = 0.0;
                for (std::size_t i = 0; i < spec.polyphony.size(); ++i) {
                    acc += spec.polyphony[i];
                    if (u < acc) {
                        level = i + 1;
                        break;
                    }
                    if (i + 1 == spec.polyphony.size()) level = i + 1;
                }
            }
            std::size_t available = 0;
            for (std::size_t cnt : remaining) available += cnt > 0 ? 1 : 0;
            level = std::min(level, available);
            level = std::min(level, total_remaining);

            // Pick `level` distinct classes weighted by remaining need.
            Example e = noise_example();
            for (std::size_t pick = 0; pick < level; ++pick) {
                std::size_t pool = 0;
                for (std::size_t c = 0; c < n_classes; ++c)
                    if (remaining[c] > 0 && !e.labels[c]) pool += remaining[c];
                if (pool == 0) break;
                std::size_t target = rng.uniform_index(pool);
                for (std::size_t c = 0; c < n_classes; ++c) {
                    if (remaining[c] == 0 || e.labels[c]) continue;
                    if (target < remaining[c]) {
                        e.labels[c] = 1;
                        --remaining[c];
                        --total_remaining;
                        for (std::size_t k = 0; k < d; ++k) e.features[k] += prototypes[c][k];
                        break;
                    }
                    target -= remaining[c];
                }
            }
            ds.examples.push_back(std::move(e));
            ++n_pos;
        }
    }

    std::size_t n_neg = 0;
    if (spec.negative_fraction >= 1.0) {
        for (std::size_t c : spec.class_counts) n_neg += c;
    } else if (spec.negative_fraction > 0.0) {
        n_neg = static_cast<std::size_t>(std::llround(
            static_cast<double>(n_pos) * spec.negative_fraction / (1.0 - spec.negative_fraction)));
    }
    for (std::size_t i = 0; i < n_neg; ++i) ds.examples.push_back(noise_example());

    // Interleave negatives among positives deterministically, then tag each
    // example as its own recording.
    {
        std::vector<std::size_t> order = rng.permutation(ds.examples.size());
        std::vector<Example> shuffled;
        shuffled.reserve(ds.examples.size());
        for (std::size_t i : order) shuffled.push_back(std::move(ds.examples[i]));
        ds.examples = std::move(shuffled);
    }
    for (std::size_t i = 0; i < ds.examples.size(); ++i)
        ds.examples[i].recording_id = "syn" + std::to_string(i);

    SyntheticDataset out;
    out.profiles = build_class_profiles(ds, thresholds);
    out.dataset = std::move(ds);
    return out;
}

// ---------------------------------------------------------------------------
// Recording-level split
// ---------------------------------------------------------------------------

struct DatasetSplit {
    MultiLabelDataset train;
    MultiLabelDataset test;
};

/// Assigns whole recordings to train or test so overlapping windows never
/// leak across the split.
inline DatasetSplit split_by_recording(const MultiLabelDataset& ds, double train_ratio,
                                       std::uint64_t seed) {
    if (train_ratio <= 0.0 || train_ratio >= 1.0)
        throw ParameterError("split_by_recording: ratio must lie strictly inside (0, 1)");
    std::vector<std::string> recordings;
    std::unordered_map<std::string, std::size_t> seen;
    for (const auto& e : ds.examples)
        if (seen.emplace(e.recording_id, recordings.size()).second)
            recordings.push_back(e.recording_id);
    if (recordings.size() < 2)
        throw DataError("split_by_recording: need at least 2 recordings, have " +
                        std::to_string(recordings.size()));

    Rng rng(seed);
    std::vector<std::size_t> order = rng.permutation(recordings.size());
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_ratio * static_cast<double>(recordings.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, recordings.size() - 1);

    std::vector<bool> in_train(recordings.size(), false);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

    DatasetSplit split;
    for (auto* side : {&split.train, &split.test}) {
        side->class_names = ds.class_names;
        side->mel_rows = ds.mel_rows;
        side->mel_frames = ds.mel_frames;
    }
    for (const auto& e : ds.examples)
        (in_train[seen[e.recording_id]] ? split.train : split.test).examples.push_back(e);
    return split;
}

// ---------------------------------------------------------------------------
// Subsets
// ---------------------------------------------------------------------------

enum class SubsetMode { Full, DropNonOverlap, DropNonOverlapAndNegatives };

inline SubsetMode parse_subset_mode(const std::string& s) {
    if (s == "full") return SubsetMode::Full;
    if (s == "36n" || s == "drop_nonoverlap") return SubsetMode::DropNonOverlap;
    if (s == "36" || s == "drop_nonoverlap_and_negatives")
        return SubsetMode::DropNonOverlapAndNegatives;
    throw UsageError("unknown subset mode: " + s);
}

/// Drops classes absent from either side of the split (relabeling columns);
/// the *_and_negatives mode additionally drops examples whose label row is
/// all zero.
inline DatasetSplit build_subset(const DatasetSplit& split, SubsetMode mode) {
    if (mode == SubsetMode::Full) return split;
    const auto train_counts = split.train.class_counts();
    const auto test_counts = split.test.class_counts();
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < split.train.n_classes(); ++c)
        if (train_counts[c] > 0 && test_counts[c] > 0) keep.push_back(c);

    DatasetSplit out;
    for (auto [src, dst] : {std::pair{&split.train, &out.train}, {&split.test, &out.test}}) {
        dst->mel_rows = src->mel_rows;
        dst->mel_frames = src->mel_frames;
        for (std::size_t c : keep) dst->class_names.push_back(src->class_names[c]);
        for (const auto& e : src->examples) {
            Example ne;
            ne.features = e.features;
            ne.recording_id = e.recording_id;
            ne.offset_s = e.offset_s;
            ne.labels.reserve(keep.size());
            for (std::size_t c : keep) ne.labels.push_back(e.labels[c]);
            if (mode == SubsetMode::DropNonOverlapAndNegatives && ne.polyphony() == 0) continue;
            dst->examples.push_back(std::move(ne));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Annotation table
// ---------------------------------------------------------------------------

/// Segment-level labels for real audio: one row per annotated window.
struct AnnotationTable {
    // (recording_id, whole-second offset) -> class names active in the window
    std::map<std::pair<std::string, long>, std::vector<std::string>> rows;
    std::vector<std::string> class_names;  // sorted, deduplicated
};

/// Parses `recording_id,offset_s,class_list` with a `;`-separated class list;
/// an empty list marks a negative segment. Errors carry the line number.
inline AnnotationTable parse_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("annotations: cannot open " + path);
    AnnotationTable table;
    std::set<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != "recording_id,offset_s,class_list")
                throw DataError("annotations: bad header at line 1 of " + path);
            continue;
        }
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("annotations: malformed row at line " + std::to_string(line_no) +
                            " of " + path);
        const std::string rec = line.substr(0, c1);
        const std::string off_s = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string classes = line.substr(c2 + 1);
        if (rec.empty())
            throw DataError("annotations: empty recording_id at line " + std::to_string(line_no));
        double offset = 0.0;
        try {
            std::size_t used = 0;
            offset = std::stod(off_s, &used);
            if (used != off_s.size()) throw std::invalid_argument(off_s);
        } catch (const std::exception&) {
            throw DataError("annotations: bad offset at line " + std::to_string(line_no) + " of " +
                            path);
        }
        std::vector<std::string> active;
        std::stringstream ss(classes);
        std::string item;
        while (std::getline(ss, item, ';'))
            if (!item.empty()) {
                names.insert(item);
                active.push_back(item);
            }
        table.rows[{rec, std::lround(offset)}] = std::move(active);
    }
    table.class_names.assign(names.begin(), names.end());
    return table;
}

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

struct AugmentOptions {
    bool spec_augment = false;
    std::size_t time_masks = 2;
    std::size_t freq_masks = 2;
    std::size_t max_time_width = 60;
    std::size_t max_freq_width = 8;
    bool time_shift = false;
    bool pool_time = true;  // mean over frames for mel-shaped features
};

/// Width of the feature rows materialize_batch will produce.
inline std::size_t batch_feature_dim(const MultiLabelDataset& ds, const AugmentOptions& opts) {
    return ds.mel_rows > 1 && opts.pool_time ? ds.mel_rows : ds.mel_rows * ds.mel_frames;
}

/// Gathers the indexed examples into a dense batch, applying the configured
/// spectrogram augmentations to mel-shaped features on the way.
inline MultiLabelBatch materialize_batch(const MultiLabelDataset& ds,
                                         const std::vector<std::size_t>& indices,
                                         const AugmentOptions& opts, Rng& rng) {
    if (indices.empty()) throw ParameterError("materialize_batch: empty batch");
    const bool mel_shaped = ds.mel_rows > 1;
    const std::size_t d = batch_feature_dim(ds, opts);
    MultiLabelBatch batch;
    batch.features = Matrix(indices.size(), d);
    batch.labels = Matrix(indices.size(), ds.n_classes());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const Example& e = ds.examples.at(indices[r]);
        const double* src = e.features.data();
        MelSpectrogram aug;
        if (mel_shaped && (opts.spec_augment || opts.time_shift)) {
            aug.values = Matrix(ds.mel_rows, ds.mel_frames);
            std::copy(e.features.begin(), e.features.end(), aug.values.storage().begin());
            if (opts.spec_augment)
                aug = spec_augment(aug, opts.time_masks, opts.freq_masks,
                                   std::min(opts.max_time_width, ds.mel_frames),
                                   std::min(opts.max_freq_width, ds.mel_rows), rng);
            if (opts.time_shift) aug = circular_time_shift(aug, rng);
            src = aug.values.storage().data();
        }
        if (mel_shaped && opts.pool_time) {
            for (std::size_t m = 0; m < ds.mel_rows; ++m) {
                double acc = 0.0;
                for (std::size_t t = 0; t < ds.mel_frames; ++t) acc += src[m * ds.mel_frames + t];
                batch.features(r, m) = acc / static_cast<double>(ds.mel_frames);
            }
        } else {
            for (std::size_t k = 0; k < d; ++k) batch.features(r, k) = src[k];
        }
        for (std::size_t c = 0; c < e.labels.size(); ++c) batch.labels(r, c) = e.labels[c];
    }
    return batch;
}

}  // namespace mix2
