#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mix2/dataset.hpp"
#include "mix2/errors.hpp"
#include "mix2/mixops.hpp"
#include "mix2/nn.hpp"
#include "mix2/train.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// TOML-style key/value file: [section] headers, `key = value` lines, `#`
// comments, comma-separated lists, double-quoted or bare strings.
// ---------------------------------------------------------------------------

class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw DataError("config: cannot open " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        return parse_text(ss.str(), path);
    }

    static ConfigFile parse_text(const std::string& text, const std::string& origin = "<text>") {
        ConfigFile cfg;
        std::istringstream is(text);
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            // strip comments outside quotes
            bool quoted = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') quoted = !quoted;
                if (line[i] == '#' && !quoted) {
                    line.resize(i);
                    break;
                }
            }
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw DataError("config: unterminated section at line " +
                                    std::to_string(line_no) + " of " + origin);
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw DataError("config: expected key = value at line " +
                                std::to_string(line_no) + " of " + origin);
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw DataError("config: empty key at line " + std::to_string(line_no));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
                value = value.substr(1, value.size() - 2);
            cfg.values_[section.empty() ? key : section + "." + key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_double(it->second, key);
    }

    std::size_t get_size(const std::string& key, std::size_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_size(it->second, key);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw DataError("config: expected true/false for " + key + ", got " + it->second);
    }

    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& item : split_list(it->second)) out.push_back(to_double(item, key));
        return out;
    }

    std::vector<std::size_t> get_sizes(const std::string& key,
                                       const std::vector<std::size_t>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::size_t> out;
        for (const auto& item : split_list(it->second)) out.push_back(to_size(item, key));
        return out;
    }

    std::vector<std::uint64_t> get_u64s(const std::string& key,
                                        const std::vector<std::uint64_t>& fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::uint64_t> out;
        for (const auto& item : split_list(it->second))
            out.push_back(static_cast<std::uint64_t>(to_size(item, key)));
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(trim(item));
        return out;
    }

    static double to_double(const std::string& s, const std::string& key) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw DataError("config: expected number for " + key + ", got " + s);
        }
    }

    static std::size_t to_size(const std::string& s, const std::string& key) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(s, &used);
            if (used != s.size() || v < 0) throw std::invalid_argument(s);
            return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw DataError("config: expected nonnegative integer for " + key + ", got " + s);
        }
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

inline Mix2Policy parse_policy(const std::string& name) {
    if (name == "none" || name == "nomix") return Mix2Policy::none();
    if (name == "mixup") return Mix2Policy::single(MixStrategy::Mixup);
    if (name == "manifold") return Mix2Policy::single(MixStrategy::ManifoldMixup);
    if (name == "multimix") return Mix2Policy::single(MixStrategy::MultiMix);
    if (name == "mixup+manifold")
        return Mix2Policy::pair(MixStrategy::Mixup, MixStrategy::ManifoldMixup);
    if (name == "mixup+multimix")
        return Mix2Policy::pair(MixStrategy::Mixup, MixStrategy::MultiMix);
    if (name == "manifold+multimix")
        return Mix2Policy::pair(MixStrategy::ManifoldMixup, MixStrategy::MultiMix);
    if (name == "mix2") return Mix2Policy::mix2();
    // Raw weights: mixup,manifold,multimix with an optional leading nomix
    // share when four values are given.
    std::vector<double> w;
    std::stringstream ss(name);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            w.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("unknown policy: " + name);
        }
    }
    Mix2Policy p;
    if (w.size() == 3) {
        p = {0.0, w[0], w[1], w[2]};
    } else if (w.size() == 4) {
        p = {w[0], w[1], w[2], w[3]};
    } else {
        throw UsageError("policy weights need 3 (mixup,manifold,multimix) or 4 "
                         "(nomix,mixup,manifold,multimix) values");
    }
    p.validate();
    return p;
}

inline std::string policy_label(const Mix2Policy& p) {
    auto close = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    if (close(p.nomix, 1.0)) return "none";
    if (close(p.mixup, 1.0)) return "mixup";
    if (close(p.manifold, 1.0)) return "manifold";
    if (close(p.multimix, 1.0)) return "multimix";
    if (close(p.mixup, 0.5) && close(p.manifold, 0.5)) return "mixup+manifold";
    if (close(p.mixup, 0.5) && close(p.multimix, 0.5)) return "mixup+multimix";
    if (close(p.manifold, 0.5) && close(p.multimix, 0.5)) return "manifold+multimix";
    if (close(p.mixup, 0.25) && close(p.manifold, 0.5) && close(p.multimix, 0.25)) return "mix2";
    std::ostringstream os;
    os << p.nomix << "," << p.mixup << "," << p.manifold << "," << p.multimix;
    return os.str();
}

/// Everything one experiment needs, defaulting to the desk-scale synthetic
/// setup: 12 classes in three groups of four with positives 600/150/30,
/// negatives at 36%, a 64-dim front end. The training recipe here is tuned so
/// the mixing-policy ordering shows up reliably at this scale; the optimizer
/// type itself defaults to the full-scale constants.
struct ExperimentConfig {
    // data
    std::string source = "synthetic";  // or a feature cache path
    std::vector<std::size_t> classes_per_group = {4, 4, 4};
    std::vector<std::size_t> group_counts = {600, 150, 30};
    std::vector<std::size_t> explicit_counts;  // overrides the group law when set
    std::vector<double> polyphony = {0.55, 0.30, 0.15};
    double negative_fraction = 0.36;
    std::size_t feature_dim = 64;
    double noise_std = 0.3;
    double prototype_scale = 1.0;
    std::uint64_t data_seed = 99;
    double split_ratio = 2.0 / 3.0;
    GroupThresholds thresholds{400, 100};
    SubsetMode subset = SubsetMode::Full;

    // model
    std::vector<std::size_t> hidden = {256, 128};

    // training
    std::size_t epochs = 60;
    std::size_t batch_size = 64;
    AdamWConfig optimizer{.lr = 3e-3};
    MixParams mix{.beta_alpha = 0.4, .dirichlet_alpha = 0.1};
    AugmentOptions augment;

    // policy and evaluation
    Mix2Policy policy = Mix2Policy::mix2();
    double threshold = 0.5;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::string out_dir = "runs/out";

    std::vector<std::size_t> synthetic_counts() const {
        if (!explicit_counts.empty()) return explicit_counts;
        if (classes_per_group.size() != group_counts.size())
            throw ParameterError("config: classes_per_group and group_counts disagree");
        std::vector<std::size_t> counts;
        for (std::size_t g = 0; g < classes_per_group.size(); ++g)
            counts.insert(counts.end(), classes_per_group[g], group_counts[g]);
        return counts;
    }

    SyntheticSpec synthetic_spec() const {
        SyntheticSpec spec;
        spec.class_counts = synthetic_counts();
        spec.polyphony = polyphony;
        spec.negative_fraction = negative_fraction;
        spec.feature_dim = feature_dim;
        spec.noise_std = noise_std;
        spec.prototype_scale = prototype_scale;
        spec.seed = data_seed;
        return spec;
    }

    static ExperimentConfig from_file(const std::string& path) {
        return from_config(ConfigFile::parse_file(path));
    }

    static ExperimentConfig from_config(const ConfigFile& c) {
        ExperimentConfig e;
        e.source = c.get_string("data.source", e.source);
        e.classes_per_group = c.get_sizes("data.classes_per_group", e.classes_per_group);
        e.group_counts = c.get_sizes("data.group_counts", e.group_counts);
        e.explicit_counts = c.get_sizes("data.counts", e.explicit_counts);
        e.polyphony = c.get_doubles("data.polyphony", e.polyphony);
        e.negative_fraction = c.get_double("data.negative_fraction", e.negative_fraction);
        e.feature_dim = c.get_size("data.feature_dim", e.feature_dim);
        e.noise_std = c.get_double("data.noise_std", e.noise_std);
        e.prototype_scale = c.get_double("data.prototype_scale", e.prototype_scale);
        e.data_seed = c.get_size("data.data_seed", static_cast<std::size_t>(e.data_seed));
        e.split_ratio = c.get_double("data.split_ratio", e.split_ratio);
        e.thresholds.frequent_min = c.get_size("data.frequent_min", e.thresholds.frequent_min);
        e.thresholds.common_min = c.get_size("data.common_min", e.thresholds.common_min);

        e.hidden = c.get_sizes("model.hidden", e.hidden);

        e.epochs = c.get_size("train.epochs", e.epochs);
        e.batch_size = c.get_size("train.batch_size", e.batch_size);
        e.optimizer.lr = c.get_double("train.lr", e.optimizer.lr);
        e.optimizer.weight_decay = c.get_double("train.weight_decay", e.optimizer.weight_decay);
        e.optimizer.beta1 = c.get_double("train.beta1", e.optimizer.beta1);
        e.optimizer.beta2 = c.get_double("train.beta2", e.optimizer.beta2);
        e.optimizer.eps = c.get_double("train.eps", e.optimizer.eps);
        e.mix.beta_alpha = c.get_double("train.beta_alpha", e.mix.beta_alpha);
        e.mix.dirichlet_alpha = c.get_double("train.dirichlet_alpha", e.mix.dirichlet_alpha);
        e.mix.random_tap = c.get_bool("train.random_tap", e.mix.random_tap);
        e.augment.spec_augment = c.get_bool("train.spec_augment", e.augment.spec_augment);
        e.augment.time_shift = c.get_bool("train.time_shift", e.augment.time_shift);
        e.augment.time_masks = c.get_size("train.time_masks", e.augment.time_masks);
        e.augment.freq_masks = c.get_size("train.freq_masks", e.augment.freq_masks);
        e.augment.max_time_width = c.get_size("train.max_time_width", e.augment.max_time_width);
        e.augment.max_freq_width = c.get_size("train.max_freq_width", e.augment.max_freq_width);
        e.augment.pool_time = c.get_bool("train.pool_time", e.augment.pool_time);

        e.policy = parse_policy(c.get_string("mix.policy", "mix2"));
        if (c.has("mix.weights")) {
            const auto w = c.get_doubles("mix.weights", {});
            if (w.size() == 3) e.policy = {0.0, w[0], w[1], w[2]};
            else if (w.size() == 4) e.policy = {w[0], w[1], w[2], w[3]};
            else throw DataError("config: mix.weights needs 3 or 4 values");
            e.policy.validate();
        }

        e.threshold = c.get_double("eval.threshold", e.threshold);
        e.subset = parse_subset_mode(c.get_string("eval.subset", "full"));

        e.seeds = c.get_u64s("run.seeds", e.seeds);
        if (e.seeds.empty()) throw DataError("config: run.seeds must not be empty");
        e.out_dir = c.get_string("run.out", e.out_dir);
        return e;
    }
};

}  // namespace mix2
