#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mix2/dataset.hpp"
#include "mix2/errors.hpp"
#include "mix2/matrix.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// Confusion counts and per-class F
// ---------------------------------------------------------------------------

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t support() const { return tp + fn; }
};

/// prediction = 1 iff probability >= threshold.
inline Matrix binarize(const Matrix& probabilities, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ParameterError("binarize: threshold must lie in [0, 1]");
    Matrix preds(probabilities.rows(), probabilities.cols());
    for (std::size_t i = 0; i < preds.rows(); ++i)
        for (std::size_t c = 0; c < preds.cols(); ++c)
            preds(i, c) = probabilities(i, c) >= threshold ? 1.0 : 0.0;
    return preds;
}

inline std::vector<ClassCounts> confusion_counts(const Matrix& preds, const Matrix& labels) {
    if (!preds.same_shape(labels))
        throw ShapeError("confusion_counts: preds " + preds.shape_str() + " vs labels " +
                         labels.shape_str());
    std::vector<ClassCounts> counts(preds.cols());
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        for (std::size_t c = 0; c < preds.cols(); ++c) {
            const bool p = preds(i, c) != 0.0;
            const bool y = labels(i, c) != 0.0;
            if (p && y) counts[c].tp++;
            else if (p && !y) counts[c].fp++;
            else if (!p && y) counts[c].fn++;
        }
    }
    return counts;
}

struct PerClassF {
    std::vector<ClassCounts> counts;
    // F = 2tp / (2tp + fp + fn); classes with zero support in the eval labels
    // are excluded from every macro average and carry no value here.
    std::vector<std::optional<double>> f;
};

inline PerClassF per_class_f(const Matrix& preds, const Matrix& labels) {
    PerClassF out;
    out.counts = confusion_counts(preds, labels);
    out.f.reserve(out.counts.size());
    for (const auto& c : out.counts) {
        if (c.support() == 0) {
            out.f.emplace_back(std::nullopt);
            continue;
        }
        const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
        out.f.emplace_back(2.0 * static_cast<double>(c.tp) / denom);
    }
    return out;
}

/// Unweighted mean over the evaluated classes in the subset; empty subsets
/// give no value rather than zero.
inline std::optional<double> macro_f(const std::vector<std::optional<double>>& per_class,
                                     const std::vector<std::size_t>& subset) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c : subset) {
        if (c >= per_class.size()) throw ParameterError("macro_f: class index out of range");
        if (per_class[c].has_value()) {
            sum += *per_class[c];
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

inline std::optional<double> macro_f(const std::vector<std::optional<double>>& per_class) {
    std::vector<std::size_t> all(per_class.size());
    for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
    return macro_f(per_class, all);
}

// ---------------------------------------------------------------------------
// Stratified rollups
// ---------------------------------------------------------------------------

struct GroupReport {
    std::optional<double> frequent;
    std::optional<double> common;
    std::optional<double> rare;
    std::optional<double> all;  // mean over all evaluated classes, not of the group means
};

inline GroupReport group_report(const std::vector<std::optional<double>>& per_class,
                                const std::vector<ClassProfile>& profiles) {
    if (profiles.size() != per_class.size())
        throw ShapeError("group_report: " + std::to_string(profiles.size()) + " profiles vs " +
                         std::to_string(per_class.size()) + " classes");
    std::vector<std::size_t> frequent, common, rare;
    for (const auto& p : profiles) {
        switch (p.group) {
            case FrequencyGroup::Frequent: frequent.push_back(p.class_id); break;
            case FrequencyGroup::Common: common.push_back(p.class_id); break;
            case FrequencyGroup::Rare: rare.push_back(p.class_id); break;
        }
    }
    GroupReport out;
    out.frequent = macro_f(per_class, frequent);
    out.common = macro_f(per_class, common);
    out.rare = macro_f(per_class, rare);
    out.all = macro_f(per_class);
    return out;
}

struct PolyphonyLevelF {
    std::size_t level = 0;
    double macro_f = 0.0;
    std::size_t n_examples = 0;
};

/// Macro F restricted to examples of each polyphony level >= 1; levels with
/// no examples (or no evaluable class) are omitted.
inline std::vector<PolyphonyLevelF> polyphony_report(const Matrix& preds, const Matrix& labels) {
    if (!preds.same_shape(labels))
        throw ShapeError("polyphony_report: preds " + preds.shape_str() + " vs labels " +
                         labels.shape_str());
    std::map<std::size_t, std::vector<std::size_t>> by_level;
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        std::size_t level = 0;
        for (std::size_t c = 0; c < labels.cols(); ++c) level += labels(i, c) != 0.0 ? 1 : 0;
        if (level >= 1) by_level[level].push_back(i);
    }
    std::vector<PolyphonyLevelF> out;
    for (const auto& [level, rows] : by_level) {
        Matrix p(rows.size(), preds.cols());
        Matrix y(rows.size(), preds.cols());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < preds.cols(); ++c) {
                p(r, c) = preds(rows[r], c);
                y(r, c) = labels(rows[r], c);
            }
        const auto f = per_class_f(p, y);
        const auto m = macro_f(f.f);
        if (m.has_value()) out.push_back({level, *m, rows.size()});
    }
    return out;
}

struct StratifiedReport {
    double threshold = 0.5;
    std::vector<ClassCounts> counts;
    std::vector<std::optional<double>> per_class;
    GroupReport groups;
    std::vector<PolyphonyLevelF> polyphony;
};

/// Full evaluation rollup from probabilities: binarize, per-class F with
/// support filtering, group means, and the polyphony curve.
inline StratifiedReport stratified_report(const Matrix& probabilities, const Matrix& labels,
                                          const std::vector<ClassProfile>& profiles,
                                          double threshold) {
    StratifiedReport report;
    report.threshold = threshold;
    const Matrix preds = binarize(probabilities, threshold);
    PerClassF f = per_class_f(preds, labels);
    report.counts = std::move(f.counts);
    report.per_class = std::move(f.f);
    report.groups = group_report(report.per_class, profiles);
    report.polyphony = polyphony_report(preds, labels);
    return report;
}

}  // namespace mix2
