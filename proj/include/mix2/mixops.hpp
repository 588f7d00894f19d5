#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mix2/errors.hpp"
#include "mix2/matrix.hpp"
#include "mix2/rng.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Scalar interpolation weight in [0, 1], shared by a whole batch for the
/// pairwise mixing operators.
struct MixCoefficient {
    double lambda = 1.0;

    explicit MixCoefficient(double l) : lambda(l) {
        if (!(l >= 0.0 && l <= 1.0))
            throw ParameterError("MixCoefficient: lambda must lie in [0, 1]");
    }
};

/// Row-stochastic interpolation matrix: each output row is a convex
/// combination of the input batch rows.
class MixMatrix {
public:
    explicit MixMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw ShapeError("MixMatrix: must be square");
        for (std::size_t i = 0; i < m_.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m_.cols(); ++j) {
                if (m_(i, j) < 0.0) throw ParameterError("MixMatrix: negative entry");
                sum += m_(i, j);
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ParameterError("MixMatrix: row " + std::to_string(i) +
                                     " sums to " + std::to_string(sum));
        }
    }

    std::size_t size() const { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const { return m_; }

private:
    Matrix m_;
};

enum class MixStrategy { NoMix, Mixup, ManifoldMixup, MultiMix };

inline const char* strategy_name(MixStrategy s) {
    switch (s) {
        case MixStrategy::NoMix: return "nomix";
        case MixStrategy::Mixup: return "mixup";
        case MixStrategy::ManifoldMixup: return "manifold";
        case MixStrategy::MultiMix: return "multimix";
    }
    return "?";
}

/// Per-iteration selection weights over the strategies. NoMix carries weight
/// zero by default; every draw applies one of the three mixing methods.
struct Mix2Policy {
    double nomix = 0.0;
    double mixup = 0.0;
    double manifold = 0.0;
    double multimix = 0.0;

    void validate() const {
        const double w[4] = {nomix, mixup, manifold, multimix};
        double sum = 0.0;
        for (double x : w) {
            if (x < 0.0) throw ParameterError("Mix2Policy: negative weight");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw ParameterError("Mix2Policy: weights sum to " + std::to_string(sum));
    }

    static Mix2Policy none() { return {1.0, 0.0, 0.0, 0.0}; }
    static Mix2Policy single(MixStrategy s) {
        Mix2Policy p;
        switch (s) {
            case MixStrategy::NoMix: p.nomix = 1.0; break;
            case MixStrategy::Mixup: p.mixup = 1.0; break;
            case MixStrategy::ManifoldMixup: p.manifold = 1.0; break;
            case MixStrategy::MultiMix: p.multimix = 1.0; break;
        }
        return p;
    }
    // 50/50 between two methods, the two-method ablation rows.
    static Mix2Policy pair(MixStrategy a, MixStrategy b) {
        Mix2Policy p = single(a);
        Mix2Policy q = single(b);
        return {0.5 * (p.nomix + q.nomix), 0.5 * (p.mixup + q.mixup),
                0.5 * (p.manifold + q.manifold), 0.5 * (p.multimix + q.multimix)};
    }
    // The Mix2 schedule: Mixup 25%, Manifold Mixup 50%, MultiMix 25%.
    static Mix2Policy mix2() { return {0.0, 0.25, 0.50, 0.25}; }
};

/// Pairing of batch elements for the pairwise operators: element i mixes with
/// element perm[i]. Self-pairing is allowed and degenerates to a no-op pair.
struct PairingPlan {
    std::vector<std::size_t> perm;

    void validate(std::size_t n) const {
        if (perm.size() != n)
            throw ShapeError("PairingPlan: length " + std::to_string(perm.size()) +
                             " does not match batch size " + std::to_string(n));
        std::vector<bool> seen(n, false);
        for (std::size_t j : perm) {
            if (j >= n || seen[j]) throw ParameterError("PairingPlan: not a permutation");
            seen[j] = true;
        }
    }
};

/// Feature rows plus per-example binary label rows.
struct MultiLabelBatch {
    Matrix features;  // n x d
    Matrix labels;    // n x C, entries in {0, 1}

    void validate() const {
        if (features.rows() != labels.rows())
            throw ShapeError("MultiLabelBatch: features " + features.shape_str() +
                             " vs labels " + labels.shape_str());
        for (double v : labels.storage())
            if (v != 0.0 && v != 1.0)
                throw ParameterError("MultiLabelBatch: labels must be 0/1");
    }

    std::size_t size() const { return features.rows(); }
};

// ---------------------------------------------------------------------------
// Coefficient samplers
// ---------------------------------------------------------------------------

inline MixCoefficient sample_beta(double alpha, Rng& rng) {
    if (alpha <= 0.0) throw ParameterError("sample_beta: alpha must be positive");
    double l = rng.beta(alpha, alpha);
    if (l < 0.0) l = 0.0;
    if (l > 1.0) l = 1.0;
    return MixCoefficient(l);
}

inline PairingPlan sample_pairing(std::size_t n, Rng& rng) {
    if (n == 0) throw ParameterError("sample_pairing: empty batch");
    return PairingPlan{rng.permutation(n)};
}

/// Each row drawn independently from Dirichlet(alpha, ..., alpha) over n
/// components, normalized exactly so row sums hit 1 within 1e-9.
inline MixMatrix sample_mix_matrix(std::size_t n, double alpha, Rng& rng) {
    if (n == 0) throw ParameterError("sample_mix_matrix: empty batch");
    if (alpha <= 0.0) throw ParameterError("sample_mix_matrix: alpha must be positive");
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            m(i, j) = rng.gamma(alpha);
            sum += m(i, j);
        }
        if (sum <= 0.0) {
            // All-zero gamma draws cannot normalize; fall back to a point mass.
            m(i, i) = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) m(i, j) /= sum;
    }
    return MixMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Mixing operators
// ---------------------------------------------------------------------------

/// Row-wise convex combination: out[i] = lambda * rows[i] + (1-lambda) * rows[perm[i]].
inline Matrix mix_rows(const Matrix& rows, const PairingPlan& plan, MixCoefficient lambda) {
    plan.validate(rows.rows());
    const double l = lambda.lambda;
    Matrix out(rows.rows(), rows.cols());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        const std::size_t j = plan.perm[i];
        for (std::size_t k = 0; k < rows.cols(); ++k)
            out(i, k) = l == 1.0 ? rows(i, k) : l * rows(i, k) + (1.0 - l) * rows(j, k);
    }
    return out;
}

/// Input-space Mixup. Labels are left untouched; target mixing happens at the
/// loss level.
inline Matrix mixup_inputs(const MultiLabelBatch& batch, const PairingPlan& plan,
                           MixCoefficient lambda) {
    return mix_rows(batch.features, plan, lambda);
}

/// Manifold Mixup on encoder outputs; same contract as mixup_inputs.
inline Matrix mix_embeddings(const Matrix& embeddings, const PairingPlan& plan,
                             MixCoefficient lambda) {
    return mix_rows(embeddings, plan, lambda);
}

/// MultiMix: the synthetic batch is the matrix product of the interpolation
/// matrix with the embedding batch; every output row lies in the convex hull
/// of the input rows.
inline Matrix multimix(const Matrix& embeddings, const MixMatrix& mat) {
    if (mat.size() != embeddings.rows())
        throw ShapeError("multimix: matrix " + mat.matrix().shape_str() +
                         " vs embeddings " + embeddings.shape_str());
    return matmul(mat.matrix(), embeddings);
}

// ---------------------------------------------------------------------------
// Loss-level target mixing
// ---------------------------------------------------------------------------

inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Element BCE with the sigmoid folded in: max(z,0) - z*y + log(1 + exp(-|z|)).
// Affine in y, which is what makes loss-level target mixing exact.
inline double bce_element(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

/// Mean element-wise binary cross-entropy of logits against targets.
inline double bce_loss(const Matrix& logits, const Matrix& targets) {
    if (!logits.same_shape(targets))
        throw ShapeError("bce_loss: logits " + logits.shape_str() + " vs targets " +
                         targets.shape_str());
    if (logits.empty()) throw ParameterError("bce_loss: empty batch");
    if (!logits.all_finite()) throw NumericError("bce_loss: non-finite logits");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t c = 0; c < logits.cols(); ++c)
            sum += bce_element(logits(i, c), targets(i, c));
    return sum / static_cast<double>(logits.size());
}

/// lambda * BCE(logits, Y) + (1-lambda) * BCE(logits, Y o perm). Equals BCE
/// against the materialized mixed targets because BCE is affine in the target.
inline double mixed_bce_loss(const Matrix& logits, const Matrix& labels,
                             const PairingPlan& plan, MixCoefficient lambda) {
    if (!logits.same_shape(labels))
        throw ShapeError("mixed_bce_loss: logits " + logits.shape_str() + " vs labels " +
                         labels.shape_str());
    plan.validate(labels.rows());
    if (!logits.all_finite()) throw NumericError("mixed_bce_loss: non-finite logits");
    const double l = lambda.lambda;
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const std::size_t j = plan.perm[i];
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double z = logits(i, c);
            sum += l * bce_element(z, labels(i, c));
            if (l != 1.0) sum += (1.0 - l) * bce_element(z, labels(j, c));
        }
    }
    return sum / static_cast<double>(logits.size());
}

/// Loss-level form of the MultiMix targets: mean over (i, c) of
/// sum_j mat[i,j] * bce(logit[i,c], Y[j,c]); equals BCE(logits, mat * Y).
inline double multimix_bce_loss(const Matrix& logits, const MixMatrix& mat,
                                const Matrix& labels) {
    if (!logits.same_shape(labels))
        throw ShapeError("multimix_bce_loss: logits " + logits.shape_str() + " vs labels " +
                         labels.shape_str());
    if (mat.size() != labels.rows())
        throw ShapeError("multimix_bce_loss: matrix " + mat.matrix().shape_str() +
                         " vs labels " + labels.shape_str());
    if (!logits.all_finite()) throw NumericError("multimix_bce_loss: non-finite logits");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            const double z = logits(i, c);
            for (std::size_t j = 0; j < labels.rows(); ++j) {
                const double w = mat(i, j);
                if (w != 0.0) sum += w * bce_element(z, labels(j, c));
            }
        }
    }
    return sum / static_cast<double>(logits.size());
}

/// Materialized mixed targets lambda*Y + (1-lambda)*(Y o perm); used for
/// gradient computation, where the loss-level and target-level forms agree.
inline Matrix mixed_targets(const Matrix& labels, const PairingPlan& plan,
                            MixCoefficient lambda) {
    return mix_rows(labels, plan, lambda);
}

inline Matrix multimix_targets(const Matrix& labels, const MixMatrix& mat) {
    return matmul(mat.matrix(), labels);
}

// ---------------------------------------------------------------------------
// Strategy scheduler
// ---------------------------------------------------------------------------

/// One draw of the per-iteration strategy under the given policy.
inline MixStrategy select_strategy(const Mix2Policy& policy, Rng& rng) {
    policy.validate();
    const double u = rng.uniform();
    const std::array<std::pair<MixStrategy, double>, 4> order{{
        {MixStrategy::NoMix, policy.nomix},
        {MixStrategy::Mixup, policy.mixup},
        {MixStrategy::ManifoldMixup, policy.manifold},
        {MixStrategy::MultiMix, policy.multimix},
    }};
    double acc = 0.0;
    for (const auto& [s, w] : order) {
        acc += w;
        if (u < acc) return s;
    }
    // u landed in the rounding sliver past the last positive weight.
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (it->second > 0.0) return it->first;
    return MixStrategy::NoMix;
}

}  // namespace mix2
