#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mix2/errors.hpp"
#include "mix2/matrix.hpp"
#include "mix2/mixops.hpp"
#include "mix2/rng.hpp"

namespace mix2 {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// View over one named parameter tensor and its gradient accumulator. The
/// pointers alias storage owned by the network; they stay valid for the
/// lifetime of the network object they came from.
struct ParamEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;
};

class ParameterStore {
public:
    void add(std::string name, std::vector<std::size_t> shape, std::vector<double>* value,
             std::vector<double>* grad) {
        entries_.push_back({std::move(name), std::move(shape), value, grad});
    }

    std::vector<ParamEntry>& entries() { return entries_; }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.value->size();
        return n;
    }

    void zero_grads() {
        for (auto& e : entries_) std::fill(e.grad->begin(), e.grad->end(), 0.0);
    }

    std::vector<double> flat_values() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const auto& e : entries_) out.insert(out.end(), e.value->begin(), e.value->end());
        return out;
    }

private:
    std::vector<ParamEntry> entries_;
};

// ---------------------------------------------------------------------------
// Mix record
// ---------------------------------------------------------------------------

/// How to mix during a forward pass, and everything the matching loss needs.
/// tap = number of encoder layers applied before the mix (0 = raw input).
struct MixRecord {
    MixStrategy strategy = MixStrategy::NoMix;
    MixCoefficient lambda{1.0};
    PairingPlan plan;
    std::optional<MixMatrix> matrix;
    std::size_t tap = 0;

    bool pairwise() const {
        return strategy == MixStrategy::Mixup || strategy == MixStrategy::ManifoldMixup;
    }
};

struct MixParams {
    double beta_alpha = 1.0;       // Beta(alpha, alpha) for the pairwise lambda
    double dirichlet_alpha = 1.0;  // Dirichlet(alpha, ..., alpha) rows for MultiMix
    bool random_tap = false;       // Manifold Mixup at a random encoder boundary
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

struct NetConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> encoder_dims;  // hidden layers; last one is the embedding
    std::size_t n_classes = 0;

    void validate() const {
        if (input_dim == 0 || n_classes == 0)
            throw ParameterError("NetConfig: input_dim and n_classes must be positive");
        for (std::size_t d : encoder_dims)
            if (d == 0) throw ParameterError("NetConfig: zero-width encoder layer");
    }
};

/// Feed-forward classifier factored as head . encoder, with rectifier
/// nonlinearities inside the encoder and raw logits out of the head.
/// Embedding-level mixing applies at an encoder layer boundary (the tap);
/// backward routes gradients through the mix by linearity.
class TappedNetwork {
public:
    TappedNetwork(NetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        Rng rng(seed);
        std::size_t in = cfg_.input_dim;
        for (std::size_t i = 0; i < cfg_.encoder_dims.size(); ++i) {
            encoder_.push_back(make_layer(cfg_.encoder_dims[i], in, rng));
            in = cfg_.encoder_dims[i];
        }
        head_ = make_layer(cfg_.n_classes, in, rng);
    }

    const NetConfig& config() const { return cfg_; }
    std::size_t embedding_dim() const {
        return cfg_.encoder_dims.empty() ? cfg_.input_dim : cfg_.encoder_dims.back();
    }

    /// Views over all parameters in a stable order (encoder bottom-up, then head).
    ParameterStore parameters() {
        ParameterStore store;
        for (std::size_t l = 0; l < encoder_.size(); ++l) {
            auto& lay = encoder_[l];
            const std::string base = "encoder." + std::to_string(l);
            store.add(base + ".weight", {lay.weight.rows(), lay.weight.cols()},
                      &lay.weight.storage(), &lay.wgrad.storage());
            store.add(base + ".bias", {lay.bias.size()}, &lay.bias, &lay.bgrad);
        }
        store.add("head.weight", {head_.weight.rows(), head_.weight.cols()},
                  &head_.weight.storage(), &head_.wgrad.storage());
        store.add("head.bias", {head_.bias.size()}, &head_.bias, &head_.bgrad);
        return store;
    }

    /// Plain forward pass, no mixing, no trace.
    Matrix forward(const Matrix& features) const {
        MixRecord none;
        return run_forward(features, none, nullptr);
    }

    /// Forward with the given mix record; records the trace used by backward().
    Matrix forward_mixed(const Matrix& features, const MixRecord& record) {
        Matrix logits = run_forward(features, record, &trace_);
        trace_.record = record;
        trace_.valid = true;
        return logits;
    }

    /// Samples the coefficients for the requested strategy, runs the mixed
    /// forward pass, and returns the record needed for the matching loss.
    std::pair<Matrix, MixRecord> forward_tapped(const MultiLabelBatch& batch,
                                                MixStrategy strategy, const MixParams& params,
                                                Rng& rng) {
        MixRecord rec = sample_record(strategy, batch.size(), params, rng);
        Matrix logits = forward_mixed(batch.features, rec);
        return {std::move(logits), std::move(rec)};
    }

    MixRecord sample_record(MixStrategy strategy, std::size_t batch_size,
                            const MixParams& params, Rng& rng) const {
        MixRecord rec;
        rec.strategy = strategy;
        switch (strategy) {
            case MixStrategy::NoMix:
                break;
            case MixStrategy::Mixup:
                rec.lambda = sample_beta(params.beta_alpha, rng);
                rec.plan = sample_pairing(batch_size, rng);
                rec.tap = 0;
                break;
            case MixStrategy::ManifoldMixup:
                rec.lambda = sample_beta(params.beta_alpha, rng);
                rec.plan = sample_pairing(batch_size, rng);
                rec.tap = encoder_.size();
                if (params.random_tap && !encoder_.empty())
                    rec.tap = 1 + rng.uniform_index(encoder_.size());
                break;
            case MixStrategy::MultiMix:
                rec.matrix = sample_mix_matrix(batch_size, params.dirichlet_alpha, rng);
                rec.tap = encoder_.size();
                break;
        }
        return rec;
    }

    /// Smallest |pre-activation| seen in the last recorded forward pass.
    /// Diagnostic for finite-difference probes near rectifier kinks.
    double min_abs_preactivation() const {
        if (!trace_.valid) throw StateError("min_abs_preactivation: no recorded forward pass");
        double m = std::numeric_limits<double>::infinity();
        for (const Matrix& a : trace_.preacts)
            for (double v : a.storage()) m = std::min(m, std::abs(v));
        return m;
    }

    /// Accumulates d(loss)/d(parameter) for every parameter given the gradient
    /// of the loss with respect to the logits of the last forward_mixed call.
    /// Returns the gradient with respect to the original (unmixed) inputs.
    Matrix backward(const Matrix& dlogits) {
        if (!trace_.valid) throw StateError("backward: no recorded forward pass");
        if (dlogits.rows() != trace_.head_input.rows() || dlogits.cols() != head_.weight.rows())
            throw ShapeError("backward: dlogits shape " + dlogits.shape_str());
        const MixRecord& rec = trace_.record;

        Matrix g = dlogits;
        accumulate_layer_grads(head_, g, trace_.head_input);
        g = matmul(g, head_.weight);

        for (std::size_t l = encoder_.size(); l-- > 0;) {
            if (rec.strategy != MixStrategy::NoMix && rec.tap == l + 1)
                g = unmix_gradient(g, rec);
            const Matrix& pre = trace_.preacts[l];
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j)
                    if (!(pre(i, j) > 0.0)) g(i, j) = 0.0;
            const Matrix& in = l == 0 ? trace_.input : trace_.acts[l - 1];
            accumulate_layer_grads(encoder_[l], g, in);
            g = matmul(g, encoder_[l].weight);
        }

        if (rec.strategy != MixStrategy::NoMix && rec.tap == 0) g = unmix_gradient(g, rec);
        return g;
    }

private:
    struct DenseLayer {
        Matrix weight;  // out x in
        std::vector<double> bias;
        Matrix wgrad;
        std::vector<double> bgrad;
    };

    struct Trace {
        Matrix input;                // value fed to the first encoder layer
        std::vector<Matrix> preacts;
        std::vector<Matrix> acts;    // post-relu, post-mix at the tap boundary
        Matrix head_input;
        MixRecord record;
        bool valid = false;
    };

    static DenseLayer make_layer(std::size_t out, std::size_t in, Rng& rng) {
        DenseLayer lay;
        lay.weight = Matrix(out, in);
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& w : lay.weight.storage()) w = rng.uniform(-s, s);
        lay.bias.assign(out, 0.0);
        lay.wgrad = Matrix(out, in);
        lay.bgrad.assign(out, 0.0);
        return lay;
    }

    static Matrix affine(const Matrix& x, const DenseLayer& lay) {
        Matrix a = matmul_a_bt(x, lay.weight);
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += lay.bias[j];
        return a;
    }

    static void accumulate_layer_grads(DenseLayer& lay, const Matrix& gout, const Matrix& in) {
        Matrix dw = matmul_at_b(gout, in);
        auto& acc = lay.wgrad.storage();
        const auto& src = dw.storage();
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += src[k];
        for (std::size_t i = 0; i < gout.rows(); ++i)
            for (std::size_t j = 0; j < gout.cols(); ++j) lay.bgrad[j] += gout(i, j);
    }

    Matrix apply_mix(Matrix h, const MixRecord& rec) const {
        if (rec.strategy == MixStrategy::MultiMix) return multimix(h, *rec.matrix);
        return mix_rows(h, rec.plan, rec.lambda);
    }

    /// Routes the gradient at the mixed value back to the unmixed rows. The
    /// mixing operators are linear maps, so this is their transpose.
    static Matrix unmix_gradient(const Matrix& g, const MixRecord& rec) {
        if (rec.strategy == MixStrategy::MultiMix)
            return matmul_at_b(rec.matrix->matrix(), g);
        const double l = rec.lambda.lambda;
        Matrix out(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t k = 0; k < g.cols(); ++k) out(i, k) = l * g(i, k);
        if (l != 1.0)
            for (std::size_t i = 0; i < g.rows(); ++i) {
                const std::size_t j = rec.plan.perm[i];
                for (std::size_t k = 0; k < g.cols(); ++k) out(j, k) += (1.0 - l) * g(i, k);
            }
        return out;
    }

    Matrix run_forward(const Matrix& features, const MixRecord& rec, Trace* trace) const {
        if (features.cols() != cfg_.input_dim)
            throw ShapeError("forward: features " + features.shape_str() + " vs input_dim " +
                             std::to_string(cfg_.input_dim));
        const bool mixing = rec.strategy != MixStrategy::NoMix;
        if (mixing && rec.tap > encoder_.size())
            throw ShapeError("forward: tap beyond encoder depth");

        Matrix cur = features;
        if (mixing && rec.tap == 0) cur = apply_mix(std::move(cur), rec);
        if (trace) {
            trace->valid = false;
            trace->input = cur;
            trace->preacts.assign(encoder_.size(), Matrix());
            trace->acts.assign(encoder_.size(), Matrix());
        }

        for (std::size_t l = 0; l < encoder_.size(); ++l) {
            Matrix a = affine(cur, encoder_[l]);
            Matrix h = a;
            for (double& v : h.storage()) v = v > 0.0 ? v : 0.0;
            if (mixing && rec.tap == l + 1) h = apply_mix(std::move(h), rec);
            if (trace) {
                trace->preacts[l] = std::move(a);
                trace->acts[l] = h;
            }
            cur = std::move(h);
        }

        if (trace) trace->head_input = cur;
        return affine(cur, head_);
    }

    NetConfig cfg_;
    std::vector<DenseLayer> encoder_;
    DenseLayer head_;
    Trace trace_;
};

// ---------------------------------------------------------------------------
// Losses matched to a mix record
// ---------------------------------------------------------------------------

/// Loss-level mixed BCE for whatever the record says happened in forward.
inline double mixed_loss_value(const Matrix& logits, const Matrix& labels,
                               const MixRecord& rec) {
    switch (rec.strategy) {
        case MixStrategy::NoMix: return bce_loss(logits, labels);
        case MixStrategy::Mixup:
        case MixStrategy::ManifoldMixup:
            return mixed_bce_loss(logits, labels, rec.plan, rec.lambda);
        case MixStrategy::MultiMix: return multimix_bce_loss(logits, *rec.matrix, labels);
    }
    throw ParameterError("mixed_loss_value: bad strategy");
}

/// d(mixed loss)/d(logits) = (sigmoid(z) - mixed targets) / (n * C); the
/// loss-level and target-level forms have identical gradients because BCE is
/// affine in the target.
inline Matrix mixed_loss_gradient(const Matrix& logits, const Matrix& labels,
                                  const MixRecord& rec) {
    Matrix targets;
    switch (rec.strategy) {
        case MixStrategy::NoMix: targets = labels; break;
        case MixStrategy::Mixup:
        case MixStrategy::ManifoldMixup:
            targets = mixed_targets(labels, rec.plan, rec.lambda);
            break;
        case MixStrategy::MultiMix: targets = multimix_targets(labels, *rec.matrix); break;
    }
    const double scale = 1.0 / static_cast<double>(logits.size());
    Matrix g(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t c = 0; c < g.cols(); ++c)
            g(i, c) = (stable_sigmoid(logits(i, c)) - targets(i, c)) * scale;
    return g;
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

struct AdamWConfig {
    double lr = 1e-2;
    double weight_decay = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class AdamWState {
public:
    explicit AdamWState(AdamWConfig cfg = {}) : cfg_(cfg) {}

    const AdamWConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return t_; }

    /// Decoupled-weight-decay update with bias-corrected moments. Gradients
    /// are zeroed afterwards.
    void step(ParameterStore& params) {
        auto& entries = params.entries();
        if (entries.empty()) return;
        if (m_.empty()) {
            for (const auto& e : entries) {
                m_.emplace_back(e.value->size(), 0.0);
                v_.emplace_back(e.value->size(), 0.0);
            }
        }
        if (m_.size() != entries.size())
            throw ShapeError("adamw_step: state does not match parameter store");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t e = 0; e < entries.size(); ++e) {
            auto& value = *entries[e].value;
            auto& grad = *entries[e].grad;
            if (m_[e].size() != value.size())
                throw ShapeError("adamw_step: moment shape mismatch for " + entries[e].name);
            for (std::size_t k = 0; k < value.size(); ++k) {
                const double g = grad[k];
                m_[e][k] = cfg_.beta1 * m_[e][k] + (1.0 - cfg_.beta1) * g;
                v_[e][k] = cfg_.beta2 * v_[e][k] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[e][k] / bc1;
                const double vhat = v_[e][k] / bc2;
                value[k] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                       cfg_.weight_decay * value[k]);
            }
        }
        params.zero_grads();
    }

private:
    AdamWConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

inline void adamw_step(ParameterStore& params, AdamWState& state) { state.step(params); }

}  // namespace mix2
