#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mix2/dataset.hpp"
#include "mix2/mixops.hpp"
#include "mix2/nn.hpp"
#include "mix2/rng.hpp"

namespace mix2 {

struct TrainOptions {
    std::size_t batch_size = 64;
    MixParams mix;
    AugmentOptions augment;
};

struct EpochLog {
    double mean_loss = 0.0;
    std::size_t iterations = 0;
    std::array<std::size_t, 4> strategy_counts{};  // indexed by MixStrategy
    bool batch_clamped = false;

    std::size_t count(MixStrategy s) const { return strategy_counts[static_cast<int>(s)]; }
};

/// One pass over the dataset in shuffled mini-batches: draw a strategy from
/// the policy, run the mixed forward pass, take the matching loss-level BCE,
/// backpropagate, and apply one AdamW step per batch.
inline EpochLog train_epoch(TappedNetwork& net, const MultiLabelDataset& ds,
                            const Mix2Policy& policy, AdamWState& opt, const TrainOptions& options,
                            Rng& rng) {
    if (ds.size() == 0) throw ParameterError("train_epoch: empty dataset");
    policy.validate();
    EpochLog log;
    std::size_t batch_size = options.batch_size;
    if (batch_size == 0) throw ParameterError("train_epoch: zero batch size");
    if (batch_size > ds.size()) {
        batch_size = ds.size();
        log.batch_clamped = true;
    }

    ParameterStore store = net.parameters();
    std::vector<std::size_t> order = rng.permutation(ds.size());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, order.size());
        std::vector<std::size_t> indices(order.begin() + start, order.begin() + end);
        MultiLabelBatch batch = materialize_batch(ds, indices, options.augment, rng);

        const MixStrategy strategy = select_strategy(policy, rng);
        auto [logits, record] = net.forward_tapped(batch, strategy, options.mix, rng);
        const double loss = mixed_loss_value(logits, batch.labels, record);
        if (!std::isfinite(loss)) {
            std::string diag = "train_epoch: non-finite loss at iteration " +
                               std::to_string(log.iterations) + ", strategy " +
                               strategy_name(strategy);
            if (record.pairwise())
                diag += ", lambda " + std::to_string(record.lambda.lambda);
            else if (record.matrix)
                diag += ", mix matrix " + std::to_string(record.matrix->size()) + "x" +
                        std::to_string(record.matrix->size());
            throw NumericError(diag);
        }
        net.backward(mixed_loss_gradient(logits, batch.labels, record));
        adamw_step(store, opt);

        loss_sum += loss;
        log.strategy_counts[static_cast<int>(strategy)]++;
        log.iterations++;
    }
    log.mean_loss = log.iterations ? loss_sum / static_cast<double>(log.iterations) : 0.0;
    return log;
}

}  // namespace mix2
