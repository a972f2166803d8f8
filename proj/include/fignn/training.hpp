#pragma once

#include "fignn/featurestore.hpp"
#include "fignn/model.hpp"
#include "fignn/random.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fignn::training {

struct TrainingConfig {
    double learning_rate = 1e-3;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    std::size_t batch_size = 1024;  // even: half positives, half negatives
    std::size_t max_epochs = 20;
    std::size_t patience = 3;  // epochs without validation-AUC improvement
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

/// RMSProp running mean of squared gradients, one accumulator per parameter.
class OptimizerState {
public:
    explicit OptimizerState(const ParameterStore& store);
    std::vector<Tensor>& mean_square() { return mean_square_; }
    const std::vector<Tensor>& mean_square() const { return mean_square_; }

private:
    std::vector<Tensor> mean_square_;
};

// s <- rho s + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(s) + eps)
void rmsprop_step(ParameterStore& store, OptimizerState& opt, const TrainingConfig& cfg);

using Batch = std::vector<std::size_t>;  // indices into the instance list

// One epoch of exactly class-balanced batches. Batches per epoch cover the
// larger class once; each class is drawn from a cyclic stream that reshuffles
// when exhausted, so the smaller class is resampled with replacement.
std::vector<Batch> balanced_batches(const std::vector<EncodedInstance>& instances, std::size_t batch_size, Rng& rng);

// Zeroes gradients, accumulates the mean batch log loss gradient, returns the mean loss.
double accumulate_batch_gradient(const Model& model, ParameterStore& store,
                                 const std::vector<EncodedInstance>& instances, const Batch& batch);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
    double val_logloss = 0.0;
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;

    std::string to_csv() const;
};

struct TrainingResult {
    ParameterStore parameters;  // best validation-AUC checkpoint
    TrainingHistory history;
    std::size_t best_epoch = 0;  // 0 when no epoch ran
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainingResult train(const Model& model, const DatasetSplit& data, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch = {});

// Exact trainable scalar count implied by a configuration.
std::size_t count_parameters(const ModelConfig& config);

}  // namespace fignn::training
