#pragma once

#include "fignn/model.hpp"

namespace fignn {

/// sigmoid(bias + sum of one weight per active feature).
class LogisticRegression final : public Model {
public:
    explicit LogisticRegression(ModelConfig config);
    ad::Var logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const override;

protected:
    void add_parameters(ParameterStore& store, Rng& rng) const override;
};

/// Linear part plus pairwise inner products of the active latent vectors,
/// computed as 0.5 * (|sum v|^2 - sum |v|^2).
class FactorizationMachine final : public Model {
public:
    explicit FactorizationMachine(ModelConfig config);
    ad::Var logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const override;
    ad::Var pairwise(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const;

protected:
    void add_parameters(ParameterStore& store, Rng& rng) const override;
};

// Fi-GNN with the given ablation switches applied on top of `base`.
FiGnnModel build_variant(const AblationConfig& ablation, ModelConfig base);

}  // namespace fignn
