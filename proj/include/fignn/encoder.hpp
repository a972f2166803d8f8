#pragma once

#include "fignn/autodiff.hpp"
#include "fignn/featurestore.hpp"

#include <span>

namespace fignn::encoder {

/// Projections of one attention head, each head_dim x embedding_dim.
struct AttentionHeadVars {
    ad::Var query;
    ad::Var key;
    ad::Var value;
};

// Looks up one embedding row per field: m x d.
ad::Var embed(ad::Tape& tape, const ParameterStore& store, ParamId table, const EncodedInstance& instance);

// Scaled dot-product self-attention over the m field rows: m x head_dim.
// Every field attends to every field, itself included.
ad::Var attention_head(ad::Var embeddings, const AttentionHeadVars& head);

// ReLU of the head outputs concatenated along the feature axis: m x (sum of head dims).
ad::Var initial_states(ad::Var embeddings, std::span<const AttentionHeadVars> heads);

}  // namespace fignn::encoder
