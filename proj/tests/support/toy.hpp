#pragma once

#include "fignn/model.hpp"

namespace fignn::testing {

// m=3, V=9, d=4, d'=4, h=2, T=2: small enough for exhaustive finite differences.
inline ModelConfig toy_config(ModelKind kind = ModelKind::fignn, AblationConfig ablation = {}) {
    ModelConfig c;
    c.kind = kind;
    c.field_count = 3;
    c.feature_count = 9;
    c.embedding_dim = 4;
    c.state_dim = 4;
    c.heads = 2;
    c.steps = 2;
    c.fm_factors = 4;
    c.ablation = ablation;
    return c;
}

// One feature from each field's block of three indices.
inline EncodedInstance toy_instance(int label = 1) { return {label, {1, 5, 6}}; }

}  // namespace fignn::testing
