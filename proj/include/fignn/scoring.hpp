#pragma once

#include "fignn/autodiff.hpp"

#include <span>
#include <vector>

namespace fignn::scoring {

/// Two affine heads over a node state: a score head and a gate head.
struct ScoringVars {
    ad::Var score_w;  // 1 x d'
    ad::Var score_b;  // 1 x 1
    ad::Var gate_w;   // 1 x d'
    ad::Var gate_b;   // 1 x 1
};

struct PredictionVars {
    ad::Var node_scores;   // 1 x m, y_i
    ad::Var node_weights;  // 1 x m, a_i = sigmoid(gate)
    ad::Var logit;         // 1 x 1, sum_i a_i y_i
    ad::Var probability;   // 1 x 1, sigmoid(logit)
};

struct Prediction {
    double probability = 0.5;
    std::vector<double> node_scores;
    std::vector<double> node_weights;
};

// Graph-level readout over final node states (m x d').
PredictionVars score(ad::Var final_states, const ScoringVars& heads);

Prediction to_prediction(const PredictionVars& p);

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double log_loss(std::span<const double> probabilities, std::span<const int> labels);

inline std::vector<double> node_importance(const Prediction& p) { return p.node_weights; }

}  // namespace fignn::scoring
