#include "fignn/scoring.hpp"

#include "fignn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fignn::scoring {

PredictionVars score(ad::Var final_states, const ScoringVars& heads) {
    ad::Var cols = ad::transpose(final_states);
    PredictionVars p;
    p.node_scores = ad::add_bias(ad::matmul(heads.score_w, cols), heads.score_b);
    p.node_weights = ad::sigmoid(ad::add_bias(ad::matmul(heads.gate_w, cols), heads.gate_b));
    p.logit = ad::sum(ad::mul(p.node_weights, p.node_scores));
    p.probability = ad::sigmoid(p.logit);
    return p;
}

Prediction to_prediction(const PredictionVars& p) {
    Prediction out;
    out.probability = std::clamp(p.probability.value().item(), ad::kProbabilityClamp, 1.0 - ad::kProbabilityClamp);
    const auto s = p.node_scores.value().values();
    const auto w = p.node_weights.value().values();
    out.node_scores.assign(s.begin(), s.end());
    out.node_weights.assign(w.begin(), w.end());
    return out;
}

double log_loss(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.size() != labels.size())
        throw ShapeError("log_loss: " + std::to_string(probabilities.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    if (probabilities.empty()) throw DataError("log_loss of an empty list");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probabilities[i], ad::kProbabilityClamp, 1.0 - ad::kProbabilityClamp);
        if (labels[i] != 0 && labels[i] != 1) throw DataError("log_loss: labels must be 0 or 1");
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(labels.size());
}

}  // namespace fignn::scoring
