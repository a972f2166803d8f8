#pragma once

#include "fignn/featurestore.hpp"
#include "fignn/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fignn::metrics {

// Mann-Whitney AUC: average ranks, ties get half credit. Needs both classes.
double auc(std::span<const double> scores, std::span<const int> labels);

// |value - base| / base * 100.
double relative_improvement(double value, double base);

// Two-decimal percentage, e.g. "3.00%".
std::string format_percent(double percent);

struct EvalReport {
    double auc = 0.0;
    double logloss = 0.0;
    std::size_t n_instances = 0;

    nlohmann::json to_json() const;
};

EvalReport evaluate(const Model& model, const ParameterStore& params, const std::vector<EncodedInstance>& instances);

// First `n` of a seeded permutation; the whole list when n >= size.
std::vector<EncodedInstance> subsample(const std::vector<EncodedInstance>& instances, std::size_t n,
                                       std::uint64_t seed);

struct ComparisonRow {
    std::string name;
    EvalReport report;
};

// Aligned text table: Model | AUC | RI-AUC | Logloss | RI-Logloss, with RI measured
// against the row named `reference`.
std::string comparison_table(const std::vector<ComparisonRow>& rows, const std::string& reference);

}  // namespace fignn::metrics
