#pragma once

#include "fignn/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fignn::explain {

/// Edge heat map and node weights with the field names labelling both axes.
struct ExplanationBundle {
    std::vector<std::string> field_names;
    Tensor edge_heatmap;              // m x m
    std::vector<double> node_weights;  // m
};

struct CaseExplanation {
    ExplanationBundle bundle;
    double probability = 0.0;
    int label = 0;
};

// Adjacency and node weights averaged over every instance.
ExplanationBundle global_explanation(const FiGnnModel& model, const ParameterStore& params,
                                     const std::vector<EncodedInstance>& instances,
                                     const std::vector<std::string>& field_names);

// Per-instance adjacency and node weights for the first `count` instances.
std::vector<CaseExplanation> case_explanations(const FiGnnModel& model, const ParameterStore& params,
                                               const std::vector<EncodedInstance>& instances,
                                               const std::vector<std::string>& field_names, std::size_t count = 4);

// CSV with a header row of field names and the field name leading each row.
std::string heatmap_csv(const ExplanationBundle& bundle);

// Columns: field, then one column per named weight vector.
std::string node_weights_csv(const std::vector<std::string>& field_names, const std::vector<std::string>& column_names,
                             const std::vector<std::vector<double>>& columns);

// Writes edge_heatmap_global.csv and node_weights_global.csv.
void write_global(const std::filesystem::path& dir, const ExplanationBundle& bundle);

// Writes edge_heatmap_case_<k>.csv for each case and node_weights_cases.csv
// (field, global, case_1..case_n, with prediction and label rows appended).
void write_cases(const std::filesystem::path& dir, const ExplanationBundle& global,
                 const std::vector<CaseExplanation>& cases);

}  // namespace fignn::explain
