#pragma once

#include "fignn/autodiff.hpp"
#include "fignn/encoder.hpp"
#include "fignn/featurestore.hpp"
#include "fignn/graph.hpp"
#include "fignn/random.hpp"
#include "fignn/scoring.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fignn {

enum class ModelKind { lr, fm, fignn };

std::string to_string(ModelKind k);
ModelKind parse_model_kind(const std::string& s);

/// Fi-GNN ablation switches. Names follow the usual variant labels:
/// -W = no edge attention, -T = shared edge transform, -R = no residual.
struct AblationConfig {
    bool disable_edge_attention = false;
    bool disable_edge_transform = false;
    bool disable_residual = false;
    bool raw_binary_adjacency = false;  // with -W: edge weights 1 instead of 1/(m-1)

    bool any() const { return disable_edge_attention || disable_edge_transform || disable_residual; }

    // Comma list of: no-edge-attention, no-edge-transform, no-residual, raw-binary-adjacency,
    // and the shorthands -W, -T, -R, -E (= -W,-T), -W/T, -E/R.
    static AblationConfig parse(const std::string& list);
    std::vector<std::string> flags() const;

    friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

struct ModelConfig {
    ModelKind kind = ModelKind::fignn;
    std::size_t field_count = 0;     // m
    std::size_t feature_count = 0;   // V, vocabulary size
    std::size_t embedding_dim = 16;  // d
    std::size_t state_dim = 16;      // d'
    std::size_t heads = 2;           // h, equal-sized
    std::size_t steps = 3;           // T
    std::size_t fm_factors = 16;     // k
    double leaky_slope = ad::kDefaultLeakySlope;
    AblationConfig ablation;

    std::size_t head_dim() const { return state_dim / heads; }
    void validate() const;  // throws ConfigError

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

class Model {
public:
    explicit Model(ModelConfig config);
    virtual ~Model() = default;

    const ModelConfig& config() const { return config_; }
    ModelKind kind() const { return config_.kind; }

    // Fresh parameters in a fixed, name-stable order.
    ParameterStore init_parameters(std::uint64_t seed) const;

    virtual ad::Var logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const = 0;

    double predict(const ParameterStore& store, const EncodedInstance& instance) const;
    std::vector<double> predict_all(const ParameterStore& store, const std::vector<EncodedInstance>& instances) const;

protected:
    virtual void add_parameters(ParameterStore& store, Rng& rng) const = 0;
    void check_instance(const EncodedInstance& instance) const;

    ModelConfig config_;
};

/// Embedding -> multi-head self-attention -> feature-graph propagation -> attentional readout.
class FiGnnModel final : public Model {
public:
    explicit FiGnnModel(ModelConfig config);

    struct Forward {
        ad::Var embeddings;    // m x d
        ad::Var initial;       // m x d', H^1
        ad::Var adjacency;     // m x m
        ad::Var final_states;  // m x d', H^T
        scoring::PredictionVars prediction;
    };

    Forward forward(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const;
    ad::Var logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const override;

    std::vector<encoder::AttentionHeadVars> head_vars(ad::Tape& tape, const ParameterStore& store) const;
    graph::NodeTransformVars transform_vars(ad::Tape& tape, const ParameterStore& store) const;
    graph::GruVars gru_vars(ad::Tape& tape, const ParameterStore& store) const;
    scoring::ScoringVars scoring_vars(ad::Tape& tape, const ParameterStore& store) const;

protected:
    void add_parameters(ParameterStore& store, Rng& rng) const override;

private:
    std::vector<std::string> w_out_names_;
    std::vector<std::string> w_in_names_;
};

std::unique_ptr<Model> make_model(const ModelConfig& config);

}  // namespace fignn
