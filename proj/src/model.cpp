#include "fignn/model.hpp"

#include "fignn/baselines.hpp"
#include "fignn/errors.hpp"

#include <cmath>
#include <sstream>

namespace fignn {

std::string to_string(ModelKind k) {
    switch (k) {
    case ModelKind::lr: return "lr";
    case ModelKind::fm: return "fm";
    case ModelKind::fignn: return "fignn";
    }
    return "?";
}

ModelKind parse_model_kind(const std::string& s) {
    if (s == "lr") return ModelKind::lr;
    if (s == "fm") return ModelKind::fm;
    if (s == "fignn") return ModelKind::fignn;
    throw ConfigError("unknown model kind '" + s + "' (expected lr, fm or fignn)");
}

// ---------------------------------------------------------------- ablation

AblationConfig AblationConfig::parse(const std::string& list) {
    AblationConfig a;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "no-edge-attention" || item == "-W") {
            a.disable_edge_attention = true;
        } else if (item == "no-edge-transform" || item == "-T") {
            a.disable_edge_transform = true;
        } else if (item == "no-residual" || item == "-R") {
            a.disable_residual = true;
        } else if (item == "raw-binary-adjacency") {
            a.raw_binary_adjacency = true;
        } else if (item == "-E" || item == "-W/T") {
            a.disable_edge_attention = a.disable_edge_transform = true;
        } else if (item == "-E/R") {
            a.disable_edge_attention = a.disable_edge_transform = a.disable_residual = true;
        } else {
            throw ConfigError("unknown ablation '" + item + "'");
        }
    }
    return a;
}

std::vector<std::string> AblationConfig::flags() const {
    std::vector<std::string> out;
    if (disable_edge_attention) out.emplace_back("no-edge-attention");
    if (disable_edge_transform) out.emplace_back("no-edge-transform");
    if (disable_residual) out.emplace_back("no-residual");
    if (raw_binary_adjacency) out.emplace_back("raw-binary-adjacency");
    return out;
}

// ---------------------------------------------------------------- config

void ModelConfig::validate() const {
    if (field_count < 2) throw ConfigError("model needs at least 2 fields");
    if (feature_count < field_count) throw ConfigError("feature_count smaller than field_count");
    if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (kind == ModelKind::fm && fm_factors < 1) throw ConfigError("fm_factors must be >= 1");
    if (kind != ModelKind::fignn) return;
    if (state_dim < 1 || heads < 1) throw ConfigError("state_dim and heads must be >= 1");
    if (state_dim % heads != 0)
        throw ConfigError("state_dim " + std::to_string(state_dim) + " is not divisible by heads " +
                          std::to_string(heads));
    if (steps < 1) throw ConfigError("steps (T) must be >= 1");
    if (!(leaky_slope >= 0)) throw ConfigError("leaky_slope must be non-negative");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"kind", to_string(kind)},
            {"field_count", field_count},
            {"feature_count", feature_count},
            {"embedding_dim", embedding_dim},
            {"state_dim", state_dim},
            {"heads", heads},
            {"steps", steps},
            {"fm_factors", fm_factors},
            {"leaky_slope", leaky_slope},
            {"ablation", ablation.flags()}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    try {
        ModelConfig c;
        c.kind = parse_model_kind(j.at("kind").get<std::string>());
        c.field_count = j.at("field_count").get<std::size_t>();
        c.feature_count = j.at("feature_count").get<std::size_t>();
        c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
        c.state_dim = j.value("state_dim", c.state_dim);
        c.heads = j.value("heads", c.heads);
        c.steps = j.value("steps", c.steps);
        c.fm_factors = j.value("fm_factors", c.fm_factors);
        c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
        std::string flags;
        for (const auto& f : j.value("ablation", nlohmann::json::array())) flags += f.get<std::string>() + ",";
        c.ablation = AblationConfig::parse(flags);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
}

// ---------------------------------------------------------------- model base

Model::Model(ModelConfig config) : config_(std::move(config)) { config_.validate(); }

ParameterStore Model::init_parameters(std::uint64_t seed) const {
    ParameterStore store;
    Rng rng(seed);
    add_parameters(store, rng);
    return store;
}

void Model::check_instance(const EncodedInstance& instance) const {
    if (instance.features.size() != config_.field_count)
        throw DataError("instance has " + std::to_string(instance.features.size()) + " features, model expects " +
                        std::to_string(config_.field_count));
}

double Model::predict(const ParameterStore& store, const EncodedInstance& instance) const {
    ad::Tape tape;
    const double p = ad::sigmoid_scalar(logit(tape, store, instance).value().item());
    return std::clamp(p, ad::kProbabilityClamp, 1.0 - ad::kProbabilityClamp);
}

std::vector<double> Model::predict_all(const ParameterStore& store,
                                       const std::vector<EncodedInstance>& instances) const {
    std::vector<double> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back(predict(store, inst));
    return out;
}

// ---------------------------------------------------------------- Fi-GNN

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, double s, Rng& rng) {
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = rng.uniform(-s, s);
    return t;
}

}  // namespace

FiGnnModel::FiGnnModel(ModelConfig config) : Model(std::move(config)) {
    if (config_.kind != ModelKind::fignn) throw ConfigError("FiGnnModel requires kind fignn");
    for (std::size_t i = 0; i < config_.field_count; ++i) {
        w_out_names_.push_back("graph.node" + std::to_string(i) + ".W_out");
        w_in_names_.push_back("graph.node" + std::to_string(i) + ".W_in");
    }
}

void FiGnnModel::add_parameters(ParameterStore& store, Rng& rng) const {
    const auto& c = config_;
    const std::size_t dp = c.state_dim;
    const double s = 1.0 / std::sqrt(static_cast<double>(dp));
    store.add("embed.table", uniform_matrix(c.feature_count, c.embedding_dim, s, rng));
    for (std::size_t k = 0; k < c.heads; ++k)
        for (const char* which : {"Q", "K", "V"})
            store.add("attn.head" + std::to_string(k) + "." + which,
                      uniform_matrix(c.head_dim(), c.embedding_dim, s, rng));
    if (!c.ablation.disable_edge_attention) store.add("graph.W_w", uniform_matrix(1, 2 * dp, s, rng));
    if (c.ablation.disable_edge_transform) {
        store.add("graph.W_p", uniform_matrix(dp, dp, s, rng));
    } else {
        for (std::size_t i = 0; i < c.field_count; ++i) {
            store.add(w_out_names_[i], uniform_matrix(dp, dp, s, rng));
            store.add(w_in_names_[i], uniform_matrix(dp, dp, s, rng));
        }
    }
    store.add("graph.b_p", Tensor(dp, 1));
    for (const char* gate : {"z", "r", "h"}) {
        store.add(std::string("graph.gru.W") + gate, uniform_matrix(dp, dp, s, rng));
        store.add(std::string("graph.gru.U") + gate, uniform_matrix(dp, dp, s, rng));
        store.add(std::string("graph.gru.b") + gate, Tensor(dp, 1));
    }
    store.add("score.w", uniform_matrix(1, dp, s, rng));
    store.add("score.b", Tensor(1, 1));
    store.add("gate.w", uniform_matrix(1, dp, s, rng));
    store.add("gate.b", Tensor(1, 1));
}

std::vector<encoder::AttentionHeadVars> FiGnnModel::head_vars(ad::Tape& tape, const ParameterStore& store) const {
    std::vector<encoder::AttentionHeadVars> heads;
    for (std::size_t k = 0; k < config_.heads; ++k) {
        const std::string p = "attn.head" + std::to_string(k) + ".";
        heads.push_back({tape.parameter(store, p + "Q"), tape.parameter(store, p + "K"), tape.parameter(store, p + "V")});
    }
    return heads;
}

graph::NodeTransformVars FiGnnModel::transform_vars(ad::Tape& tape, const ParameterStore& store) const {
    graph::NodeTransformVars tf;
    if (config_.ablation.disable_edge_transform) {
        tf.shared = tape.parameter(store, "graph.W_p");
    } else {
        for (std::size_t i = 0; i < config_.field_count; ++i) {
            tf.w_out.push_back(tape.parameter(store, w_out_names_[i]));
            tf.w_in.push_back(tape.parameter(store, w_in_names_[i]));
        }
    }
    tf.bias = tape.parameter(store, "graph.b_p");
    return tf;
}

graph::GruVars FiGnnModel::gru_vars(ad::Tape& tape, const ParameterStore& store) const {
    auto p = [&](const char* n) { return tape.parameter(store, std::string("graph.gru.") + n); };
    return {p("Wz"), p("Uz"), p("bz"), p("Wr"), p("Ur"), p("br"), p("Wh"), p("Uh"), p("bh")};
}

scoring::ScoringVars FiGnnModel::scoring_vars(ad::Tape& tape, const ParameterStore& store) const {
    return {tape.parameter(store, "score.w"), tape.parameter(store, "score.b"), tape.parameter(store, "gate.w"),
            tape.parameter(store, "gate.b")};
}

FiGnnModel::Forward FiGnnModel::forward(ad::Tape& tape, const ParameterStore& store,
                                        const EncodedInstance& instance) const {
    check_instance(instance);
    const auto& abl = config_.ablation;
    Forward f;
    f.embeddings = encoder::embed(tape, store, store.id("embed.table"), instance);
    const auto heads = head_vars(tape, store);
    f.initial = encoder::initial_states(f.embeddings, heads);
    f.adjacency = abl.disable_edge_attention
                      ? graph::uniform_adjacency(tape, config_.field_count, abl.raw_binary_adjacency)
                      : graph::edge_attention(f.initial, tape.parameter(store, "graph.W_w"), config_.leaky_slope);
    f.final_states = graph::propagate(f.initial, f.adjacency, transform_vars(tape, store), gru_vars(tape, store),
                                      config_.steps, !abl.disable_residual);
    f.prediction = scoring::score(f.final_states, scoring_vars(tape, store));
    return f;
}

ad::Var FiGnnModel::logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const {
    return forward(tape, store, instance).prediction.logit;
}

std::unique_ptr<Model> make_model(const ModelConfig& config) {
    switch (config.kind) {
    case ModelKind::lr: return std::make_unique<LogisticRegression>(config);
    case ModelKind::fm: return std::make_unique<FactorizationMachine>(config);
    case ModelKind::fignn: return std::make_unique<FiGnnModel>(config);
    }
    throw ConfigError("unknown model kind");
}

}  // namespace fignn
