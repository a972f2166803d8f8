#include "fignn/baselines.hpp"

#include "fignn/errors.hpp"

#include <cmath>

namespace fignn {

LogisticRegression::LogisticRegression(ModelConfig config) : Model(std::move(config)) {
    if (config_.kind != ModelKind::lr) throw ConfigError("LogisticRegression requires kind lr");
}

void LogisticRegression::add_parameters(ParameterStore& store, Rng&) const {
    store.add("lr.w", Tensor(config_.feature_count, 1));
    store.add("lr.b", Tensor(1, 1));
}

ad::Var LogisticRegression::logit(ad::Tape& tape, const ParameterStore& store, const EncodedInstance& instance) const {
    check_instance(instance);
    ad::Var w = tape.gather_rows(store, store.id("lr.w"), instance.features);
    return ad::add(ad::sum(w), tape.parameter(store, "lr.b"));
}

FactorizationMachine::FactorizationMachine(ModelConfig config) : Model(std::move(config)) {
    if (config_.kind != ModelKind::fm) throw ConfigError("FactorizationMachine requires kind fm");
}

void FactorizationMachine::add_parameters(ParameterStore& store, Rng& rng) const {
    store.add("fm.w", Tensor(config_.feature_count, 1));
    store.add("fm.b", Tensor(1, 1));
    const double s = 1.0 / std::sqrt(static_cast<double>(config_.fm_factors));
    Tensor v(config_.feature_count, config_.fm_factors);
    for (auto& x : v.values()) x = rng.uniform(-s, s);
    store.add("fm.v", std::move(v));
}

ad::Var FactorizationMachine::pairwise(ad::Tape& tape, const ParameterStore& store,
                                       const EncodedInstance& instance) const {
    ad::Var v = tape.gather_rows(store, store.id("fm.v"), instance.features);  // m x k
    ad::Var total = ad::sum_rows(v);
    return ad::scale(ad::sub(ad::sum(ad::mul(total, total)), ad::sum(ad::mul(v, v))), 0.5);
}

ad::Var FactorizationMachine::logit(ad::Tape& tape, const ParameterStore& store,
                                    const EncodedInstance& instance) const {
    check_instance(instance);
    ad::Var w = tape.gather_rows(store, store.id("fm.w"), instance.features);
    ad::Var linear = ad::add(ad::sum(w), tape.parameter(store, "fm.b"));
    return ad::add(linear, pairwise(tape, store, instance));
}

FiGnnModel build_variant(const AblationConfig& ablation, ModelConfig base) {
    base.kind = ModelKind::fignn;
    base.ablation = ablation;
    return FiGnnModel(std::move(base));
}

}  // namespace fignn
