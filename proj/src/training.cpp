#include "fignn/training.hpp"

#include "fignn/errors.hpp"
#include "fignn/metrics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fignn::training {

void TrainingConfig::validate() const {
    if (!(learning_rate > 0) || !(rmsprop_epsilon > 0)) throw ConfigError("learning_rate and epsilon must be positive");
    if (!(rmsprop_decay > 0 && rmsprop_decay < 1)) throw ConfigError("rmsprop_decay must lie in (0, 1)");
    if (batch_size < 2 || batch_size % 2 != 0) throw ConfigError("batch_size must be a positive even number");
}

nlohmann::json TrainingConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"rmsprop_decay", rmsprop_decay}, {"rmsprop_epsilon", rmsprop_epsilon},
            {"batch_size", batch_size},       {"max_epochs", max_epochs},       {"patience", patience},
            {"seed", seed}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    TrainingConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.rmsprop_decay = j.value("rmsprop_decay", c.rmsprop_decay);
        c.rmsprop_epsilon = j.value("rmsprop_epsilon", c.rmsprop_epsilon);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed training config: ") + e.what());
    }
    c.validate();
    return c;
}

OptimizerState::OptimizerState(const ParameterStore& store) {
    for (ParamId p = 0; p < store.size(); ++p)
        mean_square_.emplace_back(store.value(p).rows(), store.value(p).cols());
}

void rmsprop_step(ParameterStore& store, OptimizerState& opt, const TrainingConfig& cfg) {
    auto& acc = opt.mean_square();
    if (acc.size() != store.size()) throw InvariantError("optimizer state does not match parameter store");
    const double rho = cfg.rmsprop_decay;
    for (ParamId p = 0; p < store.size(); ++p) {
        const Tensor& g = store.grad(p);
        if (!g.all_finite()) throw NumericError("non-finite gradient for parameter '" + store.name(p) + "'");
        Tensor& theta = store.value(p);
        Tensor& s = acc[p];
        for (std::size_t i = 0; i < g.size(); ++i) {
            s[i] = rho * s[i] + (1.0 - rho) * g[i] * g[i];
            theta[i] -= cfg.learning_rate * g[i] / (std::sqrt(s[i]) + cfg.rmsprop_epsilon);
        }
    }
}

std::vector<Batch> balanced_batches(const std::vector<EncodedInstance>& instances, std::size_t batch_size, Rng& rng) {
    if (batch_size < 2 || batch_size % 2 != 0) throw ConfigError("batch_size must be a positive even number");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < instances.size(); ++i) (instances[i].label == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw DataError("balanced batching needs both positive and negative instances");
    const std::size_t half = batch_size / 2;
    const std::size_t n_batches = (std::max(pos.size(), neg.size()) + half - 1) / half;

    struct Stream {
        std::vector<std::size_t> items;
        std::size_t at = 0;
        std::size_t next(Rng& rng) {
            if (at == items.size()) {
                rng.shuffle(items);
                at = 0;
            }
            return items[at++];
        }
    };
    rng.shuffle(pos);
    rng.shuffle(neg);
    Stream ps{std::move(pos)}, ns{std::move(neg)};
    std::vector<Batch> batches(n_batches);
    for (auto& b : batches) {
        b.reserve(batch_size);
        for (std::size_t k = 0; k < half; ++k) b.push_back(ps.next(rng));
        for (std::size_t k = 0; k < half; ++k) b.push_back(ns.next(rng));
        rng.shuffle(b);
    }
    return batches;
}

double accumulate_batch_gradient(const Model& model, ParameterStore& store,
                                 const std::vector<EncodedInstance>& instances, const Batch& batch) {
    store.zero_grad();
    const double inv = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (std::size_t idx : batch) {
        const auto& inst = instances.at(idx);
        ad::Tape tape;
        ad::Var loss = ad::log_loss_from_logit(model.logit(tape, store, inst), inst.label);
        total += loss.value().item();
        tape.backward(ad::scale(loss, inv), store);
    }
    return total * inv;
}

std::string TrainingHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,train_loss,val_auc,val_logloss,seconds\n";
    char buf[256];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.3f\n", e.epoch, e.train_loss, e.val_auc,
                      e.val_logloss, e.seconds);
        os << buf;
    }
    return os.str();
}

TrainingResult train(const Model& model, const DatasetSplit& data, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch) {
    cfg.validate();
    TrainingResult result{model.init_parameters(cfg.seed), {}, 0};
    if (cfg.max_epochs == 0) return result;
    if (data.train.empty() || data.validation.empty()) throw DataError("training needs train and validation instances");

    ParameterStore params = result.parameters;
    OptimizerState opt(params);
    Rng batch_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    double best_auc = -1.0;
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto batches = balanced_batches(data.train, cfg.batch_size, batch_rng);
        double loss_sum = 0.0;
        for (const auto& b : batches) {
            loss_sum += accumulate_batch_gradient(model, params, data.train, b);
            rmsprop_step(params, opt, cfg);
        }
        const auto report = metrics::evaluate(model, params, data.validation);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(batches.size());
        rec.val_auc = report.auc;
        rec.val_logloss = report.logloss;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (report.auc > best_auc) {
            best_auc = report.auc;
            result.parameters = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.parameters.zero_grad();
    return result;
}

std::size_t count_parameters(const ModelConfig& c) {
    c.validate();
    const std::size_t v = c.feature_count;
    switch (c.kind) {
    case ModelKind::lr: return v + 1;
    case ModelKind::fm: return v + 1 + v * c.fm_factors;
    case ModelKind::fignn: break;
    }
    const std::size_t dp = c.state_dim;
    std::size_t n = v * c.embedding_dim;                    // embeddings
    n += c.heads * 3 * c.head_dim() * c.embedding_dim;      // Q, K, V per head
    if (!c.ablation.disable_edge_attention) n += 2 * dp;    // W_w
    n += c.ablation.disable_edge_transform ? dp * dp : 2 * c.field_count * dp * dp;
    n += dp;                                                // b_p
    n += 6 * dp * dp + 3 * dp;                              // GRU
    n += 2 * (dp + 1);                                      // score and gate heads
    return n;
}

}  // namespace fignn::training
