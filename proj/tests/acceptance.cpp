// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "fignn/baselines.hpp"
#include "fignn/checkpoint.hpp"
#include "fignn/errors.hpp"
#include "fignn/graph.hpp"
#include "fignn/metrics.hpp"
#include "fignn/scoring.hpp"
#include "fignn/training.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/toy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

using namespace fignn;
namespace ft = fignn::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------- 1
Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    FiGnnModel model(ft::toy_config());
    ParameterStore store = model.init_parameters(1);
    double worst = 0;
    std::string where;
    std::size_t checked = 0;
    for (int label : {0, 1}) {
        const auto inst = ft::toy_instance(label);
        auto r = ft::check_parameter_gradients(store, [&](ad::Tape& tape, const ParameterStore& s) {
            return ad::log_loss_from_logit(model.logit(tape, s, inst), label);
        });
        checked += r.checked;
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = r.worst;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && secs < 30.0 && checked == 2 * store.scalar_count(),
            fmt("%zu entries, max rel err %.2e at %s, %.2fs", checked, worst, where.c_str(), secs)};
}

// ---------------------------------------------------------------- 2
Outcome adjacency_invariants() {
    Rng rng(2);
    double worst_sum = 0, worst_diag = 0, min_entry = 1;
    for (int draw = 0; draw < 1000; ++draw) {
        ModelConfig c = ft::toy_config();
        c.field_count = 2 + rng.below(7);
        c.feature_count = 4 * c.field_count;
        c.heads = 1 + rng.below(2);
        c.state_dim = c.heads * (1 + rng.below(4));
        FiGnnModel model(c);
        ParameterStore p = model.init_parameters(draw);
        const double scale = std::exp(rng.uniform(-2, 2));
        for (ParamId id = 0; id < p.size(); ++id)
            for (auto& v : p.value(id).values()) v = rng.uniform(-scale, scale);
        EncodedInstance inst{0, {}};
        for (std::size_t f = 0; f < c.field_count; ++f) inst.features.push_back(4 * f + rng.below(4));
        ad::Tape tape;
        const Tensor a = model.forward(tape, p, inst).adjacency.value();
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double s = 0;
            worst_diag = std::max(worst_diag, std::abs(a(i, i)));
            for (std::size_t j = 0; j < a.cols(); ++j) {
                min_entry = std::min(min_entry, a(i, j));
                if (j != i) s += a(i, j);
            }
            worst_sum = std::max(worst_sum, std::abs(s - 1));
        }
    }
    return {worst_diag == 0.0 && min_entry >= 0.0 && worst_sum <= 1e-12,
            fmt("1000 draws, max |diag| %.1e, min entry %.2e, max |row sum - 1| %.1e", worst_diag, min_entry,
                worst_sum)};
}

// ---------------------------------------------------------------- 3
Outcome aggregation_oracle() {
    Rng rng(3);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + rng.below(7), d = 1 + rng.below(8);
        std::vector<Tensor> w_out, w_in;
        for (std::size_t i = 0; i < m; ++i) {
            w_out.push_back(ft::random_tensor(d, d, rng));
            w_in.push_back(ft::random_tensor(d, d, rng));
        }
        Tensor bias = ft::random_tensor(d, 1, rng), h = ft::random_tensor(m, d, rng);
        ad::Tape tape;
        graph::NodeTransformVars tf;
        for (std::size_t i = 0; i < m; ++i) {
            tf.w_out.push_back(tape.constant(w_out[i]));
            tf.w_in.push_back(tape.constant(w_in[i]));
        }
        tf.bias = tape.constant(bias);
        auto adj = graph::edge_attention(tape.constant(h), tape.constant(ft::random_tensor(1, 2 * d, rng)));
        const Tensor fast = graph::aggregate(tape.constant(h), adj, tf).value();
        worst = std::max(worst, max_abs_diff(fast, ft::aggregate_oracle(h, adj.value(), w_out, w_in, bias)));
    }
    return {worst < 1e-10, fmt("100 cases m<=8, max abs diff %.2e", worst)};
}

// ---------------------------------------------------------------- 4
Outcome auc_oracle() {
    Rng rng(4);
    std::size_t mismatches = 0, with_ties = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(199);
        const std::uint64_t levels = 2 + rng.below(30);
        std::vector<double> s;
        std::vector<int> y;
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back(static_cast<double>(rng.below(levels)) / static_cast<double>(levels));
            y.push_back(static_cast<int>(rng.below(2)));
        }
        y[0] = 1;
        y[1] = 0;
        std::vector<double> sorted = s;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) ++with_ties;
        if (metrics::auc(s, y) != ft::auc_oracle(s, y)) ++mismatches;
    }
    return {mismatches == 0, fmt("1000 sets n<=200 (%zu with ties), %zu inexact", with_ties, mismatches)};
}

// ---------------------------------------------------------------- 5
Outcome fm_identity() {
    Rng rng(5);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig c = ft::toy_config(ModelKind::fm);
        c.field_count = 2 + rng.below(9);
        c.fm_factors = 1 + rng.below(8);
        c.feature_count = 5 * c.field_count;
        FactorizationMachine fm(c);
        ParameterStore p = fm.init_parameters(trial);
        EncodedInstance inst{1, {}};
        for (std::size_t f = 0; f < c.field_count; ++f) inst.features.push_back(5 * f + rng.below(5));
        Tensor rows(c.field_count, c.fm_factors);
        for (std::size_t f = 0; f < c.field_count; ++f)
            for (std::size_t k = 0; k < c.fm_factors; ++k) rows(f, k) = p.value("fm.v")(inst.features[f], k);
        ad::Tape tape;
        worst = std::max(worst, std::abs(fm.pairwise(tape, p, inst).value().item() - ft::fm_pairwise_oracle(rows)));
    }
    return {worst < 1e-10, fmt("100 instances m<=10 k<=8, max abs diff %.2e", worst)};
}

// ---------------------------------------------------------------- 6
Outcome parameter_count() {
    Rng rng(6);
    std::size_t bad = 0;
    for (int t = 0; t < 50; ++t) {
        ModelConfig c;
        c.kind = static_cast<ModelKind>(rng.below(3));
        c.field_count = 2 + rng.below(10);
        c.feature_count = c.field_count + rng.below(100);
        c.embedding_dim = 1 + rng.below(16);
        c.heads = 1 + rng.below(4);
        c.state_dim = c.heads * (1 + rng.below(6));
        c.steps = 1 + rng.below(4);
        c.fm_factors = 1 + rng.below(16);
        c.ablation.disable_edge_attention = rng.below(2);
        c.ablation.disable_edge_transform = rng.below(2);
        c.ablation.disable_residual = rng.below(2);
        if (training::count_parameters(c) != make_model(c)->init_parameters(t).scalar_count()) ++bad;
    }
    const auto toy = ft::toy_config();
    const std::size_t formula = training::count_parameters(toy);
    const std::size_t live = FiGnnModel(toy).init_parameters(0).scalar_count();
    return {bad == 0 && formula == 310 && live == 310,
            fmt("50 configs, %zu mismatches; worked example formula %zu, live %zu", bad, formula, live)};
}

// ---------------------------------------------------------------- 7 and 8
struct SyntheticRun {
    double test_auc = 0;
    double seconds = 0;
};

struct SyntheticTask {
    ft::SyntheticTask task = ft::make_xor_task(20000, 4, 10, 0.1, 7);
    DatasetSplit split = split_dataset(task.instances, 1);
    std::map<std::string, SyntheticRun> cache;

    ModelConfig config(ModelKind kind, const std::string& ablation) const {
        ModelConfig c;
        c.kind = kind;
        c.field_count = 4;
        c.feature_count = task.vocab.total_feature_count();
        c.embedding_dim = 16;
        c.state_dim = 16;
        c.heads = 2;
        c.steps = 2;
        c.ablation = AblationConfig::parse(ablation);
        return c;
    }

    SyntheticRun run(ModelKind kind, const std::string& ablation, std::uint64_t seed) {
        const std::string key = to_string(kind) + ablation + "#" + std::to_string(seed);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
        const auto t0 = Clock::now();
        auto model = make_model(config(kind, ablation));
        training::TrainingConfig cfg;
        cfg.batch_size = 128;
        cfg.learning_rate = 3e-3;
        cfg.max_epochs = 6;
        cfg.patience = 2;
        cfg.seed = seed;
        auto result = training::train(*model, split, cfg);
        SyntheticRun r{metrics::evaluate(*model, result.parameters, split.test).auc, seconds_since(t0)};
        cache[key] = r;
        return r;
    }
};

Outcome interaction_recovery(SyntheticTask& s) {
    const auto t0 = Clock::now();
    const auto fignn = s.run(ModelKind::fignn, "", 1);
    const auto lr = s.run(ModelKind::lr, "", 1);
    const double secs = seconds_since(t0);
    return {fignn.test_auc >= 0.85 && lr.test_auc <= 0.60 && secs < 600,
            fmt("Fi-GNN test AUC %.4f (>= 0.85), LR %.4f (<= 0.60), %.0fs", fignn.test_auc, lr.test_auc, secs)};
}

Outcome ablation_ordering(SyntheticTask& s) {
    auto median = [&](const std::string& ablation) {
        std::vector<double> aucs;
        for (std::uint64_t seed : {1, 2, 3}) aucs.push_back(s.run(ModelKind::fignn, ablation, seed).test_auc);
        std::sort(aucs.begin(), aucs.end());
        return aucs[1];
    };
    const double full = median(""), t = median("-T"), wt = median("-W/T");
    const double tol = 0.005;
    return {full + tol >= t && t + tol >= wt,
            fmt("median test AUC: full %.4f, -T %.4f, -W/T %.4f (tie tolerance %.3f)", full, t, wt, tol)};
}

// ---------------------------------------------------------------- 9
Outcome overfit_capacity() {
    auto task = ft::make_xor_task(256, 4, 10, 0.1, 9);
    ModelConfig c;
    c.field_count = 4;
    c.feature_count = task.vocab.total_feature_count();
    c.steps = 2;
    FiGnnModel model(c);
    ParameterStore p = model.init_parameters(1);
    training::OptimizerState opt(p);
    training::TrainingConfig cfg;
    cfg.batch_size = 16;
    cfg.learning_rate = 2e-3;
    Rng rng(2);
    std::vector<int> labels;
    for (const auto& i : task.instances) labels.push_back(i.label);
    double loss = 1;
    int epoch = 0;
    while (epoch < 200 && loss >= 0.05) {
        ++epoch;
        for (const auto& b : training::balanced_batches(task.instances, cfg.batch_size, rng)) {
            training::accumulate_batch_gradient(model, p, task.instances, b);
            training::rmsprop_step(p, opt, cfg);
        }
        loss = scoring::log_loss(model.predict_all(p, task.instances), labels);
    }
    return {loss < 0.05, fmt("training logloss %.4f after %d epochs (limit 200)", loss, epoch)};
}

// ---------------------------------------------------------------- 10
Outcome ri_formula() {
    const std::string auc = metrics::format_percent(metrics::relative_improvement(0.7820, 0.8062));
    const std::string ll = metrics::format_percent(metrics::relative_improvement(0.4695, 0.4453));
    return {auc == "3.00%" && ll == "5.43%", "RI-AUC " + auc + ", RI-Logloss " + ll};
}

// ---------------------------------------------------------------- 11
Outcome determinism() {
    auto task = ft::make_xor_task(1000, 4, 6, 0.1, 11);
    auto split = split_dataset(task.instances, 3);
    ModelConfig c;
    c.field_count = 4;
    c.feature_count = task.vocab.total_feature_count();
    c.embedding_dim = 8;
    c.state_dim = 8;
    c.steps = 2;
    FiGnnModel model(c);
    training::TrainingConfig cfg;
    cfg.batch_size = 64;
    cfg.max_epochs = 3;
    cfg.seed = 42;
    auto checkpoint_bytes = [&] {
        auto r = training::train(model, split, cfg);
        io::Checkpoint ck{c, task.vocab.schema().names(), io::hash_hex(io::fnv1a64(task.vocab.serialize())), "vocab.json",
                          {{"config", cfg.to_json()}, {"best_epoch", r.best_epoch}}, r.parameters};
        return io::encode_checkpoint(ck);
    };
    const std::string a = checkpoint_bytes(), b = checkpoint_bytes();
    const std::string again = io::encode_checkpoint(io::decode_checkpoint(a));
    return {a == b && again == a, fmt("%zu-byte checkpoints %s; round trip %s", a.size(),
                                      a == b ? "identical" : "differ", again == a ? "byte-stable" : "drifts")};
}

// ---------------------------------------------------------------- 12
Outcome balanced_batching() {
    Rng rng(12);
    std::size_t batches = 0, unbalanced = 0;
    for (int d = 0; d < 100; ++d) {
        const std::size_t pos = 1 + rng.below(500), neg = 1 + rng.below(500);
        std::vector<EncodedInstance> data;
        for (std::size_t i = 0; i < pos + neg; ++i) data.push_back({i < pos ? 1 : 0, {0, 1}});
        const std::size_t size = 2 * (1 + rng.below(64));
        for (const auto& b : training::balanced_batches(data, size, rng)) {
            ++batches;
            std::size_t p = 0;
            for (auto i : b) p += static_cast<std::size_t>(data[i].label);
            if (b.size() != size || 2 * p != size) ++unbalanced;
        }
    }
    return {unbalanced == 0, fmt("100 datasets, %zu batches, %zu unbalanced", batches, unbalanced)};
}

}  // namespace

int main() {
    SyntheticTask synthetic;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradient_correctness},
        {"adjacency invariants", adjacency_invariants},
        {"aggregation oracle", aggregation_oracle},
        {"AUC oracle", auc_oracle},
        {"FM identity", fm_identity},
        {"parameter count", parameter_count},
        {"synthetic interaction recovery", [&] { return interaction_recovery(synthetic); }},
        {"ablation ordering", [&] { return ablation_ordering(synthetic); }},
        {"overfit capacity", overfit_capacity},
        {"RI formula", ri_formula},
        {"determinism", determinism},
        {"balanced batching", balanced_batching},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
