#include "fignn/baselines.hpp"
#include "fignn/errors.hpp"
#include "fignn/training.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include <cmath>

using namespace fignn;
using fignn::testing::toy_config;
using fignn::testing::toy_instance;

TEST_CASE("logistic regression") {
    LogisticRegression lr(toy_config(ModelKind::lr));
    ParameterStore p = lr.init_parameters(1);
    CHECK(p.scalar_count() == 10);
    CHECK(lr.predict(p, toy_instance()) == 0.5);
    p.value("lr.b")[0] = 1.0;
    CHECK(lr.predict(p, toy_instance()) == doctest::Approx(0.731059).epsilon(1e-6));
    p.value("lr.w")[0] = 5.0;  // feature 0 is not active in the toy instance
    CHECK(lr.predict(p, toy_instance()) == doctest::Approx(0.731059).epsilon(1e-6));
    p.value("lr.w")[5] = -1.0;
    CHECK(lr.predict(p, toy_instance()) == 0.5);
    CHECK_THROWS_AS(lr.predict(p, EncodedInstance{1, {1, 2}}), DataError);
}

TEST_CASE("logistic regression ignores graph hyper-parameters") {
    auto a = toy_config(ModelKind::lr), b = a;
    b.state_dim = 32;
    b.steps = 5;
    b.heads = 4;
    b.ablation = AblationConfig::parse("-E/R");
    LogisticRegression la(a), lb(b);
    ParameterStore pa = la.init_parameters(3), pb = lb.init_parameters(3);
    CHECK(pa == pb);
    Rng rng(2);
    for (auto& x : pa.value("lr.w").values()) x = rng.uniform(-1, 1);
    pb = pa;
    CHECK(la.predict(pa, toy_instance()) == lb.predict(pb, toy_instance()));
    CHECK(training::count_parameters(a) == training::count_parameters(b));
}

TEST_CASE("fm with zero latent vectors reduces to lr") {
    FactorizationMachine fm(toy_config(ModelKind::fm));
    LogisticRegression lr(toy_config(ModelKind::lr));
    ParameterStore pf = fm.init_parameters(4), pl = lr.init_parameters(4);
    Rng rng(5);
    for (std::size_t i = 0; i < 9; ++i) pf.value("fm.w")[i] = pl.value("lr.w")[i] = rng.uniform(-1, 1);
    pf.value("fm.b")[0] = pl.value("lr.b")[0] = 0.3;
    pf.value("fm.v").fill(0.0);
    CHECK(fm.predict(pf, toy_instance()) == lr.predict(pl, toy_instance()));
}

TEST_CASE("fm pairwise term for two unit vectors") {
    auto c = toy_config(ModelKind::fm);
    c.field_count = 2;
    c.feature_count = 4;
    c.fm_factors = 2;
    FactorizationMachine fm(c);
    ParameterStore p = fm.init_parameters(1);
    p.value("fm.v").fill(1.0);
    ad::Tape tape;
    CHECK(fm.pairwise(tape, p, EncodedInstance{1, {0, 3}}).value().item() == 2.0);
}

TEST_CASE("fm identity equals the double loop") {
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig c = toy_config(ModelKind::fm);
        c.field_count = 2 + rng.below(9);
        c.fm_factors = 1 + rng.below(8);
        c.feature_count = c.field_count * 4;
        FactorizationMachine fm(c);
        ParameterStore p = fm.init_parameters(trial);
        EncodedInstance inst{0, {}};
        for (std::size_t f = 0; f < c.field_count; ++f) inst.features.push_back(4 * f + rng.below(4));
        Tensor rows(c.field_count, c.fm_factors);
        for (std::size_t f = 0; f < c.field_count; ++f)
            for (std::size_t k = 0; k < c.fm_factors; ++k) rows(f, k) = p.value("fm.v")(inst.features[f], k);
        ad::Tape tape;
        CHECK(std::abs(fm.pairwise(tape, p, inst).value().item() - fignn::testing::fm_pairwise_oracle(rows)) < 1e-10);
    }
}

TEST_CASE("baseline gradients match finite differences") {
    for (auto kind : {ModelKind::lr, ModelKind::fm}) {
        auto model = make_model(toy_config(kind));
        ParameterStore p = model->init_parameters(7);
        Rng rng(8);
        for (ParamId id = 0; id < p.size(); ++id)
            for (auto& x : p.value(id).values()) x = rng.uniform(-0.5, 0.5);
        auto r = fignn::testing::check_parameter_gradients(p, [&](ad::Tape& tape, const ParameterStore& s) {
            return ad::log_loss_from_logit(model->logit(tape, s, toy_instance()), 1);
        });
        INFO(to_string(kind) << " " << r.worst);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("ablation parsing") {
    CHECK(AblationConfig::parse("") == AblationConfig{});
    auto w = AblationConfig::parse("no-edge-attention");
    CHECK(w.disable_edge_attention);
    CHECK_FALSE(w.disable_edge_transform);
    CHECK(AblationConfig::parse("-W") == w);
    auto e = AblationConfig::parse("-E");
    CHECK(e.disable_edge_attention);
    CHECK(e.disable_edge_transform);
    CHECK_FALSE(e.disable_residual);
    CHECK(AblationConfig::parse("-W/T") == e);
    CHECK(AblationConfig::parse("no-edge-attention,no-edge-transform") == e);
    auto all = AblationConfig::parse("-E/R");
    CHECK(all.disable_residual);
    CHECK(AblationConfig::parse("-T,-R").flags() == std::vector<std::string>{"no-edge-transform", "no-residual"});
    CHECK_THROWS_AS(AblationConfig::parse("-X"), ConfigError);
}

TEST_CASE("variant with no flags is the full model") {
    FiGnnModel full(toy_config());
    FiGnnModel same = build_variant({}, toy_config());
    ParameterStore p = full.init_parameters(9), q = same.init_parameters(9);
    CHECK(p == q);
    ad::Tape t1, t2;
    CHECK(full.forward(t1, p, toy_instance()).prediction.logit.value() ==
          same.forward(t2, q, toy_instance()).prediction.logit.value());
}

TEST_CASE("shared transform removes 2m d'^2 - d'^2 parameters") {
    Rng rng(10);
    for (int t = 0; t < 10; ++t) {
        ModelConfig c = toy_config();
        c.field_count = 2 + rng.below(6);
        c.feature_count = 3 * c.field_count;
        c.heads = 1 + rng.below(3);
        c.state_dim = c.heads * (1 + rng.below(4));
        FiGnnModel full(c);
        FiGnnModel shared = build_variant(AblationConfig::parse("-T"), c);
        const std::size_t m = c.field_count, dp = c.state_dim;
        CHECK(full.init_parameters(1).scalar_count() - shared.init_parameters(1).scalar_count() ==
              2 * m * dp * dp - dp * dp);
    }
}

TEST_CASE("disabled edge attention uses uniform rows") {
    auto c = toy_config();
    c.field_count = 5;
    c.feature_count = 15;
    FiGnnModel w = build_variant(AblationConfig::parse("-W"), c);
    ParameterStore p = w.init_parameters(2);
    CHECK_FALSE(p.contains("graph.W_w"));
    ad::Tape tape;
    auto a = w.forward(tape, p, EncodedInstance{1, {0, 3, 6, 9, 12}}).adjacency.value();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(a(i, j) == (i == j ? 0.0 : 0.25));

    FiGnnModel raw = build_variant(AblationConfig::parse("-W,raw-binary-adjacency"), c);
    ad::Tape t2;
    auto b = raw.forward(t2, raw.init_parameters(2), EncodedInstance{1, {0, 3, 6, 9, 12}}).adjacency.value();
    CHECK(b(0, 1) == 1.0);
    CHECK(b(1, 1) == 0.0);
}

TEST_CASE("every ablation variant passes the gradient check") {
    for (const char* flags : {"-W", "-T", "-R", "-E", "-E/R", "-W,raw-binary-adjacency"}) {
        FiGnnModel model = build_variant(AblationConfig::parse(flags), toy_config());
        ParameterStore p = model.init_parameters(11);
        auto r = fignn::testing::check_parameter_gradients(p, [&](ad::Tape& tape, const ParameterStore& s) {
            return ad::log_loss_from_logit(model.logit(tape, s, toy_instance()), 0);
        });
        INFO(flags << " " << r.worst);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("model config validation and json") {
    auto c = toy_config();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = toy_config();
    c.steps = 0;
    CHECK_THROWS_AS(FiGnnModel{c}, ConfigError);
    c = toy_config(ModelKind::fignn, AblationConfig::parse("-T,-R"));
    CHECK(ModelConfig::from_json(c.to_json()) == c);
    CHECK_THROWS_AS(parse_model_kind("dnn"), ConfigError);
    CHECK_THROWS_AS(LogisticRegression{toy_config()}, ConfigError);
}
