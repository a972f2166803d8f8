#include "fignn/errors.hpp"
#include "fignn/model.hpp"
#include "fignn/scoring.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include <cmath>

using namespace fignn;
using fignn::testing::random_tensor;

namespace {

scoring::ScoringVars heads_on(ad::Tape& tape, const Tensor& sw, double sb, const Tensor& gw, double gb) {
    return {tape.constant(sw), tape.constant(Tensor::scalar(sb)), tape.constant(gw), tape.constant(Tensor::scalar(gb))};
}

}  // namespace

TEST_CASE("zero gate gives half weights") {
    Rng rng(1);
    Tensor h = random_tensor(4, 3, rng), sw = random_tensor(1, 3, rng);
    ad::Tape tape;
    auto p = scoring::score(tape.constant(h), heads_on(tape, sw, 0.3, Tensor(1, 3), 0.0));
    double sum_scores = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(p.node_weights.value()[i] == 0.5);
        sum_scores += p.node_scores.value()[i];
    }
    CHECK(p.logit.value().item() == doctest::Approx(0.5 * sum_scores).epsilon(1e-14));
    for (double w : scoring::node_importance(scoring::to_prediction(p))) CHECK(w == 0.5);
}

TEST_CASE("zero heads predict one half") {
    Rng rng(2);
    ad::Tape tape;
    auto p = scoring::score(tape.constant(random_tensor(3, 4, rng)), heads_on(tape, Tensor(1, 4), 0, Tensor(1, 4), 0));
    CHECK(p.logit.value().item() == 0.0);
    CHECK(p.probability.value().item() == 0.5);
}

TEST_CASE("two-node readout matches a hand evaluation") {
    Tensor h = Tensor::from_rows({{1.0, -0.5}, {0.25, 2.0}});
    Tensor sw = Tensor::from_rows({{0.6, -0.2}}), gw = Tensor::from_rows({{-1.0, 0.5}});
    const double sb = 0.1, gb = 0.2;
    ad::Tape tape;
    auto pv = scoring::score(tape.constant(h), heads_on(tape, sw, sb, gw, gb));
    auto p = scoring::to_prediction(pv);
    // y1 = 0.6+0.1+0.1 = 0.8, y2 = 0.15-0.4+0.1 = -0.15
    // g1 = -1-0.25+0.2 = -1.05, g2 = -0.25+1+0.2 = 0.95
    const double a1 = 1 / (1 + std::exp(1.05)), a2 = 1 / (1 + std::exp(-0.95));
    const double logit = a1 * 0.8 + a2 * -0.15;
    CHECK(p.node_scores[0] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(p.node_scores[1] == doctest::Approx(-0.15).epsilon(1e-14));
    CHECK(p.node_weights[0] == doctest::Approx(a1).epsilon(1e-14));
    CHECK(p.node_weights[1] == doctest::Approx(a2).epsilon(1e-14));
    CHECK(pv.logit.value().item() == doctest::Approx(logit).epsilon(1e-14));
    CHECK(p.probability == doctest::Approx(1 / (1 + std::exp(-logit))).epsilon(1e-14));
}

TEST_CASE("probabilities stay strictly inside (0, 1)") {
    Rng rng(3);
    for (double mag : {1.0, 100.0, 1e4}) {
        ad::Tape tape;
        auto p = scoring::to_prediction(scoring::score(
            tape.constant(random_tensor(3, 2, rng, -mag, mag)),
            heads_on(tape, random_tensor(1, 2, rng, -mag, mag), 0, random_tensor(1, 2, rng, -mag, mag), 0)));
        CHECK(p.probability > 0.0);
        CHECK(p.probability < 1.0);
        for (double w : p.node_weights) {
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
        }
    }
}

TEST_CASE("log loss examples") {
    std::vector<double> half{0.5, 0.5, 0.5};
    std::vector<int> labels{1, 0, 1};
    CHECK(scoring::log_loss(half, labels) == doctest::Approx(0.693147).epsilon(1e-6));
    std::vector<double> near{1 - 1e-7};
    std::vector<int> one{1};
    CHECK(scoring::log_loss(near, one) == doctest::Approx(1e-7).epsilon(1e-6));
    std::vector<double> p{0.9, 0.2};
    std::vector<int> y{1, 0};
    CHECK(scoring::log_loss(p, y) == doctest::Approx(0.164252).epsilon(1e-6));
    CHECK_THROWS_AS(scoring::log_loss(std::vector<double>{}, std::vector<int>{}), DataError);
    CHECK_THROWS_AS(scoring::log_loss(p, one), ShapeError);
}

TEST_CASE("log loss is finite and non-negative for any input") {
    Rng rng(4);
    std::vector<double> p{0.0, 1.0, 1.0, 0.0};
    std::vector<int> y{1, 0, 1, 0};
    const double worst = scoring::log_loss(p, y);
    CHECK(std::isfinite(worst));
    CHECK(worst > 0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> ps{rng.uniform()};
        std::vector<int> ys{static_cast<int>(rng.below(2))};
        const double l = scoring::log_loss(ps, ys);
        CHECK(std::isfinite(l));
        CHECK(l >= 0);
    }
}

TEST_CASE("full model gradients match finite differences") {
    FiGnnModel model(fignn::testing::toy_config());
    ParameterStore store = model.init_parameters(3);
    for (int label : {0, 1}) {
        auto inst = fignn::testing::toy_instance(label);
        auto r = fignn::testing::check_parameter_gradients(store, [&](ad::Tape& tape, const ParameterStore& s) {
            return ad::log_loss_from_logit(model.logit(tape, s, inst), label);
        });
        INFO(r.worst);
        CHECK(r.max_rel_error < 1e-4);
        CHECK(r.checked == store.scalar_count());
    }
}

TEST_CASE("model forward agrees with its parts") {
    FiGnnModel model(fignn::testing::toy_config());
    ParameterStore store = model.init_parameters(5);
    ad::Tape tape;
    auto f = model.forward(tape, store, fignn::testing::toy_instance());
    const auto p = scoring::to_prediction(f.prediction);
    CHECK(p.probability == doctest::Approx(model.predict(store, fignn::testing::toy_instance())).epsilon(1e-15));
    CHECK(f.adjacency.rows() == 3);
    CHECK(f.final_states.cols() == 4);
    CHECK(p.node_weights.size() == 3);
}
