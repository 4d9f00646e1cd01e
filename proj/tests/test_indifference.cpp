#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fdrisk/generate.hpp"
#include "fdrisk/indifference.hpp"

using namespace fdrisk;

namespace {

ScenarioTree binomial_onestep() {
    return ScenarioTree({{0, -1, 0, 1.0, {1.0}},
                         {1, 0, 1, 0.5, {2.5}},
                         {2, 0, 1, 0.5, {0.625}}});
}

ScenarioTree arbitrage_onestep() {
    return ScenarioTree({{0, -1, 0, 1.0, {1.0}},
                         {1, 0, 1, 0.5, {2.0}},
                         {2, 0, 1, 0.5, {1.5}}});
}

NodeVariable asset_claim(const ScenarioTree& tree, int level, int k = 0) {
    NodeVariable x(level, std::vector<double>(tree.nodes_at(level).size(), 0.0));
    for (int id : tree.nodes_at(level)) x.values[tree.index_in_level(id)] = tree.assets(id)[k];
    return x;
}

} // namespace

TEST_CASE("gains accumulate position times price increments") {
    const ScenarioTree tree = binomial_onestep();
    Strategy theta = Strategy::zeros(tree);
    theta.theta[0][0] = 2.0;
    const NodeVariable y = gains(tree, theta, 0, 1);
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[1] == doctest::Approx(-0.75));
    CHECK(nv_max_abs(gains(tree, theta, 1, 1)) == 0.0);
}

TEST_CASE("no trading reduces the price to a plain risk difference") {
    const ScenarioTree tree = symmetric_walk_tree(2, 1.0, 1.0);
    const EntropicFamily fam(tree, 1.0);
    const NodeVariable x = asset_claim(tree, 1);
    const PriceResult res = price(fam, StrategySpace::zero(), 0, 1, x);
    // rho(-x) for the +-1 coin is log cosh 1
    CHECK(res.price[0] == doctest::Approx(0.43378083048302695).epsilon(1e-9));
    CHECK(res.risk_without[0] == doctest::Approx(0.0));
}

TEST_CASE("projection, zero and unit claims") {
    Rng rng(11);
    TreeShape shape;
    shape.levels = 3;
    const ScenarioTree tree = random_tree(rng, shape);
    const EntropicFamily fam(tree, 1.0);
    for (const StrategySpace& space : {StrategySpace::zero(), StrategySpace::linear()}) {
        const NodeVariable f = random_claim(rng, tree, 1);
        const PriceResult proj = price(fam, space, 1, 2, lift(tree, f, 2));
        CHECK(nv_max_abs(proj.price - f) < kPriceIdentityTol);

        const NodeVariable zero = NodeVariable::constant(tree, 2, 0.0);
        CHECK(nv_max_abs(price(fam, space, 1, 2, zero).price) < kPriceIdentityTol);

        const NodeVariable one = NodeVariable::constant(tree, 2, 1.0);
        const PriceResult unit = price(fam, space, 1, 2, one);
        for (double v : unit.price.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("complete one-step market prices by replication") {
    const ScenarioTree tree = binomial_onestep();
    const EntropicFamily fam(tree, 1.0);
    const StrategySpace lin = StrategySpace::linear();

    // risk-neutral weights for (2.5, 0.625) from spot 1 are (0.2, 0.8)
    const PriceResult stock = price(fam, lin, 0, 1, asset_claim(tree, 1));
    CHECK(stock.price[0] == doctest::Approx(1.0).epsilon(1e-6));

    NodeVariable digital(1, {1.0, 0.0});
    const PriceResult dig = price(fam, lin, 0, 1, digital);
    CHECK(dig.price[0] == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("attainable claims cost nothing under linear trading") {
    Rng rng(13);
    const ScenarioTree tree = symmetric_walk_tree(3, 0.7, 1.0);
    const EntropicFamily fam(tree, 1.2);
    Strategy theta = Strategy::zeros(tree);
    for (auto& row : theta.theta)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
    const NodeVariable y = gains(tree, theta, 0, 2);
    const PriceResult res = price(fam, StrategySpace::linear(), 0, 2, y);
    CHECK(nv_max_abs(res.price) < kPriceIdentityTol);
}

TEST_CASE("price operator suite passes for entropic families") {
    Rng rng(17);
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    const EntropicFamily fam(tree, 1.0);
    std::vector<NodeVariable> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(random_claim(rng, tree, 2));

    for (const StrategySpace& space :
         {StrategySpace::linear(), StrategySpace::box({-0.5}, {0.5})}) {
        const CheckSuite suite = check_price_operator(fam, space, 0, 2, samples);
        INFO(suite.to_json().dump(2));
        CHECK(suite.pass());
    }
}

TEST_CASE("prices compose across an intermediate date") {
    Rng rng(19);
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    const EntropicFamily fam(tree, 1.0);
    std::vector<NodeVariable> samples;
    for (int i = 0; i < 3; ++i) samples.push_back(random_claim(rng, tree, 2));
    const CheckSuite suite = check_recursive(fam, StrategySpace::linear(), 0, 1, 2, samples);
    INFO(suite.to_json().dump(2));
    CHECK(suite.pass());
}

TEST_CASE("a dominating asset makes linear hedging recede") {
    const ScenarioTree tree = arbitrage_onestep();
    const EntropicFamily fam(tree, 1.0);
    const NodeVariable zero = NodeVariable::constant(tree, 1, 0.0);

    CHECK_THROWS_AS(price(fam, StrategySpace::linear(), 0, 1, zero), UnboundedRiskReduction);
    try {
        price(fam, StrategySpace::linear(), 0, 1, zero);
    } catch (const UnboundedRiskReduction& e) {
        CHECK(e.node_id == 0);
        REQUIRE(e.direction.size() == 1);
        CHECK(e.direction[0] > 0.0);
    }

    // the same ray escapes a half-bounded box but not a bounded one
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(price(fam, StrategySpace::box({0.0}, {inf}), 0, 1, zero),
                    UnboundedRiskReduction);
    const PriceResult res = price(fam, StrategySpace::box({-1.0}, {1.0}), 0, 1, zero);
    CHECK(res.price[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.risk_without[0] < 0.0);
}

TEST_CASE("gain decomposition splits at the intermediate date") {
    Rng rng(23);
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    Strategy theta = Strategy::zeros(tree);
    for (auto& row : theta.theta)
        for (double& v : row) v = rng.uniform(-1.0, 1.0);
    const NodeVariable g = gains(tree, theta, 0, 2) - NodeVariable::constant(tree, 2, 0.1);

    const GainDecomposition dec =
        decompose_gain(tree, StrategySpace::linear(), g, 0, 1, &theta);
    CHECK(dec.g1.level == 1);
    CHECK(dec.g2.level == 2);
    CHECK(dec.slack_g1 <= 1e-9);
    CHECK(dec.slack_g2 <= 1e-9);
    CHECK(nv_max_abs(g - (lift(tree, dec.g1, 2) + dec.g2)) < 1e-12);

    // without a witness the search must find one
    const GainDecomposition found = decompose_gain(tree, StrategySpace::linear(), g, 0, 1);
    CHECK(found.slack_g1 <= 1e-6);
    CHECK(found.slack_g2 <= 1e-6);
}

TEST_CASE("claims above every reachable gain are rejected") {
    const ScenarioTree tree = symmetric_walk_tree(2, 1.0, 1.0);
    const NodeVariable g = NodeVariable::constant(tree, 1, 1.0);
    CHECK_THROWS_AS(decompose_gain(tree, StrategySpace::zero(), g, 0, 1), InfeasibleClaim);
}
