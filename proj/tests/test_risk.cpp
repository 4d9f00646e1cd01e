#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdrisk/generate.hpp"
#include "fdrisk/risk.hpp"

using namespace fdrisk;

namespace {

ScenarioTree coin_tree() {
    return ScenarioTree({{0, -1, 0, 1.0, {1.0}},
                         {1, 0, 1, 0.5, {2.5}},
                         {2, 0, 1, 0.5, {0.625}}});
}

std::vector<NodeVariable> sample_claims(Rng& rng, const ScenarioTree& tree, int t, int n) {
    std::vector<NodeVariable> xs;
    for (int i = 0; i < n; ++i) xs.push_back(random_claim(rng, tree, t));
    return xs;
}

} // namespace

TEST_CASE("entropic value on the coin flip") {
    const ScenarioTree tree = coin_tree();
    const NodeVariable x(1, {1.0, -1.0});

    const EntropicFamily gamma1(tree, 1.0);
    const NodeVariable r1 = gamma1.rho(0, 1, x);
    CHECK(r1[0] == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-14));
    CHECK(r1[0] == doctest::Approx(0.433781).epsilon(1e-5));

    const EntropicFamily gamma2(tree, 2.0);
    CHECK(gamma2.rho(0, 1, x)[0] ==
          doctest::Approx(0.5 * std::log(std::cosh(2.0))).epsilon(1e-14));

    // rho(s, s, x) = -x and constants pass through with a flipped sign
    const NodeVariable at_t = gamma1.rho(1, 1, x);
    CHECK(nv_max_abs(at_t - (-1.0 * x)) == 0.0);
    const NodeVariable c = NodeVariable::constant(tree, 1, 3.25);
    CHECK(gamma1.rho(0, 1, c)[0] == doctest::Approx(-3.25).epsilon(1e-14));
}

TEST_CASE("entropic composition is the recursion itself") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        TreeShape shape;
        shape.levels = 5;
        const ScenarioTree tree = random_tree(rng, shape);
        const EntropicFamily fam(tree, rng.uniform(0.2, 3.0));
        const int t = tree.last_level();
        const int s = 1 + static_cast<int>(seed % static_cast<std::uint64_t>(t - 1));
        const int r = static_cast<int>(seed % static_cast<std::uint64_t>(s));
        const NodeVariable x = random_claim(rng, tree, t);
        const NodeVariable direct = fam.rho(r, t, x);
        const NodeVariable composed = fam.rho(r, s, -1.0 * fam.rho(s, t, x));
        CHECK(nv_max_abs(direct - composed) == 0.0);
    }
}

TEST_CASE("entropic axioms hold on random trees") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const ScenarioTree tree = random_tree(rng);
        const EntropicFamily fam(tree, 1.5);
        const CheckSuite suite = check_axioms(fam, 0, tree.last_level(),
                                              sample_claims(rng, tree, tree.last_level(), 6));
        INFO(suite.to_json().dump(2));
        CHECK(suite.pass());
    }
}

TEST_CASE("driver recursion with zero driver is plain expectation") {
    const ScenarioTree tree = symmetric_walk_tree(5, 1.0, 0.25);
    const GExpectationFamily fam(tree, DriverSpec::zero(), 0.25);
    Rng rng(3);
    const NodeVariable x = random_claim(rng, tree, 4);
    for (int s = 0; s < 4; ++s)
        CHECK(nv_max_abs(fam.rho(s, 4, x) - (-1.0 * cond_expect(tree, x, s))) < 1e-13);
}

TEST_CASE("linear driver is expectation under the tilted measure") {
    const double dt = 0.25, mu = 0.4, p = 0.3;
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, dt, 0.0, p);
    const GExpectationFamily fam(tree, DriverSpec::linear(mu), dt);

    // one-step tilt p -> p + mu sqrt(dt p (1-p))
    const double q_up = p + mu * std::sqrt(dt * p * (1.0 - p));
    DensityChange q = DensityChange::identity(tree, 0, 3);
    for (int lv = 0; lv < 3; ++lv)
        for (int id : tree.nodes_at(lv)) {
            const auto kids = tree.children(id);
            q.ratios[static_cast<std::size_t>(kids[0])] = q_up / p;
            q.ratios[static_cast<std::size_t>(kids[1])] = (1.0 - q_up) / (1.0 - p);
        }

    Rng rng(5);
    const NodeVariable x = random_claim(rng, tree, 3);
    for (int s = 0; s < 3; ++s)
        CHECK(nv_max_abs(fam.rho(s, 3, x) - (-1.0 * cond_expect(tree, x, q, s))) < 1e-12);
}

TEST_CASE("driver value on the coin flip") {
    const ScenarioTree tree = symmetric_walk_tree(2, 1.0, 1.0);
    const GExpectationFamily fam(tree, DriverSpec::abs_linear(0.1), 1.0);
    const NodeVariable x(1, {1.0, -1.0});
    CHECK(fam.rho(0, 1, x)[0] == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("driver recursion composes exactly and keeps the axioms") {
    const double dt = 0.5;
    const ScenarioTree tree = symmetric_walk_tree(5, 1.0, dt, 0.0, 0.4);
    const GExpectationFamily fam(tree, DriverSpec::quadratic(0.3), dt);
    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        const NodeVariable x = random_claim(rng, tree, 4);
        const NodeVariable direct = fam.rho(0, 4, x);
        const NodeVariable composed = fam.rho(0, 2, -1.0 * fam.rho(2, 4, x));
        CHECK(nv_max_abs(direct - composed) == 0.0);
    }
    const CheckSuite suite = check_axioms(fam, 1, 4, sample_claims(rng, tree, 4, 6));
    INFO(suite.to_json().dump(2));
    CHECK(suite.pass());
}

TEST_CASE("driver Lipschitz guard rejects coarse steps") {
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 4.0);
    CHECK_THROWS_AS(GExpectationFamily(tree, DriverSpec::abs_linear(0.6), 4.0),
                    ValidationError);
    CHECK_NOTHROW(GExpectationFamily(tree, DriverSpec::abs_linear(0.4), 4.0));
}

TEST_CASE("table drivers must be convex") {
    CHECK_THROWS_AS(DriverSpec::table({-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0}).validate(),
                    ValidationError);
    const DriverSpec d = DriverSpec::table({-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
    CHECK_NOTHROW(d.validate());
    CHECK(d(0.5) == doctest::Approx(0.5));
    CHECK(d(2.0) == doctest::Approx(2.0)); // boundary slope extrapolation
}

TEST_CASE("kernel menus price through the backward maximum") {
    Rng rng(21);
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);
    const auto menu = random_generators(rng, tree, 3);
    const DualPenaltyFamily fam(tree, menu);
    const int t = 3;
    const NodeVariable x = random_claim(rng, tree, t);
    const NodeVariable val = fam.rho(0, t, x);

    // dominates every constant-kernel candidate
    for (int k = 0; k < 3; ++k) {
        const DensityChange q = fam.generator_density(k, 0, t);
        const NodeVariable cand = cond_expect(tree, -1.0 * x, q, 0) - fam.composed_penalty(k, 0, t);
        for (std::size_t i = 0; i < val.size(); ++i) CHECK(val[i] >= cand[i] - 1e-12);
    }

    // composition again exact
    const NodeVariable composed = fam.rho(0, 1, -1.0 * fam.rho(1, t, x));
    CHECK(nv_max_abs(val - composed) == 0.0);

    const CheckSuite suite = check_axioms(fam, 0, t, sample_claims(rng, tree, t, 6));
    INFO(suite.to_json().dump(2));
    CHECK(suite.pass());
}

TEST_CASE("kernel penalties compose along the cocycle") {
    Rng rng(23);
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);
    const auto menu = random_generators(rng, tree, 2);
    const DualPenaltyFamily fam(tree, menu);
    for (int k = 0; k < 2; ++k) {
        const DensityChange q_rs = fam.generator_density(k, 0, 2);
        const NodeVariable whole = fam.composed_penalty(k, 0, 3);
        const NodeVariable head = fam.composed_penalty(k, 0, 2);
        const NodeVariable tail = fam.composed_penalty(k, 2, 3);
        const NodeVariable carried = cond_expect(tree, tail, q_rs, 0);
        CHECK(nv_max_abs(whole - (head + carried)) < 1e-12);
    }
}

TEST_CASE("normalization keeps order consistency but can break composition") {
    Rng rng(31);
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);

    // two kernels that disagree at the root and carry asymmetric penalties one
    // level down, so the worst-case kernel switches with the claim and the
    // riskless offset differs across the level-1 nodes
    std::vector<DualGenerator> menu(2);
    for (auto& g : menu) {
        g.ratios.assign(tree.node_count(), 1.0);
        g.penalty.assign(tree.node_count(), 0.0);
    }
    menu[0].ratios[1] = 1.8;
    menu[0].ratios[2] = 0.2;
    menu[0].penalty[1] = 0.1;
    menu[0].penalty[2] = 0.4;
    menu[1].ratios[1] = 0.2;
    menu[1].ratios[2] = 1.8;
    menu[1].penalty[1] = 0.5;
    menu[1].penalty[2] = 0.2;

    const DualPenaltyFamily base(tree, menu);
    const NormalizedFamily norm(base);

    auto xs = sample_claims(rng, tree, 3, 8);
    // pin down both orderings of the level-1 conditional values
    const NodeVariable up(1, {1.0, -1.0});
    xs.push_back(lift(tree, up, 3));
    xs.push_back(lift(tree, -up, 3));

    // the base family composes by construction
    CHECK(check_strong_tc(base, 0, 1, 3, xs).pass());

    // its riskless offset is genuinely random, so normalizing kills composition
    const NodeVariable rho0 = base.rho(1, 3, NodeVariable::constant(tree, 3, 0.0));
    double spread = 0.0;
    for (std::size_t i = 0; i < rho0.size(); ++i)
        for (std::size_t j = 0; j < rho0.size(); ++j)
            spread = std::max(spread, std::fabs(rho0[i] - rho0[j]));
    REQUIRE(spread > 1e-6);

    CHECK(norm.rho(0, 3, NodeVariable::constant(tree, 3, 0.0))[0] == 0.0);
    CHECK_FALSE(check_strong_tc(norm, 0, 1, 3, xs).pass());

    const CheckSuite dec = check_tc_decomposition(norm, 0, 1, 3, xs);
    INFO(dec.to_json().dump(2));
    CHECK(dec.at("time_consistency").pass);
    CHECK_FALSE(dec.at("restriction").pass);

    // axioms survive normalization
    CHECK(check_axioms(norm, 0, 3, xs).pass());
}

TEST_CASE("decomposition passes whole for genuinely recursive families") {
    Rng rng(33);
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);
    const EntropicFamily fam(tree, 0.8);
    const auto xs = sample_claims(rng, tree, 3, 8);
    const CheckSuite dec = check_tc_decomposition(fam, 0, 2, 3, xs);
    INFO(dec.to_json().dump(2));
    CHECK(dec.pass());
    CHECK(check_strong_tc(fam, 0, 2, 3, xs).pass());
}
