#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdrisk/generate.hpp"
#include "fdrisk/oracle.hpp"
#include "fdrisk/tree.hpp"

using namespace fdrisk;

namespace {

std::vector<TreeNode> one_step_nodes() {
    return {{0, -1, 0, 1.0, {1.0}},
            {1, 0, 1, 0.5, {2.5}},
            {2, 0, 1, 0.5, {0.625}}};
}

} // namespace

TEST_CASE("construction accepts the one-step tree") {
    ScenarioTree tree(one_step_nodes());
    CHECK(tree.levels() == 2);
    CHECK(tree.node_count() == 3);
    CHECK(tree.asset_dim() == 1);
    CHECK(tree.root() == 0);
    CHECK(tree.is_binary());
    CHECK(tree.node_prob(1) == doctest::Approx(0.5));
    CHECK(tree.children(0).size() == 2);
}

TEST_CASE("construction rejects malformed trees") {
    auto nodes = one_step_nodes();
    SUBCASE("branch probabilities must sum to one") {
        nodes[1].prob = 0.7;
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("branch probabilities must be positive") {
        nodes[1].prob = 0.0;
        nodes[2].prob = 1.0;
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("parent must sit one level up") {
        nodes[2].level = 2;
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("ids must be dense") {
        nodes[2].id = 5;
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("asset dimension must be constant") {
        nodes[2].assets = {0.625, 1.0};
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("assets must be finite") {
        nodes[1].assets = {std::nan("")};
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
    SUBCASE("only one root") {
        nodes.push_back({3, -1, 0, 1.0, {1.0}});
        CHECK_THROWS_AS(ScenarioTree{nodes}, ValidationError);
    }
}

TEST_CASE("ancestor and descendants walk the filtration") {
    ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);
    const int leaf = tree.nodes_at(3).front();
    CHECK(tree.ancestor(leaf, 0) == 0);
    CHECK(tree.level_of(tree.ancestor(leaf, 2)) == 2);
    const auto desc = tree.descendants(0, 3);
    CHECK(desc.size() == 8);
    for (std::size_t i = 1; i < desc.size(); ++i) CHECK(desc[i - 1] < desc[i]);
}

TEST_CASE("conditional expectation matches path enumeration") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        TreeShape shape;
        shape.levels = 4;
        shape.max_branch = 3;
        const ScenarioTree tree = random_tree(rng, shape);
        const int t = tree.last_level();
        for (int s = 0; s < t; ++s) {
            const NodeVariable x = random_claim(rng, tree, t);
            const DensityChange q = random_density(rng, tree, s, t);
            const NodeVariable fast = cond_expect(tree, x, q, s);
            const NodeVariable slow = oracle_cond_expect(tree, x, q, s);
            CHECK(nv_max_abs(fast - slow) < 1e-12);
        }
    }
}

TEST_CASE("density changes validate their ratios") {
    ScenarioTree tree(one_step_nodes());
    SUBCASE("conditional mean one is required") {
        std::vector<double> r(3, 1.0);
        r[1] = 1.5;
        r[2] = 0.8;
        CHECK_THROWS_AS(DensityChange(tree, 0, 1, r), ValidationError);
    }
    SUBCASE("ratios outside the window must be one") {
        ScenarioTree walk = symmetric_walk_tree(3, 1.0, 1.0);
        std::vector<double> r(static_cast<std::size_t>(walk.node_count()), 1.0);
        r[1] = 1.5;
        r[2] = 0.5;
        CHECK_THROWS_AS(DensityChange(walk, 1, 2, r), ValidationError);
    }
    SUBCASE("negative ratios are rejected") {
        std::vector<double> r(3, 1.0);
        r[1] = -0.5;
        r[2] = 2.5;
        CHECK_THROWS_AS(DensityChange(tree, 0, 1, r), ValidationError);
    }
}

TEST_CASE("composition multiplies one-step ratios") {
    Rng rng(7);
    const ScenarioTree tree = symmetric_walk_tree(4, 1.0, 1.0);
    const DensityChange a = random_density(rng, tree, 0, 2);
    const DensityChange b = random_density(rng, tree, 2, 3);
    const DensityChange ab = compose_densities(tree, a, b);
    CHECK(ab.s == 0);
    CHECK(ab.t == 3);
    const NodeVariable x = random_claim(rng, tree, 3);
    const NodeVariable direct = cond_expect(tree, x, ab, 0);
    const NodeVariable nested = cond_expect(tree, cond_expect(tree, x, b, 2), a, 0);
    CHECK(nv_max_abs(direct - nested) < 1e-12);
}

TEST_CASE("relative entropy pins the hand value and flags vanishing ratios") {
    ScenarioTree tree(one_step_nodes());
    std::vector<double> r(3, 1.0);
    r[1] = 1.5;
    r[2] = 0.5;
    const DensityChange q(tree, 0, 1, r);
    const NodeVariable h = relative_entropy(tree, q);
    // 0.75 log 1.5 + 0.25 log 0.5
    CHECK(h[0] == doctest::Approx(0.13081203594113698).epsilon(1e-12));
    CHECK(h[0] == doctest::Approx(0.130812).epsilon(1e-5));

    std::vector<double> r0(3, 1.0);
    r0[1] = 2.0;
    r0[2] = 0.0;
    const DensityChange q0(tree, 0, 1, r0);
    CHECK(std::isinf(relative_entropy(tree, q0)[0]));
}

TEST_CASE("entropy decomposes along the cocycle") {
    Rng rng(11);
    TreeShape shape;
    shape.levels = 4;
    const ScenarioTree tree = random_tree(rng, shape);
    const DensityChange q = random_density(rng, tree, 0, 3);
    const NodeVariable whole = relative_entropy(tree, q);
    const DensityChange q_rs = restrict_density(tree, q, 0, 1);
    const DensityChange q_st = restrict_density(tree, q, 1, 3);
    const NodeVariable head = relative_entropy(tree, q_rs);
    const NodeVariable tail = relative_entropy(tree, q_st);
    const NodeVariable carried = cond_expect(tree, tail, q_rs, 0);
    CHECK(nv_max_abs(whole - (head + carried)) < 1e-12);
}

TEST_CASE("lift, indicator and variance behave") {
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    NodeVariable y(1, {2.0, -3.0});
    const NodeVariable z = lift(tree, y, 2);
    CHECK(z.values == std::vector<double>{2.0, 2.0, -3.0, -3.0});

    const NodeVariable ind = indicator(tree, 1, {tree.nodes_at(1)[0]});
    CHECK(ind.values == std::vector<double>{1.0, 0.0});

    NodeVariable x(2, {1.0, -1.0, 1.0, -1.0});
    const NodeVariable var = cond_variance(tree, x, 1);
    CHECK(var[0] == doctest::Approx(1.0));
    CHECK(var[1] == doctest::Approx(1.0));

    CHECK(lp_norm(tree, x, 2.0) == doctest::Approx(1.0));
    CHECK(lp_norm(tree, x, 1.0) == doctest::Approx(1.0));
}
