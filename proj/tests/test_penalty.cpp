#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdrisk/generate.hpp"
#include "fdrisk/risk.hpp"

using namespace fdrisk;

TEST_CASE("entropic minimal penalty is scaled relative entropy") {
    const ScenarioTree tree = ScenarioTree({{0, -1, 0, 1.0, {1.0}},
                                            {1, 0, 1, 0.5, {2.5}},
                                            {2, 0, 1, 0.5, {0.625}}});
    std::vector<double> r(3, 1.0);
    r[1] = 1.5;
    r[2] = 0.5;
    const DensityChange q(tree, 0, 1, r);

    const EntropicFamily fam(tree, 2.0);
    const NodeVariable alpha = minimal_penalty(fam, 0, 1, q);
    CHECK(alpha[0] == doctest::Approx(0.06540601797056849).epsilon(1e-12));
    CHECK(alpha[0] == doctest::Approx(0.065406).epsilon(1e-5));
}

TEST_CASE("numeric conjugate agrees with the closed form") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        Rng rng(seed);
        TreeShape shape;
        shape.levels = 3;
        const ScenarioTree tree = random_tree(rng, shape);
        const double gamma = rng.uniform(0.5, 2.5);
        const EntropicFamily fam(tree, gamma);
        const int t = tree.last_level();
        for (int s = 0; s < t; ++s) {
            const DensityChange q = random_density(rng, tree, s, t);
            const NodeVariable closed = minimal_penalty(fam, s, t, q);
            ConjugateDiagnostics diag;
            const NodeVariable numeric = conjugate_penalty(fam, s, t, q, {}, &diag);
            INFO("seed ", seed, " s ", s, " iters ", diag.iterations);
            CHECK_FALSE(diag.unbounded);
            CHECK(nv_max_abs(closed - numeric) < kPenaltyAgreementTol);
        }
    }
}

TEST_CASE("penalty is zero exactly at the reference measure") {
    Rng rng(3);
    const ScenarioTree tree = random_tree(rng);
    const EntropicFamily fam(tree, 1.0);
    const int t = tree.last_level();
    const DensityChange id = DensityChange::identity(tree, 0, t);
    CHECK(nv_max_abs(minimal_penalty(fam, 0, t, id)) == 0.0);
    const NodeVariable numeric = conjugate_penalty(fam, 0, t, id);
    CHECK(nv_max_abs(numeric) < 1e-10);
}

TEST_CASE("single-kernel menus price linearly, so off-menu measures explode") {
    Rng rng(17);
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    auto menu = random_generators(rng, tree, 1, 0.5, 0.0, false);
    const DualPenaltyFamily fam(tree, menu);

    // at the kernel's own density the conjugate recovers the composed penalty
    const DensityChange own = fam.generator_density(0, 0, 2);
    ConjugateDiagnostics diag;
    const NodeVariable alpha = conjugate_penalty(fam, 0, 2, own, {}, &diag);
    CHECK_FALSE(diag.unbounded);
    CHECK(nv_max_abs(alpha - fam.composed_penalty(0, 0, 2)) < kPenaltyAgreementTol);

    // any other density leaves a linear residual, certified as unbounded
    const DensityChange other = random_density(rng, tree, 0, 2);
    const NodeVariable beta = conjugate_penalty(fam, 0, 2, other, {}, &diag);
    CHECK(diag.unbounded);
    bool any_inf = false;
    for (double v : beta.values) any_inf = any_inf || std::isinf(v);
    CHECK(any_inf);
}

TEST_CASE("menu conjugate stays below every constant-kernel budget") {
    Rng rng(19);
    const ScenarioTree tree = symmetric_walk_tree(3, 1.0, 1.0);
    const auto menu = random_generators(rng, tree, 3, 0.5, 0.3);
    const DualPenaltyFamily fam(tree, menu);
    for (int k = 0; k < 3; ++k) {
        const DensityChange q = fam.generator_density(k, 0, 2);
        const NodeVariable alpha = minimal_penalty(fam, 0, 2, q);
        const NodeVariable budget = fam.composed_penalty(k, 0, 2);
        for (std::size_t i = 0; i < alpha.size(); ++i)
            CHECK(alpha[i] <= budget[i] + kPenaltyAgreementTol);
    }
}

TEST_CASE("penalty cocycle for the entropic family") {
    Rng rng(23);
    TreeShape shape;
    shape.levels = 4;
    const ScenarioTree tree = random_tree(rng, shape);
    const EntropicFamily fam(tree, 1.3);
    for (int rep = 0; rep < 5; ++rep) {
        const DensityChange q = random_density(rng, tree, 0, 3);
        const DensityChange q_rs = restrict_density(tree, q, 0, 1);
        const DensityChange q_st = restrict_density(tree, q, 1, 3);
        const NodeVariable whole = minimal_penalty(fam, 0, 3, q);
        const NodeVariable head = minimal_penalty(fam, 0, 1, q_rs);
        const NodeVariable tail = minimal_penalty(fam, 1, 3, q_st);
        const NodeVariable carried = cond_expect(tree, tail, q_rs, 0);
        CHECK(nv_max_abs(whole - (head + carried)) < 1e-10);
    }
}

TEST_CASE("domination survey finds the reference witness for entropic families") {
    Rng rng(29);
    const ScenarioTree tree = random_tree(rng);
    const EntropicFamily fam(tree, 1.0);
    const DominationReport rep = check_domination_sensitivity(fam);
    CHECK(rep.sensitive);
    CHECK(rep.witness_is_reference);
    CHECK(rep.C == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.K > 0.0);
}
