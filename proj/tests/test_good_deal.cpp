#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdrisk/generate.hpp"
#include "fdrisk/good_deal.hpp"
#include "fdrisk/oracle.hpp"

using namespace fdrisk;

namespace {

ScenarioTree binomial_onestep() {
    return ScenarioTree({{0, -1, 0, 1.0, {1.0}},
                         {1, 0, 1, 0.5, {2.5}},
                         {2, 0, 1, 0.5, {0.625}}});
}

} // namespace

TEST_CASE("one-step bounds with an interior and a pinned solution") {
    const ScenarioTree tree = binomial_onestep();
    const NodeVariable x(1, {2.0, 0.0});

    // unconstrained tilt stays feasible at delta = 1/2
    NgdBound small = ngd_upper(tree, x, 0, 0.5);
    CHECK(small.value[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(small.pinned_count[0] == 0);
    NgdBound small_low = ngd_lower(tree, x, 0, 0.5);
    CHECK(small_low.value[0] == doctest::Approx(0.5).epsilon(1e-12));

    // at delta = 2 the low branch pins at ratio zero and the cap binds
    NgdBound big = ngd_upper(tree, x, 0, 2.0);
    CHECK(big.value[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(big.pinned_count[0] == 1);
    REQUIRE(big.h[0].size() == 2);
    CHECK(big.h[0][1] == doctest::Approx(-1.0));

    // bounds bracket the plain expectation
    CHECK(small_low.value[0] <= 1.0);
    CHECK(small.value[0] >= 1.0);
}

TEST_CASE("active-set solution matches the multiplier oracle") {
    Rng rng(7);
    int binding = 0;
    for (int rep = 0; rep < 60; ++rep) {
        const int n = 2 + static_cast<int>(rng.int_range(0, 10));
        std::vector<double> p(n), x(n);
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            p[i] = rng.uniform(0.1, 1.0);
            mass += p[i];
        }
        for (int i = 0; i < n; ++i) p[i] /= mass;
        for (int i = 0; i < n; ++i) x[i] = rng.normal() * rng.uniform(0.5, 2.0);
        const double delta = rng.uniform(0.05, 3.0);

        const OracleQpResult ref = oracle_qp(p, x, delta);
        // rebuild as a one-step tree to call the solver
        std::vector<TreeNode> spec;
        spec.push_back({0, -1, 0, 1.0, {0.0}});
        for (int i = 0; i < n; ++i) spec.push_back({i + 1, 0, 1, p[i], {0.0}});
        const ScenarioTree tree(spec);
        const NodeVariable claim(1, x);
        const NgdBound got = ngd_upper(tree, claim, 0, delta);

        INFO("rep ", rep, " n ", n, " delta ", delta);
        CHECK(std::fabs(got.value[0] - ref.value) < kNgdAgreementTol);
        if (got.pinned_count[0] > 0) ++binding;

        // feasibility of the returned tilt
        double mean = 0.0, second = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(1.0 + got.h[0][i] >= -1e-12);
            mean += p[i] * got.h[0][i];
            second += p[i] * got.h[0][i] * got.h[0][i];
        }
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(second <= delta * delta + 1e-9);
    }
    CHECK(binding >= 10);
}

TEST_CASE("schedules compose multiplicatively") {
    const DeltaSchedule sched = DeltaSchedule::from_base(1.5, 4);
    CHECK(sched.delta(0, 0) == doctest::Approx(0.0));
    CHECK(sched.delta(0, 1) == doctest::Approx(0.5));
    CHECK(sched.delta(1, 3) == doctest::Approx(1.25));
    for (int r = 0; r < 4; ++r)
        for (int s = r; s < 4; ++s)
            for (int t = s; t < 4; ++t) {
                const double lhs = 1.0 + sched.delta(r, t);
                const double rhs = (1.0 + sched.delta(r, s)) * (1.0 + sched.delta(s, t));
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            }

    std::map<std::pair<int, int>, double> ok{{{0, 1}, 0.5}, {{1, 2}, 0.2}, {{0, 2}, 0.8}};
    CHECK_NOTHROW(DeltaSchedule::from_table(ok, 3));
    std::map<std::pair<int, int>, double> bad{{{0, 1}, 0.5}, {{1, 2}, 0.2}, {{0, 2}, 0.9}};
    CHECK_THROWS_AS(DeltaSchedule::from_table(bad, 3), ValidationError);

    const DeltaSchedule part = DeltaSchedule::from_table(
        std::map<std::pair<int, int>, double>{{{0, 2}, 0.75}}, 3);
    CHECK(part.has(0, 2));
    CHECK_FALSE(part.has(0, 1));
    CHECK_THROWS_AS(part.delta(0, 1), ValidationError);
}

TEST_CASE("membership flips exactly at the tilt's own radius") {
    const ScenarioTree tree = binomial_onestep();
    std::vector<double> r(3, 1.0);
    r[1] = 1.5;
    r[2] = 0.5;
    const DensityChange q(tree, 0, 1, r);
    // sqrt(E[h^2]) = 0.5 for the (1.5, 0.5) tilt

    const auto inside = ngd_membership(tree, q, DeltaSchedule::from_base(1.51, 2));
    CHECK(inside.member);
    CHECK(inside.l2_deviation[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::fabs(inside.mean_residual[0]) < 1e-12);

    const auto at = ngd_membership(tree, q, DeltaSchedule::from_base(1.5, 2));
    CHECK(at.member);

    const auto outside = ngd_membership(tree, q, DeltaSchedule::from_base(1.49, 2));
    CHECK_FALSE(outside.member);
    CHECK_FALSE(outside.node_member[0]);
}

TEST_CASE("bound scaling and translation") {
    Rng rng(31);
    TreeShape shape;
    shape.levels = 3;
    const ScenarioTree tree = random_tree(rng, shape);
    const NodeVariable x = random_claim(rng, tree, 2);
    const double delta = 0.7;

    const NodeVariable base = ngd_upper(tree, x, 0, delta).value;
    const NodeVariable scaled = ngd_upper(tree, 3.0 * x, 0, delta).value;
    CHECK(nv_max_abs(scaled - 3.0 * base) < 1e-10);
    const NodeVariable shift2 = NodeVariable::constant(tree, 2, 2.0);
    const NodeVariable shifted = ngd_upper(tree, x + shift2, 0, delta).value;
    CHECK(nv_max_abs(shifted - (base + NodeVariable::constant(tree, 0, 2.0))) < 1e-10);
    const NodeVariable low = ngd_lower(tree, x, 0, delta).value;
    for (std::size_t i = 0; i < low.size(); ++i) CHECK(low[i] <= base[i] + 1e-12);
}

TEST_CASE("seller prices sit inside the deviation bounds when the radius is wide") {
    Rng rng(37);
    const ScenarioTree tree = binomial_onestep();
    const EntropicFamily fam(tree, 1.0);
    std::vector<NodeVariable> samples;
    for (int i = 0; i < 4; ++i) samples.push_back(random_claim(rng, tree, 1));

    const CheckSuite wide = check_sandwich(fam, StrategySpace::linear(), 0, 1,
                                           DeltaSchedule::from_base(1.8, 2), samples);
    INFO(wide.to_json().dump(2));
    CHECK(wide.pass());

    // radius below the pricing tilt: replication prices escape the bounds
    const CheckSuite narrow = check_sandwich(fam, StrategySpace::linear(), 0, 1,
                                             DeltaSchedule::from_base(1.3, 2), samples);
    CHECK_FALSE((narrow.at("lower_bound").pass && narrow.at("upper_bound").pass));
}

TEST_CASE("pricing-bounds equivalence holds on both sides of the critical radius") {
    const ScenarioTree tree = binomial_onestep();
    const EntropicFamily fam(tree, 1.0);
    const StrategySpace lin = StrategySpace::linear();

    std::vector<DensityChange> probes;
    {
        // the unique pricing measure, ratios (0.4, 1.6)
        std::vector<double> r(3, 1.0);
        r[1] = 0.4;
        r[2] = 1.6;
        probes.emplace_back(tree, 0, 1, r);
    }
    Rng rng(41);
    for (int i = 0; i < 12; ++i) probes.push_back(random_density(rng, tree, 0, 1));

    // critical radius: the pricing tilt has l2 size 0.6
    const TheoremABReport above =
        check_theorem_AB(fam, lin, 0, 1, DeltaSchedule::from_base(1.7, 2), probes);
    INFO(above.to_json().dump(2));
    CHECK(above.a1_bounded);
    CHECK(above.a2_sandwich);
    CHECK(above.b1_inclusion);
    CHECK(above.b2_witness);
    CHECK(above.agree);

    const TheoremABReport below =
        check_theorem_AB(fam, lin, 0, 1, DeltaSchedule::from_base(1.5, 2), probes);
    INFO(below.to_json().dump(2));
    CHECK_FALSE((below.a2_sandwich && below.a1_bounded));
    CHECK_FALSE((below.b1_inclusion && below.b2_witness));
    CHECK(below.agree);
}

TEST_CASE("martingale screening accepts the pricing measure and rejects drifts") {
    const ScenarioTree tree = binomial_onestep();
    std::vector<double> mart(3, 1.0);
    mart[1] = 0.4;
    mart[2] = 1.6;
    CHECK(prices_gains_nonpositively(tree, StrategySpace::linear(),
                                     DensityChange(tree, 0, 1, mart), 0, 1));
    CHECK_FALSE(prices_gains_nonpositively(tree, StrategySpace::linear(),
                                           DensityChange::identity(tree, 0, 1), 0, 1));

    // one-sided boxes only need nonpositive prices along the allowed rays
    CHECK(prices_gains_nonpositively(tree, StrategySpace::box({0.0}, {1.0}),
                                     DensityChange(tree, 0, 1, mart), 0, 1));
}
