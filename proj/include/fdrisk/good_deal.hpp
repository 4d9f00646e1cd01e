#pragma once

#include <map>
#include <vector>

#include "fdrisk/indifference.hpp"
#include "fdrisk/risk.hpp"

namespace fdrisk {

constexpr double kNgdAgreementTol = 1e-7;

// Per-pair deviation radii delta_st >= 0 with the multiplicative composition
// (1 + delta_rt) = (1 + delta_rs)(1 + delta_st). Either generated from a base
// delta > 1 as delta_st = delta^(t-s) - 1, or supplied as a table which is
// validated against the composition rule on every triple it covers.
class DeltaSchedule {
public:
    static DeltaSchedule from_base(double base, int levels);
    static DeltaSchedule from_table(const std::map<std::pair<int, int>, double>& table,
                                    int levels);

    double delta(int s, int t) const;
    bool has(int s, int t) const;
    int levels() const { return levels_; }

private:
    DeltaSchedule() = default;
    std::map<std::pair<int, int>, double> table_;
    int levels_ = 0;
};

// Upper deviation bound sup { E_Q[x | F_s] } over changes dQ/dP = 1 + h with
// E[h | F_s] = 0, E[h^2 | F_s] <= delta^2, 1 + h >= 0. Solved in closed form
// per s-node; when the unconstrained tilt h = delta (x - mean)/sd breaches
// 1 + h >= 0 the violated coordinates are pinned at -1 and the reduced
// problem re-solved, growing the pinned set monotonically.
struct NgdBound {
    NodeVariable value;
    std::vector<int> pinned_count;          // per s-node
    std::vector<std::vector<double>> h;     // per s-node, over descendants(node, t)
};

NgdBound ngd_upper(const ScenarioTree& tree, const NodeVariable& x, int s, double delta);
NgdBound ngd_upper(const ScenarioTree& tree, const NodeVariable& x, int s,
                   const DeltaSchedule& schedule);

// Lower bound m = -M(-x).
NgdBound ngd_lower(const ScenarioTree& tree, const NodeVariable& x, int s, double delta);
NgdBound ngd_lower(const ScenarioTree& tree, const NodeVariable& x, int s,
                   const DeltaSchedule& schedule);

struct MembershipReport {
    int s = 0, t = 0;
    double delta = 0.0;
    bool member = true;                 // all nodes
    std::vector<bool> node_member;
    std::vector<double> l2_deviation;   // sqrt(E[h^2 | F_s]) per s-node
    std::vector<double> mean_residual;  // E[h | F_s] per s-node, ~0 by construction
    nlohmann::json to_json() const;
};

// Whether the density change sits inside the deviation ball of its own pair.
MembershipReport ngd_membership(const ScenarioTree& tree, const DensityChange& q,
                                const DeltaSchedule& schedule);

// m <= seller price <= M on the sample claims, plus scaling/translation
// sanity on the bounds themselves.
CheckSuite check_sandwich(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                          const DeltaSchedule& schedule, const std::vector<NodeVariable>& samples,
                          double tol = kOptimizerTol);

// The two sides of the pricing-bounds equivalence, reported side by side:
// (A) the inner hedging problem is bounded and sample prices sit inside
// [m, M]; (B) every probe measure with finite normalized penalty either
// prices all admissible gains nonpositively and deviates within delta, or
// fails the gain test outright; plus a nonempty intersection witness.
struct TheoremABReport {
    bool a1_bounded = false;
    bool a2_sandwich = false;
    bool b1_inclusion = false;
    bool b2_witness = false;
    bool agree = false;
    CheckSuite suite;
    nlohmann::json to_json() const;
};

TheoremABReport check_theorem_AB(const RiskMeasure& family, const StrategySpace& space, int s,
                                 int t, const DeltaSchedule& schedule,
                                 const std::vector<DensityChange>& probe_measures);

// Martingale test behind the (B) side: does the measure price every
// admissible gain direction nonpositively on each subtree.
bool prices_gains_nonpositively(const ScenarioTree& tree, const StrategySpace& space,
                                const DensityChange& q, int s, int t, double tol = 1e-9);

} // namespace fdrisk
