#pragma once

#include <optional>
#include <vector>

#include "fdrisk/risk.hpp"

namespace fdrisk {

constexpr double kPriceIdentityTol = 1e-6;
constexpr double kRecursivenessTol = 1e-6;

enum class StrategyKind { Zero, Linear, Box };

// Admissible position sets per asset, constant across nodes. Zero admits no
// trading, Linear is unconstrained, Box clips each coordinate. Every space
// contains the zero strategy, which the constructors enforce.
struct StrategySpace {
    StrategyKind kind = StrategyKind::Zero;
    std::vector<double> lower, upper; // Box bounds per asset, +-infinity allowed

    static StrategySpace zero();
    static StrategySpace linear();
    static StrategySpace box(std::vector<double> lower, std::vector<double> upper);

    void validate(int asset_dim) const;
    bool coordinate_free(int k) const; // unconstrained in both directions
};

// Position chosen at each node, applied on the step out of it. Only entries
// at levels in [s, t) matter for gains over (s, t].
struct Strategy {
    std::vector<std::vector<double>> theta; // by node id, asset_dim components

    static Strategy zeros(const ScenarioTree& tree);
};

// Cumulative self-financed trading gains over (s, t]:
// sum over steps of theta_node . (prices_child - prices_node).
NodeVariable gains(const ScenarioTree& tree, const Strategy& theta, int s, int t);

struct InnerOptOptions {
    double obj_tol = 1e-8;   // stop when accepted decreases fall below this
    double grad_tol = 1e-9;
    int max_iters = 100000;
    double floor = -1e9;     // objective below this raises UnboundedRiskReduction
};

struct OptimizerDiagnostics {
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double certificate_worst_slope = 0.0; // most negative sampled feasible slope at theta_hat
};

struct PriceResult {
    NodeVariable price;           // risk_with_claim - risk_without, per s-node
    NodeVariable risk_with_claim; // inf_theta rho(Y(theta) - x)
    NodeVariable risk_without;    // inf_theta rho(Y(theta))
    Strategy theta_hat;           // minimiser of the claim leg
    OptimizerDiagnostics diag;
};

// Seller indifference price x_st(claim): the risk the seller can reach while
// covering the claim, against the risk reachable without it. Throws
// UnboundedRiskReduction when the hedging problem recedes (certified by the
// separating-direction test on the leaf gain gradients, or by the objective
// falling through the floor).
PriceResult price(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                  const NodeVariable& claim, const InnerOptOptions& opts = {});

// Monotonicity, convexity, weak homogeneity, projection onto level-s claims,
// zero and unit prices; attainable claims priced at zero for Linear spaces.
CheckSuite check_price_operator(const RiskMeasure& family, const StrategySpace& space, int s,
                                int t, const std::vector<NodeVariable>& samples,
                                double tol = kPriceIdentityTol);

// |x_rt(x_st(claim)) - x_rt(claim)| over the samples. Meaningful when the
// family composes recursively; reported either way.
CheckSuite check_recursive(const RiskMeasure& family, const StrategySpace& space, int r, int s,
                           int t, const std::vector<NodeVariable>& samples,
                           double tol = kRecursivenessTol);

struct GainDecomposition {
    NodeVariable g1;  // level-s part, dominated by gains over (r, s]
    NodeVariable g2;  // residual, dominated by gains over (s, t]
    Strategy theta;   // witness strategy
    double slack_g1 = 0.0; // max violation of g1 <= Y_rs(theta), should be ~0
    double slack_g2 = 0.0; // max violation of g2 <= Y_st(theta)
};

// Splits a claim dominated by gains over (r, t] at the intermediate date:
// g1 = min(Y_rs(theta), ||g||_inf - M) with M below g and both gain legs,
// g2 = g - g1. A witness strategy is required or searched for; no witness
// raises InfeasibleClaim.
GainDecomposition decompose_gain(const ScenarioTree& tree, const StrategySpace& space,
                                 const NodeVariable& g, int r, int s,
                                 const Strategy* witness = nullptr);

} // namespace fdrisk
