#pragma once

// Slow reference implementations used only by tests. Each one recomputes a
// quantity the library produces, by a different route: path enumeration
// instead of backward recursion, grid search instead of gradient descent,
// multiplier bisection instead of active-set pinning. Agreement between the
// two routes is the evidence the fast code is right.

#include <vector>

#include "fdrisk/indifference.hpp"
#include "fdrisk/risk.hpp"
#include "fdrisk/tree.hpp"

namespace fdrisk {

// conditional expectation by explicit path enumeration
NodeVariable oracle_cond_expect(const ScenarioTree& tree, const NodeVariable& x,
                                const DensityChange& q, int s);

// sup over an epsilon-net of subtree densities of E_q[-x | node] minus the
// scaled relative entropy. resolution = grid points per probability unit.
NodeVariable oracle_dual_entropic(const ScenarioTree& tree, const NodeVariable& x, int s,
                                  double gamma, int resolution);

// exhaustive enumeration of every per-node kernel selection between levels
// s and t. Only viable on small trees; throws if the count explodes.
NodeVariable oracle_dual_menu(const ScenarioTree& tree, const std::vector<DualGenerator>& menu,
                              const NodeVariable& x, int s, int t);

struct OracleQpResult {
    double value = 0.0;
    std::vector<double> h;
    int iterations = 0;
};

// one-node deviation bound by nested bisection on the KKT multipliers
OracleQpResult oracle_qp(const std::vector<double>& p, const std::vector<double>& x, double delta);

struct GridSpec {
    int resolution = 21;
    double lo = -3.0;
    double hi = 3.0;
    int refinements = 6;
    double refine_factor = 4.0;
};

// indifference price by refining grid search over the strategy coordinates
NodeVariable oracle_price_grid(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                               const NodeVariable& claim, const GridSpec& grid = {});

} // namespace fdrisk
