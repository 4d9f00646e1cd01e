#pragma once

#include <memory>
#include <vector>

#include "fdrisk/report.hpp"
#include "fdrisk/tree.hpp"

namespace fdrisk {

// Default tolerances. Construction-time checks sit at kProbTol (tree.hpp),
// plain arithmetic identities at 1e-10, axiom and composition checks at 1e-9,
// anything that goes through an iterative optimizer at 1e-7.
constexpr double kArithmeticTol = 1e-10;
constexpr double kAxiomTol = 1e-9;
constexpr double kOptimizerTol = 1e-7;
constexpr double kPenaltyAgreementTol = 1e-8;

enum class DriverForm { Zero, Linear, AbsLinear, Quadratic, Table };

// One-dimensional convex driver g(z) with g Lipschitz on the range we touch.
// Table drivers interpolate linearly between knots and extrapolate with the
// boundary slopes, which keeps them convex and Lipschitz.
struct DriverSpec {
    DriverForm form = DriverForm::Zero;
    double mu = 0.0;                // slope for Linear / AbsLinear
    double gamma = 0.0;             // curvature for Quadratic
    std::vector<double> zs, gs;     // knots for Table

    static DriverSpec zero();
    static DriverSpec linear(double mu);
    static DriverSpec abs_linear(double mu);
    static DriverSpec quadratic(double gamma);
    static DriverSpec table(std::vector<double> zs, std::vector<double> gs);

    double operator()(double z) const;
    double slope(double z) const;       // element of the subdifferential
    double lipschitz(double z_span) const;
    void validate() const;
};

// Conditional risk evaluation interface. rho(s, t, x) maps a level-t claim to
// a level-s variable; evaluation at a node reads only that node's subtree.
class RiskMeasure {
public:
    explicit RiskMeasure(const ScenarioTree& tree) : tree_(&tree) {}
    virtual ~RiskMeasure() = default;

    const ScenarioTree& tree() const { return *tree_; }
    virtual NodeVariable rho(int s, int t, const NodeVariable& x) const = 0;

    // Leaf weights of the measure behind the subgradient of rho at x: for the
    // s-node with level index i, weights over descendants(node, t) in that
    // order, nonnegative, summing to one, with d rho / d x_leaf = -weight.
    // The base implementation differentiates numerically; families override
    // with their closed forms.
    virtual std::vector<std::vector<double>> pricing_weights(int s, int t,
                                                             const NodeVariable& x) const;

protected:
    void require_pair(int s, int t, const NodeVariable& x) const;

private:
    const ScenarioTree* tree_;
};

// rho(s, t, x) = (1/gamma) log E[exp(-gamma x) | F_s], evaluated as a
// one-step log-sum-exp recursion so composition over intermediate dates is
// the same arithmetic as direct evaluation.
class EntropicFamily : public RiskMeasure {
public:
    EntropicFamily(const ScenarioTree& tree, double gamma);
    double gamma() const { return gamma_; }

    NodeVariable rho(int s, int t, const NodeVariable& x) const override;
    std::vector<std::vector<double>> pricing_weights(int s, int t,
                                                     const NodeVariable& x) const override;

private:
    double gamma_;
};

// Backward driver recursion on a binary tree: terminal value -x, then one
// step at a time Y = E[Y'|node] + g(Z) dt with Z read off the two-point
// martingale representation of Y'. With symmetric branches this is
// Z = (Y_up - Y_down) / (2 sqrt(dt)). Construction rejects non-binary trees
// and drivers whose Lipschitz bound C violates C sqrt(dt) <= 1, which is
// what keeps each step monotone.
class GExpectationFamily : public RiskMeasure {
public:
    GExpectationFamily(const ScenarioTree& tree, DriverSpec driver, double dt);
    const DriverSpec& driver() const { return driver_; }
    double dt() const { return dt_; }

    NodeVariable rho(int s, int t, const NodeVariable& x) const override;
    std::vector<std::vector<double>> pricing_weights(int s, int t,
                                                     const NodeVariable& x) const override;

private:
    // one backward step from level lv+1 values to level lv
    void step_down(int lv, std::vector<double>& w, std::vector<double>* up_weight,
                   std::vector<double>* down_weight) const;

    DriverSpec driver_;
    double dt_;
};

// One generator of a dual-penalty family: a full one-step transition kernel
// (ratio per non-root node, conditionally averaging to one at every
// non-terminal node) plus a local penalty charged at each non-terminal node
// for using that kernel on the step out of it.
struct DualGenerator {
    std::vector<double> ratios;  // per node id, 1.0 convention at the root
    std::vector<double> penalty; // per node id, read at non-terminal nodes
};

// Worst case over the pasting closure of the listed kernels: at every node a
// generator is chosen independently, penalties accumulate by the cocycle
// rule alpha_rt = alpha_rs + E_Q[alpha_st | F_r]. Evaluation is the backward
// one-step max, which is exactly the essential supremum over that finite
// stable set.
class DualPenaltyFamily : public RiskMeasure {
public:
    DualPenaltyFamily(const ScenarioTree& tree, std::vector<DualGenerator> generators);
    const std::vector<DualGenerator>& generators() const { return generators_; }

    NodeVariable rho(int s, int t, const NodeVariable& x) const override;
    std::vector<std::vector<double>> pricing_weights(int s, int t,
                                                     const NodeVariable& x) const override;

    // Kernel k applied on every step of (s, t], as a density change.
    DensityChange generator_density(int k, int s, int t) const;
    // Cocycle-composed penalty of that density, one value per s-node.
    NodeVariable composed_penalty(int k, int s, int t) const;

private:
    std::vector<DualGenerator> generators_;
};

// rho(s, t, x) - rho(s, t, 0). Keeps monotonicity, convexity and order
// consistency; generally destroys recursive composition unless the riskless
// offsets already aggregate additively. Non-owning view over the base family.
class NormalizedFamily : public RiskMeasure {
public:
    explicit NormalizedFamily(const RiskMeasure& base);
    const RiskMeasure& base() const { return *base_; }

    NodeVariable rho(int s, int t, const NodeVariable& x) const override;
    std::vector<std::vector<double>> pricing_weights(int s, int t,
                                                     const NodeVariable& x) const override;

private:
    const RiskMeasure* base_;
};

// ---- minimal penalty -------------------------------------------------------

struct ConjugateOptions {
    double step_scale = 0.1;   // initial step = step_scale / curvature estimate
    double grad_tol = 1e-9;
    int max_iters = 100000;
    double ceiling = 1e9;      // objective above this reports +infinity
};

struct ConjugateDiagnostics {
    int iterations = 0;
    double final_gradient_norm = 0.0;
    bool unbounded = false;
};

// Numeric conjugate sup_x { E_Q[-x | F_s] - rho(s, t, x) }, one concave
// ascent per s-node. Gradient ascent with backtracking around the nominal
// step; +infinity per node once the objective passes the ceiling or a far-ray
// probe certifies a recession direction.
NodeVariable conjugate_penalty(const RiskMeasure& family, int s, int t, const DensityChange& q,
                               const ConjugateOptions& opts = {},
                               ConjugateDiagnostics* diag = nullptr);

// Minimal penalty of the family at Q. Entropic families use the closed form
// relative_entropy / gamma; everything else falls back to the numeric
// conjugate. The two must agree for entropic inputs, which the tests pin.
NodeVariable minimal_penalty(const RiskMeasure& family, int s, int t, const DensityChange& q,
                             const ConjugateOptions& opts = {});

// ---- structural checkers ---------------------------------------------------

// Monotonicity, convexity, measurable-weight convexity, translation
// invariance and weak homogeneity on the given sample claims.
CheckSuite check_axioms(const RiskMeasure& family, int s, int t,
                        const std::vector<NodeVariable>& samples, double tol = kAxiomTol);

// max |rho_rt(x) - rho_rs(-rho_st(x))| over the samples.
CheckSuite check_strong_tc(const RiskMeasure& family, int r, int s, int t,
                           const std::vector<NodeVariable>& samples, double tol = kAxiomTol);

// Splits recursive composition into its equivalent parts: (i) order
// consistency on matched pairs, (ii) the earlier-date identity
// rho_rt(y) = rho_rs(y - rho_st(0)) for level-s measurable y, (iii) plain
// restriction rho_rt(y) = rho_rs(y). For families with rho_st(0) = 0, (iii)
// together with (i) is equivalent to recursive composition.
CheckSuite check_tc_decomposition(const RiskMeasure& family, int r, int s, int t,
                                  const std::vector<NodeVariable>& samples,
                                  double tol = kAxiomTol);

struct DominationReport {
    double K = 0.0;
    double C = 0.0;
    double p = 2.0;
    bool sensitive = false;
    bool witness_is_reference = false;
    DensityChange witness;
    nlohmann::json to_json() const;
};

// Smallest K with rho_0T(x) <= K ||x||_p + C over a deterministic probe set,
// with C = rho_0T(0); then a search for an equivalent measure with finite
// minimal penalty (the reference measure is tried first).
DominationReport check_domination_sensitivity(const RiskMeasure& family, double p = 2.0);

} // namespace fdrisk
