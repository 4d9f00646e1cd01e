#include "fdrisk/indifference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

StrategySpace StrategySpace::zero() { return StrategySpace{}; }

StrategySpace StrategySpace::linear() {
    StrategySpace s;
    s.kind = StrategyKind::Linear;
    return s;
}

StrategySpace StrategySpace::box(std::vector<double> lower, std::vector<double> upper) {
    StrategySpace s;
    s.kind = StrategyKind::Box;
    s.lower = std::move(lower);
    s.upper = std::move(upper);
    return s;
}

void StrategySpace::validate(int asset_dim) const {
    if (kind != StrategyKind::Box) return;
    if (lower.size() != static_cast<std::size_t>(asset_dim) || upper.size() != lower.size())
        throw ValidationError("strategy space: box bounds must match the asset dimension");
    for (int k = 0; k < asset_dim; ++k) {
        if (std::isnan(lower[k]) || std::isnan(upper[k]))
            throw ValidationError("strategy space: NaN bound");
        if (lower[k] > 0.0 || upper[k] < 0.0)
            throw ValidationError("strategy space: the box must contain the zero strategy");
        if (lower[k] >= upper[k] && !(lower[k] == 0.0 && upper[k] == 0.0))
            throw ValidationError("strategy space: empty box coordinate");
    }
}

bool StrategySpace::coordinate_free(int k) const {
    if (kind == StrategyKind::Linear) return true;
    if (kind == StrategyKind::Zero) return false;
    return std::isinf(lower[k]) && std::isinf(upper[k]);
}

Strategy Strategy::zeros(const ScenarioTree& tree) {
    Strategy s;
    s.theta.assign(tree.node_count(), std::vector<double>(tree.asset_dim(), 0.0));
    return s;
}

NodeVariable gains(const ScenarioTree& tree, const Strategy& theta, int s, int t) {
    if (theta.theta.size() != static_cast<std::size_t>(tree.node_count()))
        throw ValidationError("gains: strategy must carry one position vector per node");
    NodeVariable g = NodeVariable::constant(tree, s, 0.0);
    for (int lv = s; lv < t; ++lv) {
        NodeVariable next(lv + 1, std::vector<double>(tree.nodes_at(lv + 1).size(), 0.0));
        for (int id : tree.nodes_at(lv)) {
            const auto& pos = theta.theta[id];
            if (pos.size() != static_cast<std::size_t>(tree.asset_dim()))
                throw ValidationError("gains: position dimension mismatch at node " +
                                      std::to_string(id));
            const double base = g.values[tree.index_in_level(id)];
            for (int c : tree.children(id)) {
                double inc = 0.0;
                for (int k = 0; k < tree.asset_dim(); ++k)
                    inc += pos[k] * (tree.assets(c)[k] - tree.assets(id)[k]);
                next.values[tree.index_in_level(c)] = base + inc;
            }
        }
        g = std::move(next);
    }
    return g;
}

namespace {

// decision coordinates of one s-node: (inner node, asset) pairs on its subtree
struct Block {
    int node = 0;
    int row = 0;
    std::vector<int> leaves;
    std::vector<std::pair<int, int>> coords; // (node id, asset index)
};

std::vector<Block> make_blocks(const ScenarioTree& tr, int s, int t) {
    std::vector<Block> blocks;
    for (int id : tr.nodes_at(s)) {
        Block b;
        b.node = id;
        b.row = tr.index_in_level(id);
        b.leaves = tr.descendants(id, t);
        for (int lv = s; lv < t; ++lv)
            for (int m : tr.descendants(id, lv))
                for (int k = 0; k < tr.asset_dim(); ++k) b.coords.emplace_back(m, k);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

void clip_to_box(const StrategySpace& space, const ScenarioTree& tr, Strategy& theta) {
    if (space.kind != StrategyKind::Box) return;
    for (auto& pos : theta.theta)
        for (int k = 0; k < tr.asset_dim(); ++k)
            pos[k] = std::min(std::max(pos[k], space.lower[k]), space.upper[k]);
}

double space_lower(const StrategySpace& s, int k) {
    return s.kind == StrategyKind::Box ? s.lower[k] : -kInf;
}
double space_upper(const StrategySpace& s, int k) {
    return s.kind == StrategyKind::Box ? s.upper[k] : kInf;
}

// gradient of rho(Y(theta) - x) w.r.t. the block coordinates, from the leaf
// weights of the family at the current point
std::vector<double> block_gradient(const ScenarioTree& tr, const Block& b, int s, int t,
                                   const std::vector<double>& leaf_weights) {
    std::vector<double> mass(tr.node_count(), 0.0);
    for (std::size_t j = 0; j < b.leaves.size(); ++j) mass[b.leaves[j]] = leaf_weights[j];
    for (int lv = t - 1; lv >= s; --lv)
        for (int m : tr.descendants(b.node, lv))
            for (int c : tr.children(m)) mass[m] += mass[c];
    std::vector<double> grad(b.coords.size(), 0.0);
    for (std::size_t i = 0; i < b.coords.size(); ++i) {
        const auto [m, k] = b.coords[i];
        double acc = 0.0;
        for (int c : tr.children(m)) acc -= mass[c] * (tr.assets(c)[k] - tr.assets(m)[k]);
        grad[i] = acc;
    }
    return grad;
}

// minimum-norm point in the convex hull of the rows, Frank-Wolfe style;
// used as the separating-direction certificate
std::vector<double> min_norm_in_hull(const std::vector<std::vector<double>>& pts, int iters) {
    const std::size_t n = pts.size(), d = pts.front().size();
    std::vector<double> lambda(n, 0.0);
    lambda[0] = 1.0;
    std::vector<double> c = pts[0];
    for (int it = 0; it < iters; ++it) {
        std::size_t best = 0;
        double best_dot = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += c[j] * pts[i][j];
            if (dot < best_dot) {
                best_dot = dot;
                best = i;
            }
        }
        double cc = 0.0;
        for (double v : c) cc += v * v;
        if (best_dot >= cc - 1e-14 * (1.0 + cc)) break;
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = c[j] - pts[best][j];
            num += c[j] * diff;
            den += diff * diff;
        }
        if (den <= 0.0) break;
        const double gamma = std::min(1.0, std::max(0.0, num / den));
        for (std::size_t j = 0; j < d; ++j) c[j] = (1.0 - gamma) * c[j] + gamma * pts[best][j];
        for (std::size_t i = 0; i < n; ++i) lambda[i] *= (1.0 - gamma);
        lambda[best] += gamma;
    }
    return c;
}

struct InnerProblem {
    const RiskMeasure& family;
    const StrategySpace& space;
    int s, t;
    const NodeVariable* claim; // nullptr for the claimless leg
    std::vector<Block> blocks;

    NodeVariable target(const Strategy& theta) const {
        const ScenarioTree& tr = family.tree();
        NodeVariable v = gains(tr, theta, s, t);
        if (claim) v = v - *claim;
        return v;
    }

    NodeVariable objective(const Strategy& theta) const {
        return family.rho(s, t, target(theta));
    }
};

// separating-direction test: a direction with uniformly positive gains on
// every leaf of the block certifies an unbounded risk reduction
void recession_precheck(const InnerProblem& prob) {
    const ScenarioTree& tr = prob.family.tree();
    if (prob.space.kind == StrategyKind::Zero) return;
    for (const auto& b : prob.blocks) {
        std::vector<int> free_coords;
        for (std::size_t i = 0; i < b.coords.size(); ++i)
            if (prob.space.kind == StrategyKind::Linear ||
                prob.space.coordinate_free(b.coords[i].second))
                free_coords.push_back(static_cast<int>(i));
        if (free_coords.empty()) continue;

        // leaf gain gradients restricted to the free coordinates
        std::vector<std::vector<double>> rows;
        rows.reserve(b.leaves.size());
        double scale = 0.0;
        for (int leaf : b.leaves) {
            std::vector<double> row(free_coords.size(), 0.0);
            for (std::size_t i = 0; i < free_coords.size(); ++i) {
                const auto [m, k] = b.coords[free_coords[i]];
                // contribution of coordinate (m, k) to this leaf's gain
                int anc = leaf;
                while (tr.level_of(anc) > tr.level_of(m) + 1) anc = tr.parent(anc);
                if (tr.level_of(m) < tr.level_of(leaf) && tr.ancestor(leaf, tr.level_of(m)) == m)
                    row[i] = tr.assets(anc)[k] - tr.assets(m)[k];
            }
            for (double v : row) scale = std::max(scale, std::fabs(v));
            rows.push_back(std::move(row));
        }
        if (scale == 0.0) continue;
        const auto c = min_norm_in_hull(rows, 20000);
        double cn = 0.0;
        for (double v : c) cn += v * v;
        cn = std::sqrt(cn);
        if (cn <= 1e-6 * scale) continue;

        // confirm along the ray before declaring: gains grow linearly, so the
        // objective must fall linearly
        Strategy probe = Strategy::zeros(tr);
        for (std::size_t i = 0; i < free_coords.size(); ++i) {
            const auto [m, k] = b.coords[free_coords[i]];
            probe.theta[m][k] = c[i] / cn;
        }
        const double tau1 = 1e5, tau2 = 2e5;
        Strategy p1 = probe, p2 = probe;
        for (auto& pos : p1.theta)
            for (double& v : pos) v *= tau1;
        for (auto& pos : p2.theta)
            for (double& v : pos) v *= tau2;
        const double f1 = prob.objective(p1).values[b.row];
        const double f2 = prob.objective(p2).values[b.row];
        if (f2 - f1 < -1e-6 * (tau2 - tau1) * scale * cn) {
            std::vector<double> dir(c);
            throw UnboundedRiskReduction(
                "inner hedge: uniformly profitable direction at node " + std::to_string(b.node),
                b.node, dir);
        }
    }
}

struct InnerSolution {
    NodeVariable value;
    Strategy theta;
    OptimizerDiagnostics diag;
};

InnerSolution minimise_inner(const InnerProblem& prob, const InnerOptOptions& opts) {
    const ScenarioTree& tr = prob.family.tree();
    InnerSolution sol{NodeVariable::constant(tr, prob.s, 0.0), Strategy::zeros(tr), {}};

    if (prob.space.kind == StrategyKind::Zero) {
        sol.value = prob.objective(sol.theta);
        return sol;
    }
    recession_precheck(prob);

    Strategy theta = Strategy::zeros(tr);
    NodeVariable fvec = prob.objective(theta);
    double f = 0.0;
    for (double v : fvec.values) f += v;

    double step = 1.0;
    int stall = 0;
    int iter = 0;
    double pg_norm = kInf;
    for (; iter < opts.max_iters; ++iter) {
        const NodeVariable v = prob.target(theta);
        const auto weights = prob.family.pricing_weights(prob.s, prob.t, v);

        // assemble the full gradient across blocks
        std::vector<std::vector<double>> grads(prob.blocks.size());
        double gnorm_sq = 0.0;
        pg_norm = 0.0;
        for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
            const auto& b = prob.blocks[bi];
            grads[bi] = block_gradient(tr, b, prob.s, prob.t, weights[b.row]);
            for (std::size_t i = 0; i < b.coords.size(); ++i) {
                const auto [m, k] = b.coords[i];
                double g = grads[bi][i];
                // projected gradient: freeze coordinates pinned at their bound
                if (prob.space.kind == StrategyKind::Box) {
                    const double th = theta.theta[m][k];
                    if (th <= space_lower(prob.space, k) + 1e-15 && g > 0.0) g = 0.0;
                    if (th >= space_upper(prob.space, k) - 1e-15 && g < 0.0) g = 0.0;
                }
                gnorm_sq += g * g;
                pg_norm = std::max(pg_norm, std::fabs(g));
            }
        }
        if (pg_norm <= opts.grad_tol) break;

        bool accepted = false;
        double eta = step;
        for (int bt = 0; bt < 60; ++bt) {
            Strategy cand = theta;
            for (std::size_t bi = 0; bi < prob.blocks.size(); ++bi) {
                const auto& b = prob.blocks[bi];
                for (std::size_t i = 0; i < b.coords.size(); ++i) {
                    const auto [m, k] = b.coords[i];
                    cand.theta[m][k] -= eta * grads[bi][i];
                }
            }
            clip_to_box(prob.space, tr, cand);
            const NodeVariable fv = prob.objective(cand);
            double fc = 0.0;
            for (double v2 : fv.values) fc += v2;
            if (fc <= f - 1e-4 * eta * gnorm_sq) {
                const double decrease = f - fc;
                theta = std::move(cand);
                fvec = fv;
                f = fc;
                accepted = true;
                step = (bt == 0) ? std::min(eta * 1.8, 1e8) : eta;
                stall = (decrease < opts.obj_tol) ? stall + 1 : 0;
                break;
            }
            eta *= 0.5;
        }
        for (std::size_t n = 0; n < fvec.size(); ++n) {
            if (fvec[n] < opts.floor) {
                const auto& b = prob.blocks[n];
                std::vector<double> dir;
                for (std::size_t i = 0; i < b.coords.size(); ++i) {
                    const auto [m, k] = b.coords[i];
                    dir.push_back(theta.theta[m][k]);
                }
                throw UnboundedRiskReduction(
                    "inner hedge: objective fell through the floor at node " +
                        std::to_string(b.node),
                    b.node, dir);
            }
        }
        if (!accepted || stall >= 3) break;
    }

    sol.value = fvec;
    sol.theta = theta;
    sol.diag.iterations = iter;
    sol.diag.final_gradient_norm = pg_norm;

    // certificate: no sampled feasible direction improves to first order
    double worst = 0.0;
    const double h = 1e-5;
    for (const auto& b : prob.blocks) {
        for (std::size_t i = 0; i < b.coords.size(); ++i) {
            const auto [m, k] = b.coords[i];
            for (double sgn : {1.0, -1.0}) {
                Strategy cand = theta;
                cand.theta[m][k] += sgn * h;
                clip_to_box(prob.space, tr, cand);
                if (std::fabs(cand.theta[m][k] - theta.theta[m][k]) < 0.5 * h) continue;
                const double fd =
                    (prob.objective(cand).values[b.row] - fvec.values[b.row]) / h;
                worst = std::min(worst, fd);
            }
        }
    }
    sol.diag.certificate_worst_slope = worst;
    return sol;
}

// exact minimum of max_i (a[i] + m[i] * x) over x in [lo, hi]: the envelope is
// piecewise linear, so the minimum sits at a bound or a pairwise crossing
std::pair<double, double> minimize_line_envelope(const std::vector<double>& a,
                                                 const std::vector<double>& m, double lo,
                                                 double hi) {
    const auto eval = [&](double x) {
        double v = -kInf;
        for (std::size_t i = 0; i < a.size(); ++i) v = std::max(v, a[i] + m[i] * x);
        return v;
    };
    std::vector<double> cand{lo, hi};
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double dm = m[i] - m[j];
            if (dm == 0.0) continue;
            const double x = (a[j] - a[i]) / dm;
            if (x > lo && x < hi) cand.push_back(x);
        }
    }
    double best_v = kInf, best_x = lo;
    for (double x : cand) {
        const double v = eval(x);
        if (v < best_v) {
            best_v = v;
            best_x = x;
        }
    }
    return {best_v, best_x};
}

} // namespace

PriceResult price(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                  const NodeVariable& claim, const InnerOptOptions& opts) {
    const ScenarioTree& tr = family.tree();
    space.validate(tr.asset_dim());
    require_shape(tr, claim, "price");
    if (claim.level != t) throw LevelMismatchError("price: claim does not live at level t");

    InnerProblem with{family, space, s, t, &claim, make_blocks(tr, s, t)};
    InnerProblem without{family, space, s, t, nullptr, with.blocks};

    InnerSolution base = minimise_inner(without, opts);
    InnerSolution hedged = minimise_inner(with, opts);

    PriceResult res{hedged.value - base.value, hedged.value, base.value, hedged.theta,
                    hedged.diag};
    res.diag.iterations = std::max(hedged.diag.iterations, base.diag.iterations);
    res.diag.final_gradient_norm =
        std::max(hedged.diag.final_gradient_norm, base.diag.final_gradient_norm);
    res.diag.certificate_worst_slope =
        std::min(hedged.diag.certificate_worst_slope, base.diag.certificate_worst_slope);
    return res;
}

CheckSuite check_price_operator(const RiskMeasure& family, const StrategySpace& space, int s,
                                int t, const std::vector<NodeVariable>& samples, double tol) {
    const ScenarioTree& tr = family.tree();
    if (samples.size() < 2)
        throw ValidationError("check_price_operator: need at least two sample claims");
    CheckSuite suite{"price_operator", {}};

    auto px = [&](const NodeVariable& x) { return price(family, space, s, t, x).price; };

    std::vector<NodeVariable> prices;
    prices.reserve(samples.size());
    for (const auto& x : samples) prices.push_back(px(x));

    double mono = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const NodeVariable upper = nv_max(samples[i], samples[i + 1]);
        const NodeVariable p = px(upper);
        for (std::size_t n = 0; n < p.size(); ++n)
            mono = std::max(mono, prices[i][n] - p[n]);
    }
    suite.checks.push_back({"monotonicity", mono <= tol, mono, {}});

    double convexity = 0.0;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double lam = 0.5;
        const NodeVariable mix = lam * samples[i] + (1.0 - lam) * samples[i + 1];
        const NodeVariable p = px(mix);
        for (std::size_t n = 0; n < p.size(); ++n)
            convexity =
                std::max(convexity, p[n] - (lam * prices[i][n] + (1.0 - lam) * prices[i + 1][n]));
    }
    suite.checks.push_back({"convexity", convexity <= tol, convexity, {}});

    double homog = 0.0;
    {
        const auto& ids = tr.nodes_at(s);
        std::vector<int> half(ids.begin(), ids.begin() + (ids.size() + 1) / 2);
        const NodeVariable ind_s = indicator(tr, s, half);
        const NodeVariable ind_t = lift(tr, ind_s, t);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            NodeVariable masked = samples[i];
            for (std::size_t m = 0; m < masked.size(); ++m) masked.values[m] *= ind_t[m];
            const NodeVariable p = px(masked);
            for (int id : half) {
                const std::size_t n = static_cast<std::size_t>(tr.index_in_level(id));
                homog = std::max(homog, std::fabs(p[n] - prices[i][n]));
            }
        }
    }
    suite.checks.push_back({"weak_homogeneity", homog <= tol, homog, {}});

    double projection = 0.0;
    for (const auto& x : samples) {
        const NodeVariable f = cond_expect(tr, x, s);
        const NodeVariable p = px(lift(tr, f, t));
        projection = std::max(projection, nv_max_abs(p - f));
    }
    suite.checks.push_back({"projection", projection <= tol, projection, {}});

    const double zero_px = nv_max_abs(px(NodeVariable::constant(tr, t, 0.0)));
    suite.checks.push_back({"zero_claim", zero_px <= tol, zero_px, {}});

    const NodeVariable unit = px(NodeVariable::constant(tr, t, 1.0));
    const double unit_px = nv_max_abs(unit - NodeVariable::constant(tr, s, 1.0));
    suite.checks.push_back({"unit_claim", unit_px <= tol, unit_px, {}});

    if (space.kind == StrategyKind::Linear) {
        Strategy theta = Strategy::zeros(tr);
        for (int lv = s; lv < t; ++lv)
            for (int m : tr.nodes_at(lv))
                for (int k = 0; k < tr.asset_dim(); ++k)
                    theta.theta[m][k] = 0.5 * static_cast<double>(((m + k) % 3) - 1);
        const NodeVariable attainable = gains(tr, theta, s, t);
        const double v = nv_max_abs(px(attainable));
        suite.checks.push_back({"attainable_at_zero", v <= tol, v, {}});
    }

    return suite;
}

CheckSuite check_recursive(const RiskMeasure& family, const StrategySpace& space, int r, int s,
                           int t, const std::vector<NodeVariable>& samples, double tol) {
    const ScenarioTree& tr = family.tree();
    CheckSuite suite{"price_recursiveness", {}};
    double worst = 0.0;
    nlohmann::json witness;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const NodeVariable inner = price(family, space, s, t, samples[i]).price;
        const NodeVariable outer_of_inner =
            price(family, space, r, t, lift(tr, inner, t)).price;
        const NodeVariable direct = price(family, space, r, t, samples[i]).price;
        const double v = nv_max_abs(outer_of_inner - direct);
        if (v > worst) {
            worst = v;
            witness = {{"sample", i}};
        }
    }
    suite.checks.push_back({"recursiveness", worst <= tol, worst, witness});
    return suite;
}

GainDecomposition decompose_gain(const ScenarioTree& tree, const StrategySpace& space,
                                 const NodeVariable& g, int r, int s, const Strategy* witness) {
    require_shape(tree, g, "decompose_gain");
    const int t = g.level;
    if (!(r <= s && s <= t)) throw ValidationError("decompose_gain: need r <= s <= t");
    space.validate(tree.asset_dim());

    Strategy theta = witness ? *witness : Strategy::zeros(tree);
    if (!witness) {
        // the position at a node shifts every leaf under one child by the same
        // amount, so the least worst-case violation of g <= Y(theta) solves a
        // backward recursion with an envelope minimization at each inner node
        const double scale = std::max(1.0, nv_max_abs(g));
        const double big = 1e7 * scale;
        std::vector<double> lo(tree.asset_dim()), hi(tree.asset_dim());
        for (int k = 0; k < tree.asset_dim(); ++k) {
            lo[k] = space.kind == StrategyKind::Zero ? 0.0 : std::max(space_lower(space, k), -big);
            hi[k] = space.kind == StrategyKind::Zero ? 0.0 : std::min(space_upper(space, k), big);
        }

        std::vector<double> worst_below(tree.node_count(), 0.0);
        const auto& leaves = tree.nodes_at(t);
        for (std::size_t i = 0; i < leaves.size(); ++i) worst_below[leaves[i]] = g[i];
        for (int lv = t - 1; lv >= r; --lv) {
            for (int id : tree.nodes_at(lv)) {
                const auto& kids = tree.children(id);
                std::vector<double> base(kids.size());
                std::vector<std::vector<double>> slope(
                    tree.asset_dim(), std::vector<double>(kids.size()));
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    base[c] = worst_below[kids[c]];
                    for (int k = 0; k < tree.asset_dim(); ++k)
                        slope[k][c] = tree.assets(id)[k] - tree.assets(kids[c])[k];
                }
                std::vector<double>& pos = theta.theta[id];
                double value = 0.0;
                double prev = kInf;
                // one coordinate pass is exact in one dimension; otherwise
                // sweep until the envelope value stops improving
                for (int sweep = 0; sweep < (tree.asset_dim() == 1 ? 1 : 200); ++sweep) {
                    for (int k = 0; k < tree.asset_dim(); ++k) {
                        std::vector<double> a(kids.size());
                        for (std::size_t c = 0; c < kids.size(); ++c) {
                            a[c] = base[c];
                            for (int j = 0; j < tree.asset_dim(); ++j)
                                if (j != k) a[c] += slope[j][c] * pos[j];
                        }
                        const auto [v, x] = minimize_line_envelope(a, slope[k], lo[k], hi[k]);
                        pos[k] = x;
                        value = v;
                    }
                    if (prev - value < 1e-14 * scale) break;
                    prev = value;
                }
                worst_below[id] = value;
            }
        }
        const NodeVariable resid = g - gains(tree, theta, r, t);
        double worst = -kInf;
        for (double v : resid.values) worst = std::max(worst, v);
        if (worst > 1e-9 * scale)
            throw InfeasibleClaim("decompose_gain: no strategy dominates the claim, residual " +
                                  std::to_string(worst));
    }

    const NodeVariable y_rt = gains(tree, theta, r, t);
    {
        const NodeVariable resid = g - y_rt;
        double worst = -kInf;
        for (double v : resid.values) worst = std::max(worst, v);
        if (witness && worst > 1e-9 * std::max(1.0, nv_max_abs(g)))
            throw InfeasibleClaim("decompose_gain: supplied witness does not dominate the claim");
    }

    const NodeVariable y_rs = gains(tree, theta, r, s);
    const NodeVariable y_st = gains(tree, theta, s, t);

    double m_low = 0.0;
    for (double v : g.values) m_low = std::min(m_low, v);
    for (double v : y_rs.values) m_low = std::min(m_low, v);
    for (double v : y_st.values) m_low = std::min(m_low, v);

    double g_sup = nv_max_abs(g);
    GainDecomposition out;
    out.theta = theta;
    out.g1 = nv_min(y_rs, NodeVariable::constant(tree, s, g_sup - m_low));
    out.g2 = g - lift(tree, out.g1, t);

    for (std::size_t i = 0; i < out.g1.size(); ++i)
        out.slack_g1 = std::max(out.slack_g1, out.g1[i] - y_rs[i]);
    for (std::size_t i = 0; i < out.g2.size(); ++i)
        out.slack_g2 = std::max(out.slack_g2, out.g2[i] - y_st[i]);
    return out;
}

} // namespace fdrisk
