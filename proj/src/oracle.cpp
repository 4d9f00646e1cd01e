#include "fdrisk/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fdrisk/errors.hpp"

namespace fdrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---- conditional expectation by path enumeration ---------------------------------

NodeVariable oracle_cond_expect(const ScenarioTree& tree, const NodeVariable& x,
                                const DensityChange& q, int s) {
    require_shape(tree, x, "oracle_cond_expect");
    const int t = x.level;
    NodeVariable out = NodeVariable::constant(tree, s, 0.0);

    std::function<double(int, double)> walk = [&](int node, double weight) -> double {
        if (tree.level_of(node) == t) return weight * x.values[tree.index_in_level(node)];
        double acc = 0.0;
        for (int c : tree.children(node))
            acc += walk(c, weight * tree.branch_prob(c) * q.ratio(c));
        return acc;
    };

    for (int id : tree.nodes_at(s)) out.values[tree.index_in_level(id)] = walk(id, 1.0);
    return out;
}

// ---- entropic dual by simplex grid ------------------------------------------------

namespace {

void enumerate_simplex(int remaining, std::size_t pos, std::vector<int>& counts,
                       const std::function<void(const std::vector<int>&)>& visit) {
    if (pos + 1 == counts.size()) {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for (int k = 0; k <= remaining; ++k) {
        counts[pos] = k;
        enumerate_simplex(remaining - k, pos + 1, counts, visit);
    }
}

double binom_guard(int res, std::size_t n) {
    double c = 1.0;
    for (std::size_t i = 1; i < n; ++i) c *= static_cast<double>(res + i) / static_cast<double>(i);
    return c;
}

} // namespace

NodeVariable oracle_dual_entropic(const ScenarioTree& tree, const NodeVariable& x, int s,
                                  double gamma, int resolution) {
    require_shape(tree, x, "oracle_dual_entropic");
    if (resolution < 1) throw ValidationError("oracle_dual_entropic: resolution must be positive");
    const int t = x.level;
    NodeVariable out = NodeVariable::constant(tree, s, 0.0);

    for (int id : tree.nodes_at(s)) {
        const auto leaves = tree.descendants(id, t);
        const std::size_t n = leaves.size();
        if (binom_guard(resolution, n) > 5e6)
            throw Error("oracle_dual_entropic: grid too large for this subtree");

        std::vector<double> p(n), v(n);
        const double pn = tree.node_prob(id);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = tree.node_prob(leaves[i]) / pn;
            v[i] = x.values[tree.index_in_level(leaves[i])];
        }

        double best = -kInf;
        std::vector<int> counts(n, 0);
        enumerate_simplex(resolution, 0, counts, [&](const std::vector<int>& c) {
            double val = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double qi = static_cast<double>(c[i]) / resolution;
                if (qi == 0.0) continue;
                val += qi * (-v[i]) - qi * std::log(qi / p[i]) / gamma;
            }
            best = std::max(best, val);
        });
        out.values[tree.index_in_level(id)] = best;
    }
    return out;
}

// ---- kernel menu dual by exhaustive selection -------------------------------------

NodeVariable oracle_dual_menu(const ScenarioTree& tree, const std::vector<DualGenerator>& menu,
                              const NodeVariable& x, int s, int t) {
    require_shape(tree, x, "oracle_dual_menu");
    if (menu.empty()) throw ValidationError("oracle_dual_menu: empty menu");
    NodeVariable out = NodeVariable::constant(tree, s, 0.0);
    const std::size_t g = menu.size();

    for (int id : tree.nodes_at(s)) {
        std::vector<int> interior;
        for (int lv = s; lv < t; ++lv)
            for (int m : tree.descendants(id, lv)) interior.push_back(m);
        if (std::pow(static_cast<double>(g), static_cast<double>(interior.size())) > 1e6)
            throw Error("oracle_dual_menu: too many selections for this subtree");

        std::function<double(int, const std::vector<std::size_t>&)> eval =
            [&](int node, const std::vector<std::size_t>& pick) -> double {
            if (tree.level_of(node) == t) return -x.values[tree.index_in_level(node)];
            const std::size_t slot =
                std::find(interior.begin(), interior.end(), node) - interior.begin();
            const DualGenerator& gen = menu[pick[slot]];
            double acc = -gen.penalty[static_cast<std::size_t>(node)];
            for (int c : tree.children(node))
                acc += tree.branch_prob(c) * gen.ratios[static_cast<std::size_t>(c)] *
                       eval(c, pick);
            return acc;
        };

        double best = -kInf;
        std::vector<std::size_t> pick(interior.size(), 0);
        while (true) {
            best = std::max(best, eval(id, pick));
            std::size_t slot = 0;
            while (slot < pick.size() && ++pick[slot] == g) {
                pick[slot] = 0;
                ++slot;
            }
            if (slot == pick.size()) break;
        }
        out.values[tree.index_in_level(id)] = best;
    }
    return out;
}

// ---- deviation bound by multiplier bisection --------------------------------------

namespace {

// mean of max(-1, a + b x) as a function of a is increasing; root by bisection
double solve_offset(const std::vector<double>& p, const std::vector<double>& x, double b) {
    double span = 0.0;
    for (double v : x) span = std::max(span, std::fabs(v));
    double lo = -1.0 - b * span - 1.0, hi = 1.0 + b * span + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double a = 0.5 * (lo + hi);
        double m = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * std::max(-1.0, a + b * x[i]);
        (m < 0.0 ? lo : hi) = a;
    }
    return 0.5 * (lo + hi);
}

double second_moment(const std::vector<double>& p, const std::vector<double>& x, double a,
                     double b) {
    double m2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double h = std::max(-1.0, a + b * x[i]);
        m2 += p[i] * h * h;
    }
    return m2;
}

} // namespace

OracleQpResult oracle_qp(const std::vector<double>& p, const std::vector<double>& x,
                         double delta) {
    if (p.size() != x.size() || p.empty())
        throw ValidationError("oracle_qp: mismatched or empty inputs");
    OracleQpResult res;
    res.h.assign(p.size(), 0.0);

    const double xmax = *std::max_element(x.begin(), x.end());
    double mass_at_max = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (x[i] >= xmax - 1e-14) mass_at_max += p[i];
    const double vertex_m2 = (1.0 - mass_at_max) / mass_at_max;

    if (delta <= 0.0 || vertex_m2 <= 1e-28) {
        for (std::size_t i = 0; i < p.size(); ++i) res.value += p[i] * x[i];
        return res;
    }

    if (delta * delta >= vertex_m2 - 1e-14) {
        // budget never binds; mass rides on the conditional maximum
        const double hmax = (1.0 - mass_at_max) / mass_at_max;
        for (std::size_t i = 0; i < p.size(); ++i)
            res.h[i] = (x[i] >= xmax - 1e-14) ? hmax : -1.0;
    } else {
        double b_lo = 0.0, b_hi = 1.0;
        while (second_moment(p, x, solve_offset(p, x, b_hi), b_hi) < delta * delta) {
            b_hi *= 2.0;
            ++res.iterations;
            if (b_hi > 1e14) throw Error("oracle_qp: slope bracket failed");
        }
        for (int it = 0; it < 300; ++it) {
            const double b = 0.5 * (b_lo + b_hi);
            const double a = solve_offset(p, x, b);
            (second_moment(p, x, a, b) < delta * delta ? b_lo : b_hi) = b;
            ++res.iterations;
        }
        const double b = 0.5 * (b_lo + b_hi);
        const double a = solve_offset(p, x, b);
        for (std::size_t i = 0; i < p.size(); ++i) res.h[i] = std::max(-1.0, a + b * x[i]);
    }

    for (std::size_t i = 0; i < p.size(); ++i) res.value += p[i] * (1.0 + res.h[i]) * x[i];
    return res;
}

// ---- price by refining grid search -------------------------------------------------

namespace {

struct Coord {
    int node;
    int asset;
};

double eval_strategy(const RiskMeasure& family, int s, int t, const NodeVariable& claim,
                     const std::vector<Coord>& coords, const std::vector<double>& theta,
                     std::size_t row) {
    const ScenarioTree& tr = family.tree();
    Strategy st = Strategy::zeros(tr);
    for (std::size_t i = 0; i < coords.size(); ++i)
        st.theta[static_cast<std::size_t>(coords[i].node)][static_cast<std::size_t>(
            coords[i].asset)] = theta[i];
    const NodeVariable g = gains(tr, st, s, t);
    return family.rho(s, t, g - claim).values[row];
}

double grid_min(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                const NodeVariable& claim, const std::vector<Coord>& coords, std::size_t row,
                const GridSpec& grid) {
    if (coords.empty()) {
        return eval_strategy(family, s, t, claim, coords, {}, row);
    }
    const std::size_t d = coords.size();
    if (std::pow(static_cast<double>(grid.resolution), static_cast<double>(d)) > 2e6)
        throw Error("oracle_price_grid: grid too large");

    std::vector<double> lo(d, grid.lo), hi(d, grid.hi);
    if (space.kind == StrategyKind::Box) {
        for (std::size_t i = 0; i < d; ++i) {
            lo[i] = std::max(lo[i], space.lower[static_cast<std::size_t>(coords[i].asset)]);
            hi[i] = std::min(hi[i], space.upper[static_cast<std::size_t>(coords[i].asset)]);
        }
    }

    std::vector<double> best_theta(d, 0.0);
    double best = kInf;
    for (int pass = 0; pass < grid.refinements; ++pass) {
        std::vector<int> idx(d, 0);
        std::vector<double> theta(d);
        while (true) {
            for (std::size_t i = 0; i < d; ++i)
                theta[i] = grid.resolution == 1
                               ? 0.5 * (lo[i] + hi[i])
                               : lo[i] + (hi[i] - lo[i]) * idx[i] / (grid.resolution - 1);
            const double v = eval_strategy(family, s, t, claim, coords, theta, row);
            if (v < best) {
                best = v;
                best_theta = theta;
            }
            std::size_t slot = 0;
            while (slot < d && ++idx[slot] == grid.resolution) {
                idx[slot] = 0;
                ++slot;
            }
            if (slot == d) break;
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double w = (hi[i] - lo[i]) / grid.refine_factor;
            lo[i] = best_theta[i] - 0.5 * w;
            hi[i] = best_theta[i] + 0.5 * w;
            if (space.kind == StrategyKind::Box) {
                lo[i] = std::max(lo[i], space.lower[static_cast<std::size_t>(coords[i].asset)]);
                hi[i] = std::min(hi[i], space.upper[static_cast<std::size_t>(coords[i].asset)]);
            }
        }
    }
    return best;
}

} // namespace

NodeVariable oracle_price_grid(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                               const NodeVariable& claim, const GridSpec& grid) {
    const ScenarioTree& tr = family.tree();
    space.validate(tr.asset_dim());
    const NodeVariable zero = NodeVariable::constant(tr, t, 0.0);
    NodeVariable out = NodeVariable::constant(tr, s, 0.0);

    for (int id : tr.nodes_at(s)) {
        const std::size_t row = static_cast<std::size_t>(tr.index_in_level(id));
        std::vector<Coord> coords;
        if (space.kind != StrategyKind::Zero) {
            for (int lv = s; lv < t; ++lv)
                for (int m : tr.descendants(id, lv))
                    for (int k = 0; k < tr.asset_dim(); ++k) coords.push_back({m, k});
        }
        const double hedged = grid_min(family, space, s, t, claim, coords, row, grid);
        const double base = grid_min(family, space, s, t, zero, coords, row, grid);
        out.values[row] = hedged - base;
    }
    return out;
}

} // namespace fdrisk
