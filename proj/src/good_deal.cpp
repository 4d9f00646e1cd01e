#include "fdrisk/good_deal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fdrisk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---- DeltaSchedule ------------------------------------------------------------

DeltaSchedule DeltaSchedule::from_base(double base, int levels) {
    if (!(base > 1.0) || !std::isfinite(base))
        throw ValidationError("delta schedule: base must be finite and exceed 1");
    if (levels < 1) throw ValidationError("delta schedule: need at least one level");
    DeltaSchedule s;
    s.levels_ = levels;
    for (int a = 0; a < levels; ++a)
        for (int b = a; b < levels; ++b)
            s.table_[{a, b}] = std::pow(base, b - a) - 1.0;
    return s;
}

DeltaSchedule DeltaSchedule::from_table(const std::map<std::pair<int, int>, double>& table,
                                        int levels) {
    if (levels < 1) throw ValidationError("delta schedule: need at least one level");
    DeltaSchedule s;
    s.levels_ = levels;
    for (const auto& [key, value] : table) {
        const auto [a, b] = key;
        if (a < 0 || b >= levels || a > b)
            throw ValidationError("delta schedule: pair (" + std::to_string(a) + ", " +
                                  std::to_string(b) + ") outside the tree");
        if (!std::isfinite(value) || value < 0.0)
            throw ValidationError("delta schedule: radii must be finite and nonnegative");
        if (a == b && value != 0.0)
            throw ValidationError("delta schedule: the trivial pair must carry radius 0");
        s.table_[key] = value;
    }
    for (const auto& [key_rs, d_rs] : s.table_) {
        const auto [r, mid] = key_rs;
        for (const auto& [key_st, d_st] : s.table_) {
            if (key_st.first != mid) continue;
            const int t = key_st.second;
            const auto it = s.table_.find({r, t});
            if (it == s.table_.end()) continue;
            const double composed = (1.0 + d_rs) * (1.0 + d_st) - 1.0;
            if (std::fabs(composed - it->second) > 1e-12)
                throw ValidationError("delta schedule: table breaks the composition rule on (" +
                                      std::to_string(r) + ", " + std::to_string(mid) + ", " +
                                      std::to_string(t) + ")");
        }
    }
    return s;
}

double DeltaSchedule::delta(int s, int t) const {
    const auto it = table_.find({s, t});
    if (it == table_.end())
        throw ValidationError("delta schedule: no radius for the pair (" + std::to_string(s) +
                              ", " + std::to_string(t) + ")");
    return it->second;
}

bool DeltaSchedule::has(int s, int t) const { return table_.count({s, t}) > 0; }

// ---- deviation bounds -----------------------------------------------------------

namespace {

// maximize sum p_i (1+h_i) x_i over E[h]=0, E[h^2]<=delta^2, h>=-1 for one
// node. Pins coordinates at -1 in ascending x order until the affine tilt on
// the free coordinates respects the positivity floor.
void solve_node(const std::vector<double>& p, const std::vector<double>& x, double delta,
                std::vector<double>& h, int& pinned) {
    const std::size_t n = p.size();
    h.assign(n, 0.0);
    pinned = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i] * x[i];
    if (delta <= 0.0) return;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return a < b;
    });

    for (std::size_t j = 0; j < n; ++j) {
        // pin the j smallest, solve on the rest
        double beta = 0.0;
        for (std::size_t i = 0; i < j; ++i) beta += p[order[i]];
        double pf = 0.0, xf = 0.0;
        for (std::size_t i = j; i < n; ++i) {
            pf += p[order[i]];
            xf += p[order[i]] * x[order[i]];
        }
        xf /= pf;
        double vf = 0.0;
        for (std::size_t i = j; i < n; ++i)
            vf += p[order[i]] * (x[order[i]] - xf) * (x[order[i]] - xf);

        const double base = beta / pf;
        double mu = 0.0;
        if (vf > 1e-30) {
            const double rad = delta * delta - beta - beta * beta / pf;
            if (rad < 0.0) continue; // budget burnt by the pins, pin further
            mu = std::sqrt(rad / vf);
        } else {
            if (beta + beta * beta / pf > delta * delta + 1e-15) continue;
        }

        bool ok = true;
        for (std::size_t i = j; i < n; ++i) {
            const double hi = base + mu * (x[order[i]] - xf);
            if (1.0 + hi < -1e-12) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        for (std::size_t i = 0; i < j; ++i) h[order[i]] = -1.0;
        for (std::size_t i = j; i < n; ++i) h[order[i]] = base + mu * (x[order[i]] - xf);
        pinned = static_cast<int>(j);
        return;
    }
    throw Error("deviation bound: active-set search exhausted, no feasible tilt found");
}

std::vector<double> conditional_probs(const ScenarioTree& tr, int node,
                                      const std::vector<int>& leaves) {
    std::vector<double> p(leaves.size());
    const double pn = tr.node_prob(node);
    for (std::size_t i = 0; i < leaves.size(); ++i) p[i] = tr.node_prob(leaves[i]) / pn;
    return p;
}

} // namespace

NgdBound ngd_upper(const ScenarioTree& tree, const NodeVariable& x, int s, double delta) {
    require_shape(tree, x, "ngd_upper");
    const int t = x.level;
    if (s > t) throw LevelMismatchError("ngd_upper: s must not exceed the claim level");
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ValidationError("ngd_upper: radius must be finite and nonnegative");

    NgdBound out;
    out.value = NodeVariable::constant(tree, s, 0.0);
    for (int id : tree.nodes_at(s)) {
        const auto leaves = tree.descendants(id, t);
        const auto p = conditional_probs(tree, id, leaves);
        std::vector<double> vals(leaves.size());
        for (std::size_t i = 0; i < leaves.size(); ++i)
            vals[i] = x.values[tree.index_in_level(leaves[i])];
        std::vector<double> h;
        int pinned = 0;
        solve_node(p, vals, delta, h, pinned);
        double m = 0.0;
        for (std::size_t i = 0; i < leaves.size(); ++i) m += p[i] * (1.0 + h[i]) * vals[i];
        out.value.values[tree.index_in_level(id)] = m;
        out.pinned_count.push_back(pinned);
        out.h.push_back(std::move(h));
    }
    return out;
}

NgdBound ngd_upper(const ScenarioTree& tree, const NodeVariable& x, int s,
                   const DeltaSchedule& schedule) {
    return ngd_upper(tree, x, s, schedule.delta(s, x.level));
}

NgdBound ngd_lower(const ScenarioTree& tree, const NodeVariable& x, int s, double delta) {
    NgdBound out = ngd_upper(tree, -x, s, delta);
    out.value = -out.value;
    return out;
}

NgdBound ngd_lower(const ScenarioTree& tree, const NodeVariable& x, int s,
                   const DeltaSchedule& schedule) {
    return ngd_lower(tree, x, s, schedule.delta(s, x.level));
}

// ---- membership ----------------------------------------------------------------

nlohmann::json MembershipReport::to_json() const {
    return nlohmann::json{{"s", s},
                          {"t", t},
                          {"delta", delta},
                          {"member", member},
                          {"node_member", node_member},
                          {"l2_deviation", l2_deviation},
                          {"mean_residual", mean_residual}};
}

MembershipReport ngd_membership(const ScenarioTree& tree, const DensityChange& q,
                                const DeltaSchedule& schedule) {
    MembershipReport rep;
    rep.s = q.s;
    rep.t = q.t;
    rep.delta = schedule.delta(q.s, q.t);

    for (int id : tree.nodes_at(q.s)) {
        const auto leaves = tree.descendants(id, q.t);
        const auto p = conditional_probs(tree, id, leaves);
        double mean = 0.0, second = 0.0;
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            double dens = 1.0;
            int walk = leaves[i];
            while (walk != id) {
                dens *= q.ratio(walk);
                walk = tree.parent(walk);
            }
            const double h = dens - 1.0;
            mean += p[i] * h;
            second += p[i] * h * h;
        }
        const double l2 = std::sqrt(std::max(second, 0.0));
        const bool ok = l2 <= rep.delta + 1e-12;
        rep.node_member.push_back(ok);
        rep.l2_deviation.push_back(l2);
        rep.mean_residual.push_back(mean);
        rep.member = rep.member && ok;
    }
    return rep;
}

// ---- sandwich -------------------------------------------------------------------

CheckSuite check_sandwich(const RiskMeasure& family, const StrategySpace& space, int s, int t,
                          const DeltaSchedule& schedule, const std::vector<NodeVariable>& samples,
                          double tol) {
    const ScenarioTree& tr = family.tree();
    CheckSuite suite{"sandwich", {}};
    const double delta = schedule.delta(s, t);

    double lower_violation = 0.0, upper_violation = 0.0;
    nlohmann::json lower_witness, upper_witness;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const NodeVariable px = price(family, space, s, t, samples[i]).price;
        const NodeVariable up = ngd_upper(tr, samples[i], s, delta).value;
        const NodeVariable lo = ngd_lower(tr, samples[i], s, delta).value;
        for (std::size_t n = 0; n < px.size(); ++n) {
            if (lo[n] - px[n] > lower_violation) {
                lower_violation = lo[n] - px[n];
                lower_witness = {{"sample", i}, {"node", tr.nodes_at(s)[n]}};
            }
            if (px[n] - up[n] > upper_violation) {
                upper_violation = px[n] - up[n];
                upper_witness = {{"sample", i}, {"node", tr.nodes_at(s)[n]}};
            }
        }
    }
    suite.checks.push_back({"lower_bound", lower_violation <= tol, lower_violation, lower_witness});
    suite.checks.push_back({"upper_bound", upper_violation <= tol, upper_violation, upper_witness});

    // bound sanity on the first sample: scaling, translation, ordering
    const NodeVariable& x0 = samples.front();
    double scaling = 0.0, translation = 0.0, order = 0.0;
    {
        const NodeVariable m1 = ngd_upper(tr, x0, s, delta).value;
        const NodeVariable m2 = ngd_upper(tr, 2.0 * x0, s, delta).value;
        scaling = nv_max_abs(m2 - 2.0 * m1);

        const NodeVariable f = cond_expect(tr, x0, s);
        const NodeVariable m3 = ngd_upper(tr, x0 + lift(tr, f, t), s, delta).value;
        translation = nv_max_abs(m3 - (m1 + f));

        const NodeVariable lo = ngd_lower(tr, x0, s, delta).value;
        const NodeVariable mid = cond_expect(tr, x0, s);
        for (std::size_t n = 0; n < lo.size(); ++n) {
            order = std::max(order, lo[n] - mid[n]);
            order = std::max(order, mid[n] - m1[n]);
        }
    }
    suite.checks.push_back({"bound_scaling", scaling <= kArithmeticTol, scaling, {}});
    suite.checks.push_back({"bound_translation", translation <= kArithmeticTol, translation, {}});
    suite.checks.push_back({"bound_order", order <= kArithmeticTol, order, {}});
    return suite;
}

// ---- pricing-bounds equivalence --------------------------------------------------

bool prices_gains_nonpositively(const ScenarioTree& tree, const StrategySpace& space,
                                const DensityChange& q, int s, int t, double tol) {
    if (space.kind == StrategyKind::Zero) return true;
    for (int lv = s; lv < t; ++lv) {
        for (int id : tree.nodes_at(lv)) {
            for (int k = 0; k < tree.asset_dim(); ++k) {
                double e = 0.0;
                for (int c : tree.children(id))
                    e += tree.branch_prob(c) * q.ratio(c) *
                         (tree.assets(c)[k] - tree.assets(id)[k]);
                double lo = -kInf, up = kInf;
                if (space.kind == StrategyKind::Box) {
                    lo = space.lower[k];
                    up = space.upper[k];
                }
                if (std::isinf(up) && e > tol) return false;
                if (std::isinf(lo) && e < -tol) return false;
            }
        }
    }
    return true;
}

nlohmann::json TheoremABReport::to_json() const {
    nlohmann::json j = suite.to_json();
    j["a1_bounded"] = a1_bounded;
    j["a2_sandwich"] = a2_sandwich;
    j["b1_inclusion"] = b1_inclusion;
    j["b2_witness"] = b2_witness;
    j["agree"] = agree;
    return j;
}

TheoremABReport check_theorem_AB(const RiskMeasure& family, const StrategySpace& space, int s,
                                 int t, const DeltaSchedule& schedule,
                                 const std::vector<DensityChange>& probe_measures) {
    const ScenarioTree& tr = family.tree();
    TheoremABReport rep;
    rep.suite.name = "pricing_bounds_equivalence";
    const double delta = schedule.delta(s, t);

    const NodeVariable zero_t = NodeVariable::constant(tr, t, 0.0);
    const NodeVariable rho0 = family.rho(s, t, zero_t);

    // A1: the claimless hedging problem has a finite value
    double a1_violation = 0.0;
    try {
        const PriceResult base = price(family, space, s, t, zero_t);
        rep.a1_bounded = true;
        (void)base;
    } catch (const UnboundedRiskReduction&) {
        rep.a1_bounded = false;
        a1_violation = 1.0;
    }
    rep.suite.checks.push_back({"a1_inner_bounded", rep.a1_bounded, a1_violation, {}});

    // A2: sample prices inside the deviation corridor; the revealing claims
    // are the probes' own density deviations
    double a2_violation = 0.0;
    if (rep.a1_bounded) {
        std::vector<NodeVariable> claims;
        for (const auto& q : probe_measures) {
            NodeVariable dev = NodeVariable::constant(tr, t, 0.0);
            for (int id : tr.nodes_at(s)) {
                for (int leaf : tr.descendants(id, t)) {
                    double dens = 1.0;
                    int walk = leaf;
                    while (walk != id) {
                        dens *= q.ratio(walk);
                        walk = tr.parent(walk);
                    }
                    dev.values[tr.index_in_level(leaf)] = dens - 1.0;
                }
            }
            claims.push_back(std::move(dev));
        }
        claims.push_back(NodeVariable::constant(tr, t, 1.0));
        {
            NodeVariable a(t, std::vector<double>(tr.nodes_at(t).size(), 0.0));
            for (int id : tr.nodes_at(t)) a.values[tr.index_in_level(id)] = tr.assets(id)[0];
            claims.push_back(std::move(a));
        }
        for (const auto& x : claims) {
            const NodeVariable px = price(family, space, s, t, x).price;
            const NodeVariable up = ngd_upper(tr, x, s, delta).value;
            const NodeVariable lo = ngd_lower(tr, x, s, delta).value;
            for (std::size_t n = 0; n < px.size(); ++n) {
                a2_violation = std::max(a2_violation, px[n] - up[n]);
                a2_violation = std::max(a2_violation, lo[n] - px[n]);
            }
        }
        rep.a2_sandwich = a2_violation <= kOptimizerTol;
    }
    rep.suite.checks.push_back({"a2_sandwich", rep.a2_sandwich, a2_violation, {}});

    // B side: probes with finite normalized penalty must deviate within delta
    // whenever they price admissible gains nonpositively
    int finite_probes = 0, violators = 0;
    for (const auto& q0 : probe_measures) {
        const DensityChange q = restrict_density(tr, q0, s, t);
        const NodeVariable alpha = minimal_penalty(family, s, t, q);
        const NodeVariable alpha_norm = alpha + rho0;
        bool finite = true;
        for (double v : alpha_norm.values)
            if (!std::isfinite(v)) finite = false;
        if (!finite) continue;
        ++finite_probes;
        const bool in_i = prices_gains_nonpositively(tr, space, q, s, t);
        if (!in_i) continue; // outside the gain-pricing set, exempt
        const MembershipReport mem = ngd_membership(tr, q, schedule);
        const bool in_q = mem.member;
        if (in_i && in_q) {
            rep.b2_witness = true;
        } else {
            ++violators;
        }
    }
    rep.b1_inclusion = violators == 0;
    rep.suite.checks.push_back(
        {"b1_inclusion", rep.b1_inclusion, static_cast<double>(violators),
         nlohmann::json{{"finite_probes", finite_probes}}});
    rep.suite.checks.push_back({"b2_witness", rep.b2_witness, rep.b2_witness ? 0.0 : 1.0, {}});

    const bool a = rep.a1_bounded && rep.a2_sandwich;
    const bool b = rep.b1_inclusion && rep.b2_witness;
    rep.agree = (a == b);
    rep.suite.checks.push_back({"ab_agreement", rep.agree, rep.agree ? 0.0 : 1.0,
                                nlohmann::json{{"a_verdict", a}, {"b_verdict", b}}});
    return rep;
}

} // namespace fdrisk
