#include <algorithm>
#include <cmath>
#include <limits>

#include "fdrisk/risk.hpp"

namespace fdrisk {

namespace {

Check make_check(const std::string& name, double violation, double tol,
                 nlohmann::json witness = {}) {
    Check c;
    c.check = name;
    c.max_violation = violation;
    c.pass = violation <= tol;
    c.witness = std::move(witness);
    return c;
}

// index pairs (i, j), i != j, capped so suites stay desk-sized
std::vector<std::pair<int, int>> sample_pairs(std::size_t n, std::size_t cap = 24) {
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < n && out.size() < cap; ++i)
        for (std::size_t j = 0; j < n && out.size() < cap; ++j)
            if (i != j) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

// deterministic level-s weight patterns in [0, 1] used for measurable mixing
std::vector<NodeVariable> weight_patterns(const ScenarioTree& tr, int s) {
    const std::size_t n = tr.nodes_at(s).size();
    std::vector<NodeVariable> out;
    NodeVariable a(s, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) a.values[i] = static_cast<double>(i % 4) / 3.0;
    out.push_back(std::move(a));
    NodeVariable b(s, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) b.values[i] = (i % 2 == 0) ? 1.0 : 0.0;
    out.push_back(std::move(b));
    out.push_back(NodeVariable::constant(tr, s, 0.5));
    return out;
}

// deterministic level-s node sets used for weak homogeneity
std::vector<std::vector<int>> node_sets(const ScenarioTree& tr, int s) {
    const auto& ids = tr.nodes_at(s);
    std::vector<std::vector<int>> out;
    out.push_back({ids.front()});
    std::vector<int> evens;
    for (std::size_t i = 0; i < ids.size(); i += 2) evens.push_back(ids[i]);
    out.push_back(std::move(evens));
    out.push_back(ids);
    return out;
}

} // namespace

CheckSuite check_axioms(const RiskMeasure& family, int s, int t,
                        const std::vector<NodeVariable>& samples, double tol) {
    const ScenarioTree& tr = family.tree();
    if (samples.size() < 2) throw ValidationError("check_axioms: need at least two sample claims");
    CheckSuite suite{"axioms", {}};

    std::vector<NodeVariable> rhos;
    rhos.reserve(samples.size());
    for (const auto& x : samples) rhos.push_back(family.rho(s, t, x));
    const auto pairs = sample_pairs(samples.size());

    double mono = 0.0;
    nlohmann::json mono_witness;
    for (const auto& [i, j] : pairs) {
        const NodeVariable upper = nv_max(samples[i], samples[j]);
        const NodeVariable r = family.rho(s, t, upper);
        for (std::size_t n = 0; n < r.size(); ++n) {
            const double v = r[n] - rhos[i][n];
            if (v > mono) {
                mono = v;
                mono_witness = {{"pair", {i, j}}, {"node", tr.nodes_at(s)[n]}};
            }
        }
    }
    suite.checks.push_back(make_check("monotonicity", mono, tol, mono_witness));

    double convexity = 0.0;
    for (const auto& [i, j] : pairs) {
        for (double lam : {0.25, 0.5, 0.75}) {
            const NodeVariable mix = lam * samples[i] + (1.0 - lam) * samples[j];
            const NodeVariable r = family.rho(s, t, mix);
            for (std::size_t n = 0; n < r.size(); ++n)
                convexity = std::max(convexity, r[n] - (lam * rhos[i][n] + (1.0 - lam) * rhos[j][n]));
        }
    }
    suite.checks.push_back(make_check("convexity", convexity, tol));

    double lam_convexity = 0.0;
    const auto lams = weight_patterns(tr, s);
    for (const auto& [i, j] : pairs) {
        for (const auto& lam_s : lams) {
            const NodeVariable lam_t = lift(tr, lam_s, t);
            NodeVariable mix = samples[j];
            for (std::size_t m = 0; m < mix.size(); ++m)
                mix.values[m] = lam_t[m] * samples[i][m] + (1.0 - lam_t[m]) * samples[j][m];
            const NodeVariable r = family.rho(s, t, mix);
            for (std::size_t n = 0; n < r.size(); ++n) {
                const double bound = lam_s[n] * rhos[i][n] + (1.0 - lam_s[n]) * rhos[j][n];
                lam_convexity = std::max(lam_convexity, r[n] - bound);
            }
        }
    }
    suite.checks.push_back(make_check("measurable_convexity", lam_convexity, tol));

    double translation = 0.0;
    for (const auto& [i, j] : pairs) {
        const NodeVariable f = cond_expect(tr, samples[j], s);
        const NodeVariable shifted = family.rho(s, t, samples[i] + lift(tr, f, t));
        for (std::size_t n = 0; n < shifted.size(); ++n)
            translation = std::max(translation, std::fabs(shifted[n] - (rhos[i][n] - f[n])));
    }
    suite.checks.push_back(make_check("translation_invariance", translation, tol));

    double homog = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (const auto& set : node_sets(tr, s)) {
            const NodeVariable ind_t = lift(tr, indicator(tr, s, set), t);
            NodeVariable masked = samples[i];
            for (std::size_t m = 0; m < masked.size(); ++m) masked.values[m] *= ind_t[m];
            const NodeVariable r = family.rho(s, t, masked);
            for (int id : set) {
                const std::size_t n = static_cast<std::size_t>(tr.index_in_level(id));
                homog = std::max(homog, std::fabs(r[n] - rhos[i][n]));
            }
        }
    }
    suite.checks.push_back(make_check("weak_homogeneity", homog, tol));

    return suite;
}

CheckSuite check_strong_tc(const RiskMeasure& family, int r, int s, int t,
                           const std::vector<NodeVariable>& samples, double tol) {
    CheckSuite suite{"strong_tc", {}};
    double worst = 0.0;
    nlohmann::json witness;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const NodeVariable direct = family.rho(r, t, samples[i]);
        const NodeVariable composed = family.rho(r, s, -family.rho(s, t, samples[i]));
        const double v = nv_max_abs(direct - composed);
        if (v > worst) {
            worst = v;
            witness = {{"sample", i}};
        }
    }
    suite.checks.push_back(make_check("recursive_composition", worst, tol, witness));
    return suite;
}

CheckSuite check_tc_decomposition(const RiskMeasure& family, int r, int s, int t,
                                  const std::vector<NodeVariable>& samples, double tol) {
    const ScenarioTree& tr = family.tree();
    if (samples.size() < 2)
        throw ValidationError("check_tc_decomposition: need at least two sample claims");
    CheckSuite suite{"tc_decomposition", {}};

    const NodeVariable zero_t = NodeVariable::constant(tr, t, 0.0);
    const NodeVariable rho_st0 = family.rho(s, t, zero_t);

    // (i) order consistency through matched pairs: align rho_st by a level-s
    // shift, then the later evaluations must align too
    double tc = 0.0;
    const auto pairs = sample_pairs(samples.size(), 12);
    for (const auto& [i, j] : pairs) {
        const NodeVariable ri = family.rho(s, t, samples[i]);
        const NodeVariable rj = family.rho(s, t, samples[j]);
        const NodeVariable shift = rj - ri; // F_s-measurable
        const NodeVariable matched = samples[j] + lift(tr, shift, t);
        // rho_st(matched) = rho_st(x_i) up to arithmetic noise
        const NodeVariable a = family.rho(r, t, matched);
        const NodeVariable b = family.rho(r, t, samples[i]);
        tc = std::max(tc, nv_max_abs(a - b));
        // one-sided version: lowering the intermediate risk must not raise the early one
        const NodeVariable worse = matched + lift(tr, NodeVariable::constant(tr, s, 1.0), t);
        const NodeVariable c = family.rho(r, t, worse);
        for (std::size_t n = 0; n < c.size(); ++n) tc = std::max(tc, c[n] - b[n]);
    }
    suite.checks.push_back(make_check("time_consistency", tc, tol));

    // (ii) rho_rt(y) = rho_rs(y - rho_st(0)) for level-s measurable y
    double shifted_restriction = 0.0;
    for (const auto& x : samples) {
        const NodeVariable y = cond_expect(tr, x, s);
        const NodeVariable lhs = family.rho(r, t, lift(tr, y, t));
        const NodeVariable rhs = family.rho(r, s, y - rho_st0);
        shifted_restriction = std::max(shifted_restriction, nv_max_abs(lhs - rhs));
    }
    suite.checks.push_back(make_check("shifted_restriction", shifted_restriction, tol));

    // (iii) rho_rt(y) = rho_rs(y), the normalized-family form
    double restriction = 0.0;
    for (const auto& x : samples) {
        const NodeVariable y = cond_expect(tr, x, s);
        const NodeVariable lhs = family.rho(r, t, lift(tr, y, t));
        const NodeVariable rhs = family.rho(r, s, y);
        restriction = std::max(restriction, nv_max_abs(lhs - rhs));
    }
    Check c = make_check("restriction", restriction, tol);
    c.witness = {{"rho_st0_max_abs", nv_max_abs(rho_st0)}};
    suite.checks.push_back(std::move(c));

    return suite;
}

nlohmann::json DominationReport::to_json() const {
    return nlohmann::json{{"K", K},
                          {"C", C},
                          {"p", p},
                          {"sensitive", sensitive},
                          {"witness_is_reference", witness_is_reference}};
}

DominationReport check_domination_sensitivity(const RiskMeasure& family, double p) {
    const ScenarioTree& tr = family.tree();
    const int t = tr.last_level();
    DominationReport rep;
    rep.p = p;

    const NodeVariable zero = NodeVariable::constant(tr, t, 0.0);
    rep.C = family.rho(0, t, zero).values[tr.index_in_level(tr.root())];

    std::vector<NodeVariable> probes;
    probes.push_back(NodeVariable::constant(tr, t, 1.0));
    probes.push_back(NodeVariable::constant(tr, t, -1.0));
    probes.push_back(NodeVariable::constant(tr, t, 5.0));
    probes.push_back(NodeVariable::constant(tr, t, -5.0));
    {
        NodeVariable alt(t, std::vector<double>(tr.nodes_at(t).size(), 0.0));
        for (std::size_t i = 0; i < alt.size(); ++i) alt.values[i] = (i % 2 == 0) ? 1.0 : -1.0;
        probes.push_back(alt);
        probes.push_back(2.5 * alt);
    }
    for (int k = 0; k < tr.asset_dim(); ++k) {
        NodeVariable a(t, std::vector<double>(tr.nodes_at(t).size(), 0.0));
        for (int id : tr.nodes_at(t)) a.values[tr.index_in_level(id)] = tr.assets(id)[k];
        probes.push_back(a);
        probes.push_back(-1.0 * a);
    }

    double K = 0.0;
    for (const auto& x : probes) {
        const double nrm = lp_norm(tr, x, p);
        if (nrm < 1e-14) continue;
        const double r = family.rho(0, t, x).values[tr.index_in_level(tr.root())];
        K = std::max(K, (r - rep.C) / nrm);
    }
    rep.K = K;

    // sensitivity: the reference measure first, then deterministic equivalent tilts
    std::vector<DensityChange> candidates;
    candidates.push_back(DensityChange::identity(tr, 0, t));
    for (double bias : {0.25, -0.25}) {
        std::vector<double> ratios(tr.node_count(), 1.0);
        for (int lv = 0; lv < t; ++lv) {
            for (int id : tr.nodes_at(lv)) {
                const auto& kids = tr.children(id);
                double mass = 0.0;
                std::vector<double> raw(kids.size());
                for (std::size_t c = 0; c < kids.size(); ++c) {
                    raw[c] = 1.0 + bias * (c % 2 == 0 ? 1.0 : -1.0);
                    mass += tr.branch_prob(kids[c]) * raw[c];
                }
                for (std::size_t c = 0; c < kids.size(); ++c) ratios[kids[c]] = raw[c] / mass;
            }
        }
        candidates.emplace_back(tr, 0, t, std::move(ratios));
    }

    ConjugateOptions opts;
    opts.max_iters = 20000;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const NodeVariable alpha = minimal_penalty(family, 0, t, candidates[c], opts);
        if (std::isfinite(alpha.values[tr.index_in_level(tr.root())])) {
            rep.sensitive = true;
            rep.witness_is_reference = (c == 0);
            rep.witness = candidates[c];
            break;
        }
    }
    return rep;
}

} // namespace fdrisk
