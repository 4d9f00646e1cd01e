#include <algorithm>
#include <cmath>
#include <limits>

#include "fdrisk/risk.hpp"

namespace fdrisk {

namespace {

// conditional path probabilities of q from the node down to level t
std::vector<double> path_probs(const ScenarioTree& tr, const DensityChange& q, int node, int t) {
    std::vector<int> frontier{node};
    std::vector<double> mass{1.0};
    for (int lv = tr.level_of(node); lv < t; ++lv) {
        std::vector<int> nf;
        std::vector<double> nm;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            for (int c : tr.children(frontier[i])) {
                nf.push_back(c);
                nm.push_back(mass[i] * tr.branch_prob(c) * q.ratio(c));
            }
        }
        frontier = std::move(nf);
        mass = std::move(nm);
    }
    return mass;
}

struct NodeObjective {
    const RiskMeasure& family;
    const ScenarioTree& tr;
    int s, t, node, row;
    std::vector<int> leaves;
    std::vector<int> cols;
    std::vector<double> q;

    double value(const std::vector<double>& xloc, NodeVariable& scratch) const {
        for (std::size_t j = 0; j < cols.size(); ++j) scratch.values[cols[j]] = xloc[j];
        double acc = 0.0;
        for (std::size_t j = 0; j < cols.size(); ++j) acc -= q[j] * xloc[j];
        return acc - family.rho(s, t, scratch).values[row];
    }

    std::vector<double> gradient(const std::vector<double>& xloc, NodeVariable& scratch,
                                 int node_index_in_level) const {
        for (std::size_t j = 0; j < cols.size(); ++j) scratch.values[cols[j]] = xloc[j];
        const auto weights = family.pricing_weights(s, t, scratch);
        const auto& w = weights[node_index_in_level];
        std::vector<double> g(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) g[j] = -q[j] + w[j];
        return g;
    }
};

double norm2(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double norm_inf(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc = std::max(acc, std::fabs(x));
    return acc;
}

// true when the objective still climbs far along the ray, i.e. the conjugate
// recedes in direction v
bool ray_recedes(const NodeObjective& obj, const std::vector<double>& x,
                 const std::vector<double>& v, NodeVariable& scratch) {
    const double tau1 = 1e6, tau2 = 2e6;
    std::vector<double> a(x), b(x);
    for (std::size_t j = 0; j < x.size(); ++j) {
        a[j] += tau1 * v[j];
        b[j] += tau2 * v[j];
    }
    const double slope = (obj.value(b, scratch) - obj.value(a, scratch)) / (tau2 - tau1);
    return slope > 1e-12;
}

} // namespace

NodeVariable conjugate_penalty(const RiskMeasure& family, int s, int t, const DensityChange& q,
                               const ConjugateOptions& opts, ConjugateDiagnostics* diag) {
    const ScenarioTree& tr = family.tree();
    const double inf = std::numeric_limits<double>::infinity();
    NodeVariable out(s, std::vector<double>(tr.nodes_at(s).size(), 0.0));
    ConjugateDiagnostics agg;

    for (int id : tr.nodes_at(s)) {
        NodeObjective obj{family, tr, s, t, id, tr.index_in_level(id), {}, {}, {}};
        obj.leaves = tr.descendants(id, t);
        obj.cols.reserve(obj.leaves.size());
        for (int leaf : obj.leaves) obj.cols.push_back(tr.index_in_level(leaf));
        obj.q = path_probs(tr, q, id, t);

        NodeVariable scratch = NodeVariable::constant(tr, t, 0.0);
        std::vector<double> x(obj.cols.size(), 0.0);
        double f = obj.value(x, scratch);
        std::vector<double> g = obj.gradient(x, scratch, obj.row);

        // curvature probe for the nominal step
        double curvature = 1.0;
        {
            std::vector<double> xp(x);
            for (std::size_t j = 0; j < xp.size(); ++j) xp[j] += (j % 2 == 0 ? 1e-3 : -1e-3);
            const auto gp = obj.gradient(xp, scratch, obj.row);
            double dg = 0.0;
            for (std::size_t j = 0; j < g.size(); ++j) dg += (gp[j] - g[j]) * (gp[j] - g[j]);
            curvature = std::sqrt(dg) / (1e-3 * std::sqrt(static_cast<double>(g.size())));
        }
        double step = opts.step_scale / std::max(curvature, 1e-12);
        step = std::min(step, 1e8);

        bool unbounded = false;
        int iter = 0;
        for (; iter < opts.max_iters; ++iter) {
            if (norm_inf(g) <= opts.grad_tol) break;
            if (f > opts.ceiling) {
                unbounded = true;
                break;
            }
            if (iter % 512 == 0 && iter > 0) {
                const double gn = norm2(g);
                std::vector<double> v(g);
                for (double& c : v) c /= gn;
                if (ray_recedes(obj, x, v, scratch)) {
                    unbounded = true;
                    break;
                }
            }
            // backtracking around the nominal step, expanding on clean accepts
            bool accepted = false;
            double eta = step;
            const double gnorm_sq = [&] {
                double acc = 0.0;
                for (double c : g) acc += c * c;
                return acc;
            }();
            for (int bt = 0; bt < 60; ++bt) {
                std::vector<double> xn(x);
                for (std::size_t j = 0; j < xn.size(); ++j) xn[j] += eta * g[j];
                const double fn = obj.value(xn, scratch);
                if (fn >= f + 1e-4 * eta * gnorm_sq) {
                    x = std::move(xn);
                    f = fn;
                    accepted = true;
                    if (bt == 0) step = std::min(step * 1.6, 1e9);
                    else step = eta;
                    break;
                }
                eta *= 0.5;
            }
            if (!accepted) break;
            g = obj.gradient(x, scratch, obj.row);
        }

        out.values[obj.row] = unbounded ? inf : f;
        agg.iterations = std::max(agg.iterations, iter);
        agg.final_gradient_norm = std::max(agg.final_gradient_norm, norm_inf(g));
        agg.unbounded = agg.unbounded || unbounded;
    }

    if (diag) *diag = agg;
    return out;
}

NodeVariable minimal_penalty(const RiskMeasure& family, int s, int t, const DensityChange& q,
                             const ConjugateOptions& opts) {
    if (const auto* ent = dynamic_cast<const EntropicFamily*>(&family)) {
        const DensityChange q_st = restrict_density(family.tree(), q, s, t);
        return (1.0 / ent->gamma()) * relative_entropy(family.tree(), q_st);
    }
    return conjugate_penalty(family, s, t, q, opts);
}

} // namespace fdrisk
