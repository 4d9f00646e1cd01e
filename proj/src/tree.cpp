#include "fdrisk/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdrisk {

ScenarioTree::ScenarioTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
    const int m = static_cast<int>(nodes_.size());
    if (m == 0) throw ValidationError("tree: empty node list");
    for (int i = 0; i < m; ++i) {
        if (nodes_[i].id != i)
            throw ValidationError("tree: node ids must be dense 0..M-1 and sorted");
    }

    int max_level = 0;
    for (const auto& n : nodes_) {
        if (n.level < 0) throw ValidationError("tree: negative level");
        max_level = std::max(max_level, n.level);
    }
    num_levels_ = max_level + 1;

    level_nodes_.assign(num_levels_, {});
    children_.assign(m, {});
    index_in_level_.assign(m, 0);
    node_prob_.assign(m, 0.0);

    int roots = 0;
    for (const auto& n : nodes_) {
        if (n.parent < 0) {
            ++roots;
            root_ = n.id;
            if (n.level != 0) throw ValidationError("tree: root must sit at level 0");
        } else {
            if (n.parent >= m)
                throw ValidationError("tree: parent id out of range");
            if (nodes_[n.parent].level != n.level - 1)
                throw ValidationError("tree: parent of a level-k node must sit at level k-1");
            children_[n.parent].push_back(n.id);
        }
        index_in_level_[n.id] = static_cast<int>(level_nodes_[n.level].size());
        level_nodes_[n.level].push_back(n.id);
    }
    if (roots != 1) throw ValidationError("tree: exactly one root required");

    asset_dim_ = static_cast<int>(nodes_[root_].assets.size());
    if (asset_dim_ == 0) throw ValidationError("tree: nodes must carry at least one asset price");
    for (const auto& n : nodes_) {
        if (static_cast<int>(n.assets.size()) != asset_dim_)
            throw ValidationError("tree: asset dimension must be constant across nodes");
        for (double a : n.assets)
            if (!std::isfinite(a)) throw ValidationError("tree: non-finite asset price");
    }

    for (int lv = 0; lv < num_levels_; ++lv)
        if (level_nodes_[lv].empty())
            throw ValidationError("tree: level " + std::to_string(lv) + " has no nodes");

    if (std::fabs(nodes_[root_].prob - 1.0) > kProbTol)
        throw ValidationError("tree: root probability must be 1");
    node_prob_[root_] = 1.0;

    for (int lv = 0; lv + 1 < num_levels_; ++lv) {
        for (int id : level_nodes_[lv]) {
            const auto& kids = children_[id];
            if (kids.empty())
                throw ValidationError("tree: node " + std::to_string(id) +
                                      " has no children before the last level");
            if (kids.size() != 2) binary_ = false;
            double mass = 0.0;
            for (int c : kids) {
                const double p = nodes_[c].prob;
                if (!(p > 0.0))
                    throw ValidationError("tree: zero or negative branch probability at node " +
                                          std::to_string(c));
                mass += p;
            }
            if (std::fabs(mass - 1.0) > kProbTol)
                throw ValidationError("tree: branch probabilities of node " + std::to_string(id) +
                                      " sum to " + std::to_string(mass));
        }
    }
    for (int id : level_nodes_[num_levels_ - 1])
        if (!children_[id].empty())
            throw ValidationError("tree: last-level node has children");

    for (int lv = 1; lv < num_levels_; ++lv)
        for (int id : level_nodes_[lv])
            node_prob_[id] = node_prob_[nodes_[id].parent] * nodes_[id].prob;
}

const std::vector<int>& ScenarioTree::nodes_at(int level) const {
    if (level < 0 || level >= num_levels_)
        throw LevelMismatchError("nodes_at: level " + std::to_string(level) + " outside 0.." +
                                 std::to_string(num_levels_ - 1));
    return level_nodes_[level];
}

int ScenarioTree::ancestor(int id, int level) const {
    int lv = level_of(id);
    if (level > lv) throw LevelMismatchError("ancestor: target level below the node");
    while (lv > level) {
        id = nodes_[id].parent;
        --lv;
    }
    return id;
}

std::vector<int> ScenarioTree::descendants(int id, int level) const {
    if (level < level_of(id)) throw LevelMismatchError("descendants: target level above the node");
    std::vector<int> current{id};
    for (int lv = level_of(id); lv < level; ++lv) {
        std::vector<int> next;
        for (int n : current)
            next.insert(next.end(), children_[n].begin(), children_[n].end());
        current = std::move(next);
    }
    return current;
}

NodeVariable NodeVariable::constant(const ScenarioTree& tree, int level, double value) {
    return NodeVariable(level, std::vector<double>(tree.nodes_at(level).size(), value));
}

void require_shape(const ScenarioTree& tree, const NodeVariable& x, const std::string& where) {
    if (x.level < 0 || x.level >= tree.levels())
        throw LevelMismatchError(where + ": variable level " + std::to_string(x.level) +
                                 " outside the tree");
    if (x.values.size() != tree.nodes_at(x.level).size())
        throw LevelMismatchError(where + ": variable has " + std::to_string(x.values.size()) +
                                 " values, level " + std::to_string(x.level) + " has " +
                                 std::to_string(tree.nodes_at(x.level).size()) + " nodes");
}

static void require_same_level(const NodeVariable& a, const NodeVariable& b, const char* op) {
    if (a.level != b.level || a.values.size() != b.values.size())
        throw LevelMismatchError(std::string(op) + ": operands live at different levels");
}

NodeVariable operator+(NodeVariable a, const NodeVariable& b) {
    require_same_level(a, b, "operator+");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
    return a;
}

NodeVariable operator-(NodeVariable a, const NodeVariable& b) {
    require_same_level(a, b, "operator-");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] -= b.values[i];
    return a;
}

NodeVariable operator*(double s, NodeVariable a) {
    for (double& v : a.values) v *= s;
    return a;
}

NodeVariable operator-(NodeVariable a) {
    for (double& v : a.values) v = -v;
    return a;
}

NodeVariable nv_min(NodeVariable a, const NodeVariable& b) {
    require_same_level(a, b, "nv_min");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = std::min(a.values[i], b.values[i]);
    return a;
}

NodeVariable nv_max(NodeVariable a, const NodeVariable& b) {
    require_same_level(a, b, "nv_max");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] = std::max(a.values[i], b.values[i]);
    return a;
}

double nv_max_abs(const NodeVariable& a) {
    double m = 0.0;
    for (double v : a.values) m = std::max(m, std::fabs(v));
    return m;
}

const NodeVariable& AdaptedProcess::at(int level) const {
    const int k = level - first_level;
    if (k < 0 || k >= static_cast<int>(path.size()))
        throw LevelMismatchError("AdaptedProcess::at: level " + std::to_string(level) +
                                 " outside the process range");
    return path[k];
}

std::vector<AdaptedProcess> asset_processes(const ScenarioTree& tree) {
    std::vector<AdaptedProcess> out(tree.asset_dim());
    for (int k = 0; k < tree.asset_dim(); ++k) {
        out[k].first_level = 0;
        for (int lv = 0; lv < tree.levels(); ++lv) {
            NodeVariable x(lv, {});
            x.values.reserve(tree.nodes_at(lv).size());
            for (int id : tree.nodes_at(lv)) x.values.push_back(tree.assets(id)[k]);
            out[k].path.push_back(std::move(x));
        }
    }
    return out;
}

DensityChange::DensityChange(const ScenarioTree& tree, int s_, int t_, std::vector<double> ratios_)
    : s(s_), t(t_), ratios(std::move(ratios_)) {
    if (s < 0 || t > tree.last_level() || s > t)
        throw ValidationError("density: domain (" + std::to_string(s) + ", " + std::to_string(t) +
                              "] outside the tree");
    if (ratios.size() != static_cast<std::size_t>(tree.node_count()))
        throw ValidationError("density: one ratio per node required (1 outside the domain)");
    for (int id = 0; id < tree.node_count(); ++id) {
        if (id == tree.root()) continue;
        const int lv = tree.level_of(id);
        const double r = ratios[id];
        if (!std::isfinite(r) || r < 0.0)
            throw ValidationError("density: ratio at node " + std::to_string(id) +
                                  " must be finite and nonnegative");
        if ((lv <= s || lv > t) && std::fabs(r - 1.0) > kProbTol)
            throw ValidationError("density: ratio at node " + std::to_string(id) +
                                  " lies outside (s, t] and must be 1");
    }
    for (int lv = s; lv < t; ++lv) {
        for (int id : tree.nodes_at(lv)) {
            double mass = 0.0;
            for (int c : tree.children(id)) mass += tree.branch_prob(c) * ratios[c];
            if (std::fabs(mass - 1.0) > kProbTol)
                throw ValidationError("density: conditional ratios at node " + std::to_string(id) +
                                      " average to " + std::to_string(mass) + ", expected 1");
        }
    }
}

DensityChange DensityChange::identity(const ScenarioTree& tree, int s, int t) {
    return DensityChange(tree, s, t, std::vector<double>(tree.node_count(), 1.0));
}

NodeVariable cond_expect(const ScenarioTree& tree, const NodeVariable& x,
                         const DensityChange& q, int s) {
    require_shape(tree, x, "cond_expect");
    const int t = x.level;
    if (s > t) throw LevelMismatchError("cond_expect: s must not exceed the variable level");
    NodeVariable w = x;
    for (int lv = t - 1; lv >= s; --lv) {
        NodeVariable next(lv, std::vector<double>(tree.nodes_at(lv).size(), 0.0));
        for (int id : tree.nodes_at(lv)) {
            double acc = 0.0;
            for (int c : tree.children(id))
                acc += tree.branch_prob(c) * q.ratio(c) * w.values[tree.index_in_level(c)];
            next.values[tree.index_in_level(id)] = acc;
        }
        w = std::move(next);
    }
    return w;
}

NodeVariable cond_expect(const ScenarioTree& tree, const NodeVariable& x, int s) {
    return cond_expect(tree, x, DensityChange::identity(tree, 0, tree.last_level()), s);
}

NodeVariable ess_sup_over(const std::vector<NodeVariable>& xs) {
    if (xs.empty()) throw ValidationError("ess_sup_over: empty family");
    NodeVariable out = xs.front();
    for (std::size_t k = 1; k < xs.size(); ++k) out = nv_max(std::move(out), xs[k]);
    return out;
}

NodeVariable ess_inf_over(const std::vector<NodeVariable>& xs) {
    if (xs.empty()) throw ValidationError("ess_inf_over: empty family");
    NodeVariable out = xs.front();
    for (std::size_t k = 1; k < xs.size(); ++k) out = nv_min(std::move(out), xs[k]);
    return out;
}

DensityChange compose_densities(const ScenarioTree& tree, const DensityChange& q_rs,
                                const DensityChange& q_st) {
    if (q_rs.t != q_st.s)
        throw ValidationError("compose_densities: domains (r, s] and (s, t] must abut");
    std::vector<double> ratios(tree.node_count(), 1.0);
    for (int id = 0; id < tree.node_count(); ++id) {
        if (id == tree.root()) continue;
        const int lv = tree.level_of(id);
        if (lv > q_rs.s && lv <= q_rs.t) ratios[id] = q_rs.ratio(id);
        else if (lv > q_st.s && lv <= q_st.t) ratios[id] = q_st.ratio(id);
    }
    return DensityChange(tree, q_rs.s, q_st.t, std::move(ratios));
}

DensityChange restrict_density(const ScenarioTree& tree, const DensityChange& q, int s, int t) {
    std::vector<double> ratios(tree.node_count(), 1.0);
    for (int id = 0; id < tree.node_count(); ++id) {
        if (id == tree.root()) continue;
        const int lv = tree.level_of(id);
        if (lv > s && lv <= t) ratios[id] = q.ratio(id);
    }
    return DensityChange(tree, s, t, std::move(ratios));
}

NodeVariable relative_entropy(const ScenarioTree& tree, const DensityChange& q) {
    const double inf = std::numeric_limits<double>::infinity();
    // chain rule: H(node) = sum_c p_c r_c (log r_c + H(child)), H = 0 at level t
    NodeVariable h = NodeVariable::constant(tree, q.t, 0.0);
    for (int lv = q.t - 1; lv >= q.s; --lv) {
        NodeVariable next(lv, std::vector<double>(tree.nodes_at(lv).size(), 0.0));
        for (int id : tree.nodes_at(lv)) {
            double acc = 0.0;
            bool vanishing = false;
            for (int c : tree.children(id)) {
                const double r = q.ratio(c);
                const double hc = h.values[tree.index_in_level(c)];
                if (r == 0.0) {
                    vanishing = true;
                    continue;
                }
                if (std::isinf(hc)) {
                    acc = inf;
                    break;
                }
                acc += tree.branch_prob(c) * r * (std::log(r) + hc);
            }
            next.values[tree.index_in_level(id)] = vanishing ? inf : acc;
        }
        h = std::move(next);
    }
    return h;
}

NodeVariable lift(const ScenarioTree& tree, const NodeVariable& x, int level) {
    require_shape(tree, x, "lift");
    if (level < x.level) throw LevelMismatchError("lift: target level above the variable");
    NodeVariable out(level, std::vector<double>(tree.nodes_at(level).size(), 0.0));
    for (int id : tree.nodes_at(level)) {
        const int anc = tree.ancestor(id, x.level);
        out.values[tree.index_in_level(id)] = x.values[tree.index_in_level(anc)];
    }
    return out;
}

NodeVariable indicator(const ScenarioTree& tree, int level, const std::vector<int>& member_ids) {
    NodeVariable out = NodeVariable::constant(tree, level, 0.0);
    for (int id : member_ids) {
        if (tree.level_of(id) != level)
            throw LevelMismatchError("indicator: node " + std::to_string(id) + " not at the level");
        out.values[tree.index_in_level(id)] = 1.0;
    }
    return out;
}

NodeVariable cond_variance(const ScenarioTree& tree, const NodeVariable& x, int s) {
    NodeVariable mean = cond_expect(tree, x, s);
    NodeVariable mean_t = lift(tree, mean, x.level);
    NodeVariable dev = x - mean_t;
    for (double& v : dev.values) v *= v;
    return cond_expect(tree, dev, s);
}

double lp_norm(const ScenarioTree& tree, const NodeVariable& x, double p) {
    require_shape(tree, x, "lp_norm");
    double acc = 0.0;
    for (int id : tree.nodes_at(x.level))
        acc += tree.node_prob(id) * std::pow(std::fabs(x.values[tree.index_in_level(id)]), p);
    return std::pow(acc, 1.0 / p);
}

} // namespace fdrisk
