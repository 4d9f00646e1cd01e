#pragma once

#include <vector>
#include <string>
#include <cstdint>

#include "fdrisk/errors.hpp"

namespace fdrisk {

constexpr double kProbTol = 1e-12;  // construction-time probability tolerance

struct TreeNode {
    int id = 0;
    int parent = -1;            // -1 for the root
    int level = 0;
    double prob = 1.0;          // conditional branch probability given the parent
    std::vector<double> assets; // price vector observed at this node
};

// Finite scenario tree carrying the filtration. Node ids are dense 0..M-1,
// the root sits alone at level 0, every other node points at a parent one
// level up. Branch probabilities are conditional and strictly positive, and
// the children of each node sum to one. Each node carries the asset prices
// observed there; the dimension is constant across the tree.
class ScenarioTree {
public:
    explicit ScenarioTree(std::vector<TreeNode> nodes);

    int levels() const { return num_levels_; }            // count of time indices 0..N
    int last_level() const { return num_levels_ - 1; }
    int asset_dim() const { return asset_dim_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int root() const { return root_; }

    const TreeNode& node(int id) const { return nodes_.at(id); }
    const std::vector<int>& nodes_at(int level) const;
    const std::vector<int>& children(int id) const { return children_.at(id); }
    int parent(int id) const { return nodes_.at(id).parent; }
    int level_of(int id) const { return nodes_.at(id).level; }
    double branch_prob(int id) const { return nodes_.at(id).prob; }
    const std::vector<double>& assets(int id) const { return nodes_.at(id).assets; }

    // Position of a node inside nodes_at(level_of(id)).
    int index_in_level(int id) const { return index_in_level_.at(id); }
    // Unconditional probability of reaching the node from the root.
    double node_prob(int id) const { return node_prob_.at(id); }
    // Ancestor of the node at the given earlier level (the node itself if equal).
    int ancestor(int id, int level) const;
    // Descendants of the node at the given later level, in id order.
    std::vector<int> descendants(int id, int level) const;
    bool is_binary() const { return binary_; }

private:
    std::vector<TreeNode> nodes_;
    std::vector<std::vector<int>> level_nodes_;
    std::vector<std::vector<int>> children_;
    std::vector<int> index_in_level_;
    std::vector<double> node_prob_;
    int num_levels_ = 0;
    int asset_dim_ = 0;
    int root_ = 0;
    bool binary_ = true;
};

// A variable measurable at one level: one value per node of that level,
// stored in nodes_at(level) order.
struct NodeVariable {
    int level = 0;
    std::vector<double> values;

    NodeVariable() = default;
    NodeVariable(int level, std::vector<double> values)
        : level(level), values(std::move(values)) {}
    static NodeVariable constant(const ScenarioTree& tree, int level, double value);

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }
};

void require_shape(const ScenarioTree& tree, const NodeVariable& x, const std::string& where);

NodeVariable operator+(NodeVariable a, const NodeVariable& b);
NodeVariable operator-(NodeVariable a, const NodeVariable& b);
NodeVariable operator*(double s, NodeVariable a);
NodeVariable operator-(NodeVariable a);
NodeVariable nv_min(NodeVariable a, const NodeVariable& b);
NodeVariable nv_max(NodeVariable a, const NodeVariable& b);
double nv_max_abs(const NodeVariable& a);

// One variable per level s..N. Used for price paths and cumulative gains.
struct AdaptedProcess {
    int first_level = 0;
    std::vector<NodeVariable> path; // path[u - first_level] lives at level u

    const NodeVariable& at(int level) const;
};

// Asset prices of the tree as an adapted vector process, one component per dim.
std::vector<AdaptedProcess> asset_processes(const ScenarioTree& tree);

// Measure change on (s, t], stored as one-step conditional ratios indexed by
// child node id. Ratios at transitions outside (s, t] must be exactly 1. For
// each parent node with level in [s, t) the ratios average to one under the
// branch probabilities, so the change leaves F_s (and everything before s)
// untouched.
struct DensityChange {
    int s = 0;
    int t = 0;
    std::vector<double> ratios; // size node_count(), entry per non-root node

    DensityChange() = default;
    DensityChange(const ScenarioTree& tree, int s, int t, std::vector<double> ratios);
    static DensityChange identity(const ScenarioTree& tree, int s, int t);

    double ratio(int child_id) const { return ratios[child_id]; }
};

// E_Q[X | F_s] for X at level t >= s. Backward one-step sweep, so the result
// at a node reads only that node's subtree.
NodeVariable cond_expect(const ScenarioTree& tree, const NodeVariable& x,
                         const DensityChange& q, int s);
// Same under the reference measure.
NodeVariable cond_expect(const ScenarioTree& tree, const NodeVariable& x, int s);

// Node-wise extrema over a finite family of variables at a common level.
NodeVariable ess_sup_over(const std::vector<NodeVariable>& xs);
NodeVariable ess_inf_over(const std::vector<NodeVariable>& xs);

// Concatenate changes on (r, s] and (s, t] into one on (r, t].
DensityChange compose_densities(const ScenarioTree& tree, const DensityChange& q_rs,
                                const DensityChange& q_st);

// Ratios of q inside (s, t], identity elsewhere.
DensityChange restrict_density(const ScenarioTree& tree, const DensityChange& q, int s, int t);

// Conditional relative entropy of Q against the tree measure on (s, t], one
// value per s-node: sum over t-descendants of q log(q/p) with conditional
// path probabilities. Zero ratio on a positive-probability branch of the
// subtree makes the node's entry +infinity by convention (the change is not
// equivalent there), which is the flag callers test for.
NodeVariable relative_entropy(const ScenarioTree& tree, const DensityChange& q);

// View an earlier-level variable at a later level (value of the ancestor).
NodeVariable lift(const ScenarioTree& tree, const NodeVariable& x, int level);

// Indicator of a set of level-s nodes, as a variable at that level.
NodeVariable indicator(const ScenarioTree& tree, int level, const std::vector<int>& member_ids);

// Conditional variance and standard deviation under the tree measure.
NodeVariable cond_variance(const ScenarioTree& tree, const NodeVariable& x, int s);

// L^p norm of a level-t variable under the unconditional tree measure.
double lp_norm(const ScenarioTree& tree, const NodeVariable& x, double p);

} // namespace fdrisk
