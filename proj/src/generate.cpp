#include "fdrisk/generate.hpp"

#include <cmath>

#include "fdrisk/errors.hpp"

namespace fdrisk {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

int Rng::int_range(int lo, int hi) {
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

ScenarioTree random_tree(Rng& rng, const TreeShape& shape) {
    if (shape.levels < 1 || shape.min_branch < 2 || shape.max_branch < shape.min_branch ||
        shape.asset_dim < 1)
        throw ValidationError("random_tree: bad shape");

    std::vector<TreeNode> nodes;
    TreeNode root;
    root.id = 0;
    root.parent = -1;
    root.level = 0;
    root.prob = 1.0;
    root.assets.assign(static_cast<std::size_t>(shape.asset_dim), 0.0);
    nodes.push_back(root);

    std::vector<int> frontier{0};
    for (int lv = 1; lv < shape.levels; ++lv) {
        std::vector<int> next_frontier;
        for (int pid : frontier) {
            const int branches = rng.int_range(shape.min_branch, shape.max_branch);
            std::vector<double> raw(static_cast<std::size_t>(branches));
            double total = 0.0;
            for (auto& r : raw) {
                r = rng.uniform(0.2, 1.0);
                total += r;
            }
            for (int b = 0; b < branches; ++b) {
                TreeNode n;
                n.id = static_cast<int>(nodes.size());
                n.parent = pid;
                n.level = lv;
                n.prob = raw[static_cast<std::size_t>(b)] / total;
                n.assets = nodes[static_cast<std::size_t>(pid)].assets;
                for (auto& a : n.assets) a += rng.normal(0.0, shape.asset_step);
                next_frontier.push_back(n.id);
                nodes.push_back(std::move(n));
            }
        }
        frontier = std::move(next_frontier);
    }
    return ScenarioTree(std::move(nodes));
}

ScenarioTree symmetric_walk_tree(int levels, double sigma, double dt, double spot, double p) {
    if (levels < 2) throw ValidationError("symmetric_walk_tree: need at least two levels");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("symmetric_walk_tree: p outside (0, 1)");
    const double step = sigma * std::sqrt(dt);
    std::vector<TreeNode> nodes;
    nodes.push_back({0, -1, 0, 1.0, {spot}});
    std::vector<int> frontier{0};
    for (int lv = 1; lv < levels; ++lv) {
        std::vector<int> nf;
        for (int pid : frontier) {
            const double base = nodes[static_cast<std::size_t>(pid)].assets[0];
            for (int b = 0; b < 2; ++b) {
                TreeNode n;
                n.id = static_cast<int>(nodes.size());
                n.parent = pid;
                n.level = lv;
                n.prob = b == 0 ? p : 1.0 - p;
                n.assets = {base + (b == 0 ? step : -step)};
                nf.push_back(n.id);
                nodes.push_back(std::move(n));
            }
        }
        frontier = std::move(nf);
    }
    return ScenarioTree(std::move(nodes));
}

ScenarioTree binomial_tree(int levels, double spot, double u, double d, double p) {
    if (levels < 2) throw ValidationError("binomial_tree: need at least two levels");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("binomial_tree: p outside (0, 1)");
    if (!(u > 0.0) || !(d > 0.0)) throw ValidationError("binomial_tree: factors must be positive");
    std::vector<TreeNode> nodes;
    nodes.push_back({0, -1, 0, 1.0, {spot}});
    std::vector<int> frontier{0};
    for (int lv = 1; lv < levels; ++lv) {
        std::vector<int> nf;
        for (int pid : frontier) {
            const double base = nodes[static_cast<std::size_t>(pid)].assets[0];
            for (int b = 0; b < 2; ++b) {
                TreeNode n;
                n.id = static_cast<int>(nodes.size());
                n.parent = pid;
                n.level = lv;
                n.prob = b == 0 ? p : 1.0 - p;
                n.assets = {base * (b == 0 ? u : d)};
                nf.push_back(n.id);
                nodes.push_back(std::move(n));
            }
        }
        frontier = std::move(nf);
    }
    return ScenarioTree(std::move(nodes));
}

NodeVariable random_claim(Rng& rng, const ScenarioTree& tree, int level, double scale) {
    NodeVariable x = NodeVariable::constant(tree, level, 0.0);
    for (auto& v : x.values) v = rng.normal(0.0, scale);
    return x;
}

DensityChange random_density(Rng& rng, const ScenarioTree& tree, int s, int t, double spread) {
    DensityChange q = DensityChange::identity(tree, s, t);
    for (int lv = s; lv < t; ++lv) {
        for (int id : tree.nodes_at(lv)) {
            const auto kids = tree.children(id);
            std::vector<double> raw(kids.size());
            double mean = 0.0;
            for (std::size_t i = 0; i < kids.size(); ++i) {
                raw[i] = std::exp(spread * rng.normal());
                mean += tree.branch_prob(kids[i]) * raw[i];
            }
            for (std::size_t i = 0; i < kids.size(); ++i)
                q.ratios[static_cast<std::size_t>(kids[i])] = raw[i] / mean;
        }
    }
    return q;
}

std::vector<DualGenerator> random_generators(Rng& rng, const ScenarioTree& tree, int count,
                                             double spread, double penalty_scale,
                                             bool include_identity) {
    if (count < 1) throw ValidationError("random_generators: need at least one kernel");
    std::vector<DualGenerator> menu;
    const std::size_t n = static_cast<std::size_t>(tree.node_count());
    if (include_identity) {
        DualGenerator id;
        id.ratios.assign(n, 1.0);
        id.penalty.assign(n, 0.0);
        menu.push_back(std::move(id));
    }
    while (static_cast<int>(menu.size()) < count) {
        DualGenerator gen;
        gen.ratios.assign(n, 1.0);
        gen.penalty.assign(n, 0.0);
        for (int lv = 0; lv < tree.last_level(); ++lv) {
            for (int id : tree.nodes_at(lv)) {
                const auto kids = tree.children(id);
                std::vector<double> raw(kids.size());
                double mean = 0.0;
                for (std::size_t i = 0; i < kids.size(); ++i) {
                    raw[i] = std::exp(spread * rng.normal());
                    mean += tree.branch_prob(kids[i]) * raw[i];
                }
                for (std::size_t i = 0; i < kids.size(); ++i)
                    gen.ratios[static_cast<std::size_t>(kids[i])] = raw[i] / mean;
                gen.penalty[static_cast<std::size_t>(id)] = rng.uniform(0.0, penalty_scale);
            }
        }
        menu.push_back(std::move(gen));
    }
    return menu;
}

} // namespace fdrisk
