#pragma once

// Seeded generators for trees, claims, densities and kernel menus. The
// generator is xoshiro256** seeded through splitmix64, so streams are
// reproducible across platforms and standard library versions.

#include <cstdint>
#include <vector>

#include "fdrisk/risk.hpp"
#include "fdrisk/tree.hpp"

namespace fdrisk {

class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();
    double normal(double mean, double sd);
    int int_range(int lo, int hi);         // inclusive

  private:
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct TreeShape {
    int levels = 3;
    int min_branch = 2;
    int max_branch = 3;
    int asset_dim = 1;
    double asset_step = 0.3;
};

ScenarioTree random_tree(Rng& rng, const TreeShape& shape = {});

// binary tree, both branches probability p and 1-p, single asset moving by
// +/- sigma*sqrt(dt) with the up branch first
ScenarioTree symmetric_walk_tree(int levels, double sigma, double dt, double spot = 0.0,
                                 double p = 0.5);

// multiplicative binomial tree with up factor u, down factor d, up probability p
ScenarioTree binomial_tree(int levels, double spot, double u, double d, double p);

NodeVariable random_claim(Rng& rng, const ScenarioTree& tree, int level, double scale = 1.0);

// density change with conditionally renormalized lognormal ratios
DensityChange random_density(Rng& rng, const ScenarioTree& tree, int s, int t,
                             double spread = 0.5);

// menu of one-step kernels with nonnegative node penalties. When
// include_identity is set the first entry is the reference kernel at zero
// penalty, which keeps the induced family finite everywhere.
std::vector<DualGenerator> random_generators(Rng& rng, const ScenarioTree& tree, int count,
                                             double spread = 0.5, double penalty_scale = 0.2,
                                             bool include_identity = true);

} // namespace fdrisk
