#include "fdrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdrisk {

// ---- DriverSpec -------------------------------------------------------------

DriverSpec DriverSpec::zero() { return DriverSpec{}; }

DriverSpec DriverSpec::linear(double mu) {
    DriverSpec d;
    d.form = DriverForm::Linear;
    d.mu = mu;
    return d;
}

DriverSpec DriverSpec::abs_linear(double mu) {
    DriverSpec d;
    d.form = DriverForm::AbsLinear;
    d.mu = mu;
    return d;
}

DriverSpec DriverSpec::quadratic(double gamma) {
    DriverSpec d;
    d.form = DriverForm::Quadratic;
    d.gamma = gamma;
    return d;
}

DriverSpec DriverSpec::table(std::vector<double> zs, std::vector<double> gs) {
    DriverSpec d;
    d.form = DriverForm::Table;
    d.zs = std::move(zs);
    d.gs = std::move(gs);
    return d;
}

void DriverSpec::validate() const {
    switch (form) {
        case DriverForm::Zero:
            return;
        case DriverForm::Linear:
        case DriverForm::AbsLinear:
            if (!std::isfinite(mu)) throw ValidationError("driver: non-finite slope");
            if (form == DriverForm::AbsLinear && mu < 0.0)
                throw ValidationError("driver: abslinear slope must be nonnegative for convexity");
            return;
        case DriverForm::Quadratic:
            if (!std::isfinite(gamma) || gamma < 0.0)
                throw ValidationError("driver: quadratic curvature must be finite and nonnegative");
            return;
        case DriverForm::Table: {
            if (zs.size() != gs.size() || zs.size() < 2)
                throw ValidationError("driver: table needs matching knot lists, at least two knots");
            for (std::size_t i = 0; i < zs.size(); ++i)
                if (!std::isfinite(zs[i]) || !std::isfinite(gs[i]))
                    throw ValidationError("driver: non-finite table entry");
            double prev_slope = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < zs.size(); ++i) {
                const double dz = zs[i + 1] - zs[i];
                if (dz <= 0.0) throw ValidationError("driver: table knots must be increasing");
                const double sl = (gs[i + 1] - gs[i]) / dz;
                if (sl < prev_slope - 1e-12)
                    throw ValidationError("driver: table is not convex");
                prev_slope = std::max(prev_slope, sl);
            }
            return;
        }
    }
    throw ValidationError("driver: unknown form");
}

double DriverSpec::operator()(double z) const {
    switch (form) {
        case DriverForm::Zero: return 0.0;
        case DriverForm::Linear: return mu * z;
        case DriverForm::AbsLinear: return mu * std::fabs(z);
        case DriverForm::Quadratic: return 0.5 * gamma * z * z;
        case DriverForm::Table: break;
    }
    if (z <= zs.front())
        return gs.front() + (z - zs.front()) * slope(zs.front() - 1.0);
    if (z >= zs.back())
        return gs.back() + (z - zs.back()) * slope(zs.back() + 1.0);
    auto it = std::upper_bound(zs.begin(), zs.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - zs.begin()) - 1;
    const double w = (z - zs[i]) / (zs[i + 1] - zs[i]);
    return (1.0 - w) * gs[i] + w * gs[i + 1];
}

double DriverSpec::slope(double z) const {
    switch (form) {
        case DriverForm::Zero: return 0.0;
        case DriverForm::Linear: return mu;
        case DriverForm::AbsLinear: return z > 0.0 ? mu : (z < 0.0 ? -mu : 0.0);
        case DriverForm::Quadratic: return gamma * z;
        case DriverForm::Table: break;
    }
    if (z <= zs.front())
        return (gs[1] - gs[0]) / (zs[1] - zs[0]);
    if (z >= zs.back()) {
        const std::size_t n = zs.size();
        return (gs[n - 1] - gs[n - 2]) / (zs[n - 1] - zs[n - 2]);
    }
    auto it = std::upper_bound(zs.begin(), zs.end(), z);
    const std::size_t i = static_cast<std::size_t>(it - zs.begin()) - 1;
    return (gs[i + 1] - gs[i]) / (zs[i + 1] - zs[i]);
}

double DriverSpec::lipschitz(double z_span) const {
    switch (form) {
        case DriverForm::Zero: return 0.0;
        case DriverForm::Linear:
        case DriverForm::AbsLinear: return std::fabs(mu);
        case DriverForm::Quadratic: return gamma * std::max(1.0, z_span);
        case DriverForm::Table: {
            double c = 0.0;
            for (std::size_t i = 0; i + 1 < zs.size(); ++i)
                c = std::max(c, std::fabs((gs[i + 1] - gs[i]) / (zs[i + 1] - zs[i])));
            return c;
        }
    }
    return 0.0;
}

// ---- RiskMeasure -------------------------------------------------------------

void RiskMeasure::require_pair(int s, int t, const NodeVariable& x) const {
    if (s < 0 || t > tree().last_level() || s > t)
        throw LevelMismatchError("rho: level pair (" + std::to_string(s) + ", " +
                                 std::to_string(t) + ") outside the tree");
    if (x.level != t) throw LevelMismatchError("rho: claim does not live at the requested level");
    require_shape(tree(), x, "rho");
}

std::vector<std::vector<double>> RiskMeasure::pricing_weights(int s, int t,
                                                              const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    std::vector<std::vector<double>> out;
    out.reserve(tr.nodes_at(s).size());
    for (int id : tr.nodes_at(s)) {
        const auto leaves = tr.descendants(id, t);
        std::vector<double> w(leaves.size(), 0.0);
        const int row = tr.index_in_level(id);
        for (std::size_t j = 0; j < leaves.size(); ++j) {
            const int col = tr.index_in_level(leaves[j]);
            const double h = 1e-6 * std::max(1.0, std::fabs(x.values[col]));
            NodeVariable up = x, dn = x;
            up.values[col] += h;
            dn.values[col] -= h;
            w[j] = -(rho(s, t, up).values[row] - rho(s, t, dn).values[row]) / (2.0 * h);
        }
        out.push_back(std::move(w));
    }
    return out;
}

// ---- EntropicFamily ----------------------------------------------------------

EntropicFamily::EntropicFamily(const ScenarioTree& tree, double gamma)
    : RiskMeasure(tree), gamma_(gamma) {
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw ValidationError("entropic: gamma must be finite and positive");
}

NodeVariable EntropicFamily::rho(int s, int t, const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    NodeVariable w = -x;
    w.level = t;
    for (int lv = t - 1; lv >= s; --lv) {
        NodeVariable next(lv, std::vector<double>(tr.nodes_at(lv).size(), 0.0));
        for (int id : tr.nodes_at(lv)) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c : tr.children(id))
                m = std::max(m, gamma_ * w.values[tr.index_in_level(c)]);
            double acc = 0.0;
            for (int c : tr.children(id))
                acc += tr.branch_prob(c) * std::exp(gamma_ * w.values[tr.index_in_level(c)] - m);
            next.values[tr.index_in_level(id)] = (m + std::log(acc)) / gamma_;
        }
        w = std::move(next);
    }
    return w;
}

std::vector<std::vector<double>> EntropicFamily::pricing_weights(int s, int t,
                                                                 const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    // ladder of continuation values, then one-step Gibbs conditionals composed
    std::vector<std::vector<double>> ladder(t - s + 1);
    NodeVariable w = -x;
    ladder[t - s] = w.values;
    for (int lv = t - 1; lv >= s; --lv) {
        NodeVariable next(lv, std::vector<double>(tr.nodes_at(lv).size(), 0.0));
        for (int id : tr.nodes_at(lv)) {
            double m = -std::numeric_limits<double>::infinity();
            for (int c : tr.children(id))
                m = std::max(m, gamma_ * w.values[tr.index_in_level(c)]);
            double acc = 0.0;
            for (int c : tr.children(id))
                acc += tr.branch_prob(c) * std::exp(gamma_ * w.values[tr.index_in_level(c)] - m);
            next.values[tr.index_in_level(id)] = (m + std::log(acc)) / gamma_;
        }
        w = std::move(next);
        ladder[lv - s] = w.values;
    }

    std::vector<std::vector<double>> out;
    out.reserve(tr.nodes_at(s).size());
    for (int id : tr.nodes_at(s)) {
        std::vector<int> frontier{id};
        std::vector<double> mass{1.0};
        for (int lv = s; lv < t; ++lv) {
            std::vector<int> nf;
            std::vector<double> nm;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                const int n = frontier[i];
                double norm = 0.0;
                double m = -std::numeric_limits<double>::infinity();
                for (int c : tr.children(n))
                    m = std::max(m, gamma_ * ladder[lv + 1 - s][tr.index_in_level(c)]);
                for (int c : tr.children(n))
                    norm += tr.branch_prob(c) *
                            std::exp(gamma_ * ladder[lv + 1 - s][tr.index_in_level(c)] - m);
                for (int c : tr.children(n)) {
                    const double g = tr.branch_prob(c) *
                                     std::exp(gamma_ * ladder[lv + 1 - s][tr.index_in_level(c)] - m) /
                                     norm;
                    nf.push_back(c);
                    nm.push_back(mass[i] * g);
                }
            }
            frontier = std::move(nf);
            mass = std::move(nm);
        }
        out.push_back(std::move(mass));
    }
    return out;
}

// ---- GExpectationFamily -------------------------------------------------------

GExpectationFamily::GExpectationFamily(const ScenarioTree& tree, DriverSpec driver, double dt)
    : RiskMeasure(tree), driver_(std::move(driver)), dt_(dt) {
    driver_.validate();
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ValidationError("driver recursion: dt must be positive");
    if (!tree.is_binary())
        throw ValidationError("driver recursion: the tree must be binary");
    const double c = driver_.lipschitz(1.0);
    if (c * std::sqrt(dt) > 1.0 + 1e-15)
        throw ValidationError("driver recursion: monotone step guard violated, need C sqrt(dt) <= 1");
    for (int lv = 0; lv < tree.last_level(); ++lv) {
        for (int id : tree.nodes_at(lv)) {
            const auto& kids = tree.children(id);
            const double p = tree.branch_prob(kids[0]);
            const double spread = std::sqrt(dt) / std::sqrt(p * (1.0 - p));
            if (c * dt / spread > std::min(p, 1.0 - p) + 1e-15)
                throw ValidationError(
                    "driver recursion: monotone step guard violated at node " + std::to_string(id));
        }
    }
}

void GExpectationFamily::step_down(int lv, std::vector<double>& w, std::vector<double>* up_weight,
                                   std::vector<double>* down_weight) const {
    const ScenarioTree& tr = tree();
    std::vector<double> next(tr.nodes_at(lv).size(), 0.0);
    if (up_weight) up_weight->assign(tr.nodes_at(lv).size(), 0.0);
    if (down_weight) down_weight->assign(tr.nodes_at(lv).size(), 0.0);
    const double sdt = std::sqrt(dt_);
    for (int id : tr.nodes_at(lv)) {
        const auto& kids = tr.children(id);
        // first child carries the positive increment of the two-point bridge
        const double p = tr.branch_prob(kids[0]);
        const double wu = sdt * std::sqrt((1.0 - p) / p);
        const double wd = -sdt * std::sqrt(p / (1.0 - p));
        const double yu = w[tr.index_in_level(kids[0])];
        const double yd = w[tr.index_in_level(kids[1])];
        const double z = (yu - yd) / (wu - wd);
        const int i = tr.index_in_level(id);
        next[i] = p * yu + (1.0 - p) * yd + driver_(z) * dt_;
        if (up_weight || down_weight) {
            const double tilt = driver_.slope(z) * dt_ / (wu - wd);
            const double au = p + tilt;
            const double ad = (1.0 - p) - tilt;
            if (au < -1e-12 || ad < -1e-12)
                throw ValidationError("driver recursion: step lost monotonicity at node " +
                                      std::to_string(id));
            if (up_weight) (*up_weight)[i] = au;
            if (down_weight) (*down_weight)[i] = ad;
        }
    }
    w = std::move(next);
}

NodeVariable GExpectationFamily::rho(int s, int t, const NodeVariable& x) const {
    require_pair(s, t, x);
    std::vector<double> w = (-x).values;
    for (int lv = t - 1; lv >= s; --lv) step_down(lv, w, nullptr, nullptr);
    return NodeVariable(s, std::move(w));
}

std::vector<std::vector<double>> GExpectationFamily::pricing_weights(int s, int t,
                                                                     const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    std::vector<double> w = (-x).values;
    std::vector<std::vector<double>> au(t - s), ad(t - s);
    for (int lv = t - 1; lv >= s; --lv) step_down(lv, w, &au[lv - s], &ad[lv - s]);

    std::vector<std::vector<double>> out;
    out.reserve(tr.nodes_at(s).size());
    for (int id : tr.nodes_at(s)) {
        std::vector<int> frontier{id};
        std::vector<double> mass{1.0};
        for (int lv = s; lv < t; ++lv) {
            std::vector<int> nf;
            std::vector<double> nm;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                const int n = frontier[i];
                const int row = tr.index_in_level(n);
                const auto& kids = tr.children(n);
                nf.push_back(kids[0]);
                nm.push_back(mass[i] * au[lv - s][row]);
                nf.push_back(kids[1]);
                nm.push_back(mass[i] * ad[lv - s][row]);
            }
            frontier = std::move(nf);
            mass = std::move(nm);
        }
        out.push_back(std::move(mass));
    }
    return out;
}

// ---- DualPenaltyFamily --------------------------------------------------------

DualPenaltyFamily::DualPenaltyFamily(const ScenarioTree& tree,
                                     std::vector<DualGenerator> generators)
    : RiskMeasure(tree), generators_(std::move(generators)) {
    if (generators_.empty())
        throw ValidationError("dual family: at least one generator kernel required");
    const std::size_t m = static_cast<std::size_t>(tree.node_count());
    for (std::size_t k = 0; k < generators_.size(); ++k) {
        auto& g = generators_[k];
        if (g.ratios.size() != m || g.penalty.size() != m)
            throw ValidationError("dual family: generator " + std::to_string(k) +
                                  " must carry one ratio and one penalty per node");
        for (int id = 0; id < tree.node_count(); ++id) {
            if (id != tree.root() && (!std::isfinite(g.ratios[id]) || g.ratios[id] < 0.0))
                throw ValidationError("dual family: bad ratio in generator " + std::to_string(k));
            if (!std::isfinite(g.penalty[id]) || g.penalty[id] < 0.0)
                throw ValidationError("dual family: penalties must be finite and nonnegative");
        }
        for (int lv = 0; lv < tree.last_level(); ++lv) {
            for (int id : tree.nodes_at(lv)) {
                double mass = 0.0;
                for (int c : tree.children(id)) mass += tree.branch_prob(c) * g.ratios[c];
                if (std::fabs(mass - 1.0) > kProbTol)
                    throw ValidationError("dual family: generator " + std::to_string(k) +
                                          " is not conditionally normalised at node " +
                                          std::to_string(id));
            }
        }
    }
}

NodeVariable DualPenaltyFamily::rho(int s, int t, const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    NodeVariable w = -x;
    for (int lv = t - 1; lv >= s; --lv) {
        NodeVariable next(lv, std::vector<double>(tr.nodes_at(lv).size(), 0.0));
        for (int id : tr.nodes_at(lv)) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& g : generators_) {
                double acc = -g.penalty[id];
                for (int c : tr.children(id))
                    acc += tr.branch_prob(c) * g.ratios[c] * w.values[tr.index_in_level(c)];
                best = std::max(best, acc);
            }
            next.values[tr.index_in_level(id)] = best;
        }
        w = std::move(next);
    }
    return w;
}

std::vector<std::vector<double>> DualPenaltyFamily::pricing_weights(int s, int t,
                                                                    const NodeVariable& x) const {
    require_pair(s, t, x);
    const ScenarioTree& tr = tree();
    NodeVariable w = -x;
    // argmax kernel per node and level, then the chosen conditionals composed
    std::vector<std::vector<int>> choice(t - s);
    for (int lv = t - 1; lv >= s; --lv) {
        choice[lv - s].assign(tr.nodes_at(lv).size(), 0);
        NodeVariable next(lv, std::vector<double>(tr.nodes_at(lv).size(), 0.0));
        for (int id : tr.nodes_at(lv)) {
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (std::size_t k = 0; k < generators_.size(); ++k) {
                const auto& g = generators_[k];
                double acc = -g.penalty[id];
                for (int c : tr.children(id))
                    acc += tr.branch_prob(c) * g.ratios[c] * w.values[tr.index_in_level(c)];
                if (acc > best) {
                    best = acc;
                    arg = static_cast<int>(k);
                }
            }
            next.values[tr.index_in_level(id)] = best;
            choice[lv - s][tr.index_in_level(id)] = arg;
        }
        w = std::move(next);
    }

    std::vector<std::vector<double>> out;
    out.reserve(tr.nodes_at(s).size());
    for (int id : tr.nodes_at(s)) {
        std::vector<int> frontier{id};
        std::vector<double> mass{1.0};
        for (int lv = s; lv < t; ++lv) {
            std::vector<int> nf;
            std::vector<double> nm;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                const int n = frontier[i];
                const auto& g = generators_[choice[lv - s][tr.index_in_level(n)]];
                for (int c : tr.children(n)) {
                    nf.push_back(c);
                    nm.push_back(mass[i] * tr.branch_prob(c) * g.ratios[c]);
                }
            }
            frontier = std::move(nf);
            mass = std::move(nm);
        }
        out.push_back(std::move(mass));
    }
    return out;
}

DensityChange DualPenaltyFamily::generator_density(int k, int s, int t) const {
    const ScenarioTree& tr = tree();
    const auto& g = generators_.at(k);
    std::vector<double> ratios(tr.node_count(), 1.0);
    for (int lv = s + 1; lv <= t; ++lv)
        for (int id : tr.nodes_at(lv)) ratios[id] = g.ratios[id];
    return DensityChange(tr, s, t, std::move(ratios));
}

NodeVariable DualPenaltyFamily::composed_penalty(int k, int s, int t) const {
    const ScenarioTree& tr = tree();
    const auto& g = generators_.at(k);
    NodeVariable a = NodeVariable::constant(tr, t, 0.0);
    for (int lv = t - 1; lv >= s; --lv) {
        NodeVariable next(lv, std::vector<double>(tr.nodes_at(lv).size(), 0.0));
        for (int id : tr.nodes_at(lv)) {
            double acc = g.penalty[id];
            for (int c : tr.children(id))
                acc += tr.branch_prob(c) * g.ratios[c] * a.values[tr.index_in_level(c)];
            next.values[tr.index_in_level(id)] = acc;
        }
        a = std::move(next);
    }
    return a;
}

// ---- NormalizedFamily ---------------------------------------------------------

NormalizedFamily::NormalizedFamily(const RiskMeasure& base)
    : RiskMeasure(base.tree()), base_(&base) {}

NodeVariable NormalizedFamily::rho(int s, int t, const NodeVariable& x) const {
    NodeVariable zero = NodeVariable::constant(tree(), t, 0.0);
    return base_->rho(s, t, x) - base_->rho(s, t, zero);
}

std::vector<std::vector<double>> NormalizedFamily::pricing_weights(int s, int t,
                                                                   const NodeVariable& x) const {
    return base_->pricing_weights(s, t, x);
}

} // namespace fdrisk
