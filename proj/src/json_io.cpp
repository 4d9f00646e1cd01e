#include "fdrisk/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace fdrisk {

using nlohmann::json;

namespace {

const json& need(const json& j, const char* key, const char* what) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ValidationError(std::string(what) + ": missing field '" + key + "'");
    return *it;
}

double need_number(const json& j, const char* key, const char* what) {
    const json& v = need(j, key, what);
    if (!v.is_number())
        throw ValidationError(std::string(what) + ": field '" + key + "' must be a number");
    return v.get<double>();
}

int need_int(const json& j, const char* key, const char* what) {
    const json& v = need(j, key, what);
    if (!v.is_number_integer())
        throw ValidationError(std::string(what) + ": field '" + key + "' must be an integer");
    return v.get<int>();
}

int parse_node_id(const std::string& key, const char* what) {
    try {
        std::size_t used = 0;
        const int id = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
        return id;
    } catch (const std::exception&) {
        throw ValidationError(std::string(what) + ": bad node id key '" + key + "'");
    }
}

} // namespace

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// ---- tree ------------------------------------------------------------------

ScenarioTree tree_from_json(const json& j) {
    const json& arr = need(j, "nodes", "tree");
    if (!arr.is_array() || arr.empty())
        throw ValidationError("tree: 'nodes' must be a nonempty array");
    std::vector<TreeNode> nodes;
    nodes.reserve(arr.size());
    for (const auto& nj : arr) {
        TreeNode n;
        n.id = need_int(nj, "id", "tree node");
        const json& par = need(nj, "parent", "tree node");
        n.parent = par.is_null() ? -1 : par.get<int>();
        n.level = need_int(nj, "level", "tree node");
        n.prob = need_number(nj, "prob", "tree node");
        const json& assets = need(nj, "assets", "tree node");
        if (!assets.is_array())
            throw ValidationError("tree node: 'assets' must be an array");
        n.assets = assets.get<std::vector<double>>();
        nodes.push_back(std::move(n));
    }
    ScenarioTree tree(std::move(nodes));
    if (j.contains("levels") && j["levels"].get<int>() != tree.levels())
        throw ValidationError("tree: 'levels' disagrees with the node list");
    return tree;
}

json tree_to_json(const ScenarioTree& tree) {
    json arr = json::array();
    for (int id = 0; id < tree.node_count(); ++id) {
        const TreeNode& n = tree.node(id);
        arr.push_back(json{{"id", n.id},
                           {"parent", n.parent < 0 ? json(nullptr) : json(n.parent)},
                           {"level", n.level},
                           {"prob", n.prob},
                           {"assets", n.assets}});
    }
    return json{{"levels", tree.levels()}, {"nodes", std::move(arr)}};
}

// ---- variables -------------------------------------------------------------

NodeVariable variable_from_json(const ScenarioTree& tree, const json& j) {
    const int level = need_int(j, "level", "variable");
    if (level < 0 || level > tree.last_level())
        throw ValidationError("variable: level outside the tree");
    const json& vals = need(j, "values", "variable");
    if (!vals.is_object()) throw ValidationError("variable: 'values' must map node id to value");
    NodeVariable x = NodeVariable::constant(tree, level, 0.0);
    std::vector<bool> seen(x.size(), false);
    for (const auto& [key, value] : vals.items()) {
        const int id = parse_node_id(key, "variable");
        if (id < 0 || id >= tree.node_count() || tree.level_of(id) != level)
            throw ValidationError("variable: node " + key + " is not at level " +
                                  std::to_string(level));
        if (!value.is_number())
            throw ValidationError("variable: value at node " + key + " must be a number");
        x.values[tree.index_in_level(id)] = value.get<double>();
        seen[tree.index_in_level(id)] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ValidationError("variable: no value for node " +
                                  std::to_string(tree.nodes_at(level)[i]));
    return x;
}

json variable_to_json(const ScenarioTree& tree, const NodeVariable& x) {
    json vals = json::object();
    const auto& ids = tree.nodes_at(x.level);
    for (std::size_t i = 0; i < ids.size(); ++i)
        vals[std::to_string(ids[i])] = x.values[i];
    return json{{"level", x.level}, {"values", std::move(vals)}};
}

std::vector<NodeVariable> claims_from_json(const ScenarioTree& tree, const json& j) {
    std::vector<NodeVariable> out;
    if (j.contains("claims")) {
        const json& arr = j["claims"];
        if (!arr.is_array() || arr.empty())
            throw ValidationError("claims: 'claims' must be a nonempty array");
        for (const auto& cj : arr) out.push_back(variable_from_json(tree, cj));
    } else {
        out.push_back(variable_from_json(tree, j));
    }
    return out;
}

// ---- densities ---------------------------------------------------------------

DensityChange density_from_json(const ScenarioTree& tree, const json& j) {
    const int s = need_int(j, "s", "density");
    const int t = need_int(j, "t", "density");
    const json& ratios = need(j, "ratios", "density");
    if (!ratios.is_object())
        throw ValidationError("density: 'ratios' must map child node id to ratio");
    std::vector<double> r(static_cast<std::size_t>(tree.node_count()), 1.0);
    for (const auto& [key, value] : ratios.items()) {
        const int id = parse_node_id(key, "density");
        if (id <= 0 || id >= tree.node_count())
            throw ValidationError("density: node " + key + " is not a valid child node");
        if (!value.is_number() || value.get<double>() < 0.0)
            throw ValidationError("density: ratio at node " + key +
                                  " must be a nonnegative number");
        r[static_cast<std::size_t>(id)] = value.get<double>();
    }
    return DensityChange(tree, s, t, std::move(r));
}

json density_to_json(const ScenarioTree& tree, const DensityChange& q) {
    json ratios = json::object();
    for (int lv = q.s; lv < q.t; ++lv)
        for (int id : tree.nodes_at(lv))
            for (int c : tree.children(id)) ratios[std::to_string(c)] = q.ratio(c);
    return json{{"s", q.s}, {"t", q.t}, {"ratios", std::move(ratios)}};
}

// ---- drivers and risk configs ---------------------------------------------------

DriverSpec driver_from_json(const json& j) {
    const json& form = need(j, "form", "driver");
    const std::string f = form.get<std::string>();
    if (f == "zero") return DriverSpec::zero();
    if (f == "linear") return DriverSpec::linear(need_number(j, "mu", "driver"));
    if (f == "abs") return DriverSpec::abs_linear(need_number(j, "mu", "driver"));
    if (f == "quadratic") return DriverSpec::quadratic(need_number(j, "gamma", "driver"));
    if (f == "table") {
        const json& zs = need(j, "zs", "driver");
        const json& gs = need(j, "gs", "driver");
        if (!zs.is_array() || !gs.is_array())
            throw ValidationError("driver: table knots must be arrays");
        return DriverSpec::table(zs.get<std::vector<double>>(), gs.get<std::vector<double>>());
    }
    throw ValidationError("driver: unknown form '" + f + "'");
}

json driver_to_json(const DriverSpec& d) {
    switch (d.form) {
        case DriverForm::Zero: return json{{"form", "zero"}};
        case DriverForm::Linear: return json{{"form", "linear"}, {"mu", d.mu}};
        case DriverForm::AbsLinear: return json{{"form", "abs"}, {"mu", d.mu}};
        case DriverForm::Quadratic: return json{{"form", "quadratic"}, {"gamma", d.gamma}};
        case DriverForm::Table: return json{{"form", "table"}, {"zs", d.zs}, {"gs", d.gs}};
    }
    throw Error("driver_to_json: unreachable");
}

RiskHandle risk_from_json(const ScenarioTree& tree, const json& j) {
    RiskHandle handle;
    handle.kind = need(j, "kind", "risk").get<std::string>();
    if (handle.kind == "entropic") {
        handle.base =
            std::make_unique<EntropicFamily>(tree, need_number(j, "gamma", "risk"));
    } else if (handle.kind == "gexpectation") {
        handle.base = std::make_unique<GExpectationFamily>(
            tree, driver_from_json(need(j, "driver", "risk")), need_number(j, "dt", "risk"));
    } else if (handle.kind == "dual") {
        const json& gens = need(j, "generators", "risk");
        if (!gens.is_array() || gens.empty())
            throw ValidationError("risk: 'generators' must be a nonempty array");
        std::vector<DualGenerator> menu;
        for (const auto& gj : gens) {
            DualGenerator g;
            g.ratios.assign(static_cast<std::size_t>(tree.node_count()), 1.0);
            g.penalty.assign(static_cast<std::size_t>(tree.node_count()), 0.0);
            const json& ratios = need(gj, "ratios", "risk generator");
            for (const auto& [key, value] : ratios.items()) {
                const int id = parse_node_id(key, "risk generator");
                if (id <= 0 || id >= tree.node_count())
                    throw ValidationError("risk generator: bad node id " + key);
                g.ratios[static_cast<std::size_t>(id)] = value.get<double>();
            }
            if (gj.contains("penalties")) {
                for (const auto& [key, value] : gj["penalties"].items()) {
                    const int id = parse_node_id(key, "risk generator");
                    if (id < 0 || id >= tree.node_count())
                        throw ValidationError("risk generator: bad node id " + key);
                    g.penalty[static_cast<std::size_t>(id)] = value.get<double>();
                }
            }
            menu.push_back(std::move(g));
        }
        handle.base = std::make_unique<DualPenaltyFamily>(tree, std::move(menu));
    } else {
        throw ValidationError("risk: unknown kind '" + handle.kind + "'");
    }
    if (j.value("normalize", false))
        handle.normalized = std::make_unique<NormalizedFamily>(*handle.base);
    return handle;
}

// ---- strategy spaces -------------------------------------------------------------

StrategySpace strategies_from_json(const json& j) {
    const std::string kind = need(j, "kind", "strategies").get<std::string>();
    if (kind == "zero") return StrategySpace::zero();
    if (kind == "linear") return StrategySpace::linear();
    if (kind == "box") {
        const json& lo = need(j, "lower", "strategies");
        const json& up = need(j, "upper", "strategies");
        if (!lo.is_array() || !up.is_array())
            throw ValidationError("strategies: box bounds must be arrays");
        auto read = [](const json& arr) {
            std::vector<double> v;
            for (const auto& e : arr) {
                if (e.is_null())
                    v.push_back(std::numeric_limits<double>::quiet_NaN());
                else if (e.is_string()) {
                    const std::string s = e.get<std::string>();
                    if (s == "inf" || s == "+inf")
                        v.push_back(std::numeric_limits<double>::infinity());
                    else if (s == "-inf")
                        v.push_back(-std::numeric_limits<double>::infinity());
                    else
                        throw ValidationError("strategies: bad bound '" + s + "'");
                } else
                    v.push_back(e.get<double>());
            }
            return v;
        };
        return StrategySpace::box(read(lo), read(up));
    }
    throw ValidationError("strategies: unknown kind '" + kind + "'");
}

json strategies_to_json(const StrategySpace& space) {
    switch (space.kind) {
        case StrategyKind::Zero: return json{{"kind", "zero"}};
        case StrategyKind::Linear: return json{{"kind", "linear"}};
        case StrategyKind::Box: {
            auto write = [](const std::vector<double>& v) {
                json arr = json::array();
                for (double b : v) {
                    if (std::isinf(b))
                        arr.push_back(b > 0 ? "inf" : "-inf");
                    else
                        arr.push_back(b);
                }
                return arr;
            };
            return json{{"kind", "box"}, {"lower", write(space.lower)},
                        {"upper", write(space.upper)}};
        }
    }
    throw Error("strategies_to_json: unreachable");
}

// ---- deviation schedules -----------------------------------------------------------

DeltaSchedule schedule_from_json(const json& j, int levels) {
    if (j.contains("delta_base"))
        return DeltaSchedule::from_base(j["delta_base"].get<double>(), levels);
    if (j.contains("table")) {
        const json& tj = j["table"];
        if (!tj.is_object())
            throw ValidationError("schedule: 'table' must map \"s,t\" to a radius");
        std::map<std::pair<int, int>, double> table;
        for (const auto& [key, value] : tj.items()) {
            std::string k = key;
            k.erase(std::remove_if(k.begin(), k.end(),
                                   [](char c) { return c == '(' || c == ')' || c == ' '; }),
                    k.end());
            const auto comma = k.find(',');
            if (comma == std::string::npos)
                throw ValidationError("schedule: bad pair key '" + key + "'");
            const int s = parse_node_id(k.substr(0, comma), "schedule");
            const int t = parse_node_id(k.substr(comma + 1), "schedule");
            table[{s, t}] = value.get<double>();
        }
        return DeltaSchedule::from_table(table, levels);
    }
    throw ValidationError("schedule: need 'delta_base' or 'table'");
}

} // namespace fdrisk
