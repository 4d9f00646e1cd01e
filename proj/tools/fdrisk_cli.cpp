// Command line front end: price, bounds, check, penalty, oracle. Every
// command reads JSON inputs, writes one JSON report (stdout or --out) whose
// envelope carries the library version and a hash of the inputs, and exits
// 0 on success, 1 on bad input, 2 on an unbounded hedging problem, 3 when a
// requested check fails.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fdrisk/generate.hpp"
#include "fdrisk/good_deal.hpp"
#include "fdrisk/indifference.hpp"
#include "fdrisk/json_io.hpp"
#include "fdrisk/oracle.hpp"
#include "fdrisk/report.hpp"
#include "fdrisk/risk.hpp"
#include "fdrisk/tree.hpp"

using nlohmann::json;

namespace {

struct CommonArgs {
    std::string tree_path;
    std::string risk_path;
    std::string strategies_path;
    std::string claims_path;
    std::string delta_path;
    std::string measure_path;
    std::string out_path;
    std::string csv_path;
    std::string checks = "all";
    std::string levels;
    int from_level = 0;
    int to_level = -1; // -1: use the claim level / last level
    int samples = 8;
    int resolution = 41;
    std::uint64_t seed = 1;
};

void emit(const CommonArgs& args, const json& report) {
    if (args.out_path.empty()) {
        std::cout << report.dump(2) << '\n';
    } else {
        fdrisk::save_json(args.out_path, report);
    }
}

void emit_csv(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw fdrisk::ValidationError("cannot write " + path);
    out << text;
}

json envelope(const std::string& command, const std::string& canonical) {
    return json{{"tool", "fdrisk"},
                {"version", fdrisk::library_version()},
                {"command", command},
                {"config_hash", fdrisk::config_hash(canonical)}};
}

std::string canonical_inputs(const std::vector<const json*>& parts, const CommonArgs& args) {
    std::ostringstream os;
    for (const json* p : parts)
        if (p) os << p->dump() << '\n';
    os << args.from_level << ' ' << args.to_level << ' ' << args.levels << ' ' << args.samples
       << ' ' << args.seed;
    return os.str();
}

json price_node_map(const fdrisk::ScenarioTree& tree, const fdrisk::NodeVariable& x) {
    return fdrisk::variable_to_json(tree, x)["values"];
}

void parse_levels(const std::string& text, int last, int& r, int& s, int& t) {
    r = 0;
    s = last / 2;
    t = last;
    if (text.empty()) return;
    std::istringstream is(text);
    std::string part;
    std::vector<int> vals;
    while (std::getline(is, part, ','))
        vals.push_back(std::stoi(part));
    if (vals.size() != 3)
        throw fdrisk::ValidationError("--levels wants three comma-separated levels r,s,t");
    r = vals[0];
    s = vals[1];
    t = vals[2];
    if (!(0 <= r && r <= s && s <= t && t <= last))
        throw fdrisk::ValidationError("--levels must satisfy 0 <= r <= s <= t <= last level");
}

bool wants(const std::string& selection, const std::string& name) {
    if (selection == "all") return true;
    std::istringstream is(selection);
    std::string part;
    while (std::getline(is, part, ','))
        if (part == name) return true;
    return false;
}

// ---- price ------------------------------------------------------------------

int run_price(const CommonArgs& args) {
    const json tj = fdrisk::load_json(args.tree_path);
    const json rj = fdrisk::load_json(args.risk_path);
    const json sj = fdrisk::load_json(args.strategies_path);
    const json cj = fdrisk::load_json(args.claims_path);

    const fdrisk::ScenarioTree tree = fdrisk::tree_from_json(tj);
    const fdrisk::RiskHandle risk = fdrisk::risk_from_json(tree, rj);
    const fdrisk::StrategySpace space = fdrisk::strategies_from_json(sj);
    space.validate(tree.asset_dim());
    const auto claims = fdrisk::claims_from_json(tree, cj);

    json report = envelope("price", canonical_inputs({&tj, &rj, &sj, &cj}, args));
    report["risk_kind"] = risk.kind;
    report["s"] = args.from_level;

    std::ostringstream csv;
    csv << "claim,node,price\n";
    json results = json::array();
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const int t = args.to_level < 0 ? claims[i].level : args.to_level;
        const fdrisk::PriceResult res =
            fdrisk::price(risk.family(), space, args.from_level, t, claims[i]);
        json entry{{"claim", i},
                   {"t", t},
                   {"price", price_node_map(tree, res.price)},
                   {"risk_with_claim", price_node_map(tree, res.risk_with_claim)},
                   {"risk_without", price_node_map(tree, res.risk_without)},
                   {"iterations", res.diag.iterations},
                   {"gradient_norm", res.diag.final_gradient_norm}};
        results.push_back(std::move(entry));
        const auto& ids = tree.nodes_at(args.from_level);
        for (std::size_t n = 0; n < ids.size(); ++n)
            csv << i << ',' << ids[n] << ',' << res.price.values[n] << '\n';
    }
    report["results"] = std::move(results);
    emit(args, report);
    emit_csv(args.csv_path, csv.str());
    return 0;
}

// ---- bounds ------------------------------------------------------------------

int run_bounds(const CommonArgs& args) {
    const json tj = fdrisk::load_json(args.tree_path);
    const json dj = fdrisk::load_json(args.delta_path);
    const json cj = fdrisk::load_json(args.claims_path);

    const fdrisk::ScenarioTree tree = fdrisk::tree_from_json(tj);
    const fdrisk::DeltaSchedule schedule = fdrisk::schedule_from_json(dj, tree.levels());
    const auto claims = fdrisk::claims_from_json(tree, cj);

    json report = envelope("bounds", canonical_inputs({&tj, &dj, &cj}, args));
    report["s"] = args.from_level;

    std::ostringstream csv;
    csv << "claim,node,lower,upper\n";
    json results = json::array();
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const int t = args.to_level < 0 ? claims[i].level : args.to_level;
        const fdrisk::NgdBound up = fdrisk::ngd_upper(tree, claims[i], args.from_level,
                                                      schedule.delta(args.from_level, t));
        const fdrisk::NgdBound lo = fdrisk::ngd_lower(tree, claims[i], args.from_level,
                                                      schedule.delta(args.from_level, t));
        json entry{{"claim", i},
                   {"t", t},
                   {"delta", schedule.delta(args.from_level, t)},
                   {"lower", price_node_map(tree, lo.value)},
                   {"upper", price_node_map(tree, up.value)},
                   {"pinned_upper", up.pinned_count},
                   {"pinned_lower", lo.pinned_count}};
        results.push_back(std::move(entry));
        const auto& ids = tree.nodes_at(args.from_level);
        for (std::size_t n = 0; n < ids.size(); ++n)
            csv << i << ',' << ids[n] << ',' << lo.value.values[n] << ',' << up.value.values[n]
                << '\n';
    }
    report["results"] = std::move(results);
    emit(args, report);
    emit_csv(args.csv_path, csv.str());
    return 0;
}

// ---- check -------------------------------------------------------------------

int run_check(const CommonArgs& args) {
    const json tj = fdrisk::load_json(args.tree_path);
    const json rj = fdrisk::load_json(args.risk_path);
    json sj, dj;
    if (!args.strategies_path.empty()) sj = fdrisk::load_json(args.strategies_path);
    if (!args.delta_path.empty()) dj = fdrisk::load_json(args.delta_path);

    const fdrisk::ScenarioTree tree = fdrisk::tree_from_json(tj);
    const fdrisk::RiskHandle risk = fdrisk::risk_from_json(tree, rj);

    int r = 0, s = 0, t = 0;
    parse_levels(args.levels, tree.last_level(), r, s, t);

    fdrisk::Rng rng(args.seed);
    std::vector<fdrisk::NodeVariable> samples;
    for (int i = 0; i < args.samples; ++i)
        samples.push_back(fdrisk::random_claim(rng, tree, t));

    json report = envelope("check", canonical_inputs({&tj, &rj, &sj, &dj}, args));
    report["risk_kind"] = risk.kind;
    report["seed"] = args.seed;
    report["levels"] = json{{"r", r}, {"s", s}, {"t", t}};

    json suites = json::array();
    bool all_pass = true;
    auto add = [&](const fdrisk::CheckSuite& suite) {
        suites.push_back(suite.to_json());
        all_pass = all_pass && suite.pass();
    };

    if (wants(args.checks, "axioms"))
        add(fdrisk::check_axioms(risk.family(), s, t, samples));
    if (wants(args.checks, "strong_tc"))
        add(fdrisk::check_strong_tc(risk.family(), r, s, t, samples));
    if (wants(args.checks, "tc_decomposition"))
        add(fdrisk::check_tc_decomposition(risk.family(), r, s, t, samples));
    if (wants(args.checks, "domination")) {
        const fdrisk::DominationReport dom = fdrisk::check_domination_sensitivity(risk.family());
        suites.push_back(dom.to_json());
    }

    if (!args.strategies_path.empty()) {
        const fdrisk::StrategySpace space = fdrisk::strategies_from_json(sj);
        space.validate(tree.asset_dim());
        if (wants(args.checks, "price_operator"))
            add(fdrisk::check_price_operator(risk.family(), space, s, t, samples));
        if (wants(args.checks, "recursiveness"))
            add(fdrisk::check_recursive(risk.family(), space, r, s, t, samples));
        if (!args.delta_path.empty()) {
            const fdrisk::DeltaSchedule schedule =
                fdrisk::schedule_from_json(dj, tree.levels());
            if (wants(args.checks, "sandwich"))
                add(fdrisk::check_sandwich(risk.family(), space, s, t, schedule, samples));
            if (wants(args.checks, "theorem_ab")) {
                std::vector<fdrisk::DensityChange> probes;
                probes.push_back(fdrisk::DensityChange::identity(tree, s, t));
                for (int i = 0; i < 12; ++i)
                    probes.push_back(fdrisk::random_density(rng, tree, s, t));
                const fdrisk::TheoremABReport ab =
                    fdrisk::check_theorem_AB(risk.family(), space, s, t, schedule, probes);
                suites.push_back(ab.to_json());
                all_pass = all_pass && ab.agree;
            }
        }
    }

    report["suites"] = std::move(suites);
    report["pass"] = all_pass;
    emit(args, report);
    return all_pass ? 0 : 3;
}

// ---- penalty -----------------------------------------------------------------

int run_penalty(const CommonArgs& args) {
    const json tj = fdrisk::load_json(args.tree_path);
    const json rj = fdrisk::load_json(args.risk_path);
    const json qj = fdrisk::load_json(args.measure_path);

    const fdrisk::ScenarioTree tree = fdrisk::tree_from_json(tj);
    const fdrisk::RiskHandle risk = fdrisk::risk_from_json(tree, rj);
    const fdrisk::DensityChange q = fdrisk::density_from_json(tree, qj);

    const int s = args.from_level;
    const int t = args.to_level < 0 ? q.t : args.to_level;

    json report = envelope("penalty", canonical_inputs({&tj, &rj, &qj}, args));
    report["risk_kind"] = risk.kind;
    report["s"] = s;
    report["t"] = t;

    const fdrisk::NodeVariable alpha = fdrisk::minimal_penalty(risk.family(), s, t, q);
    report["penalty"] = price_node_map(tree, alpha);

    const fdrisk::NodeVariable rho0 =
        risk.family().rho(s, t, fdrisk::NodeVariable::constant(tree, t, 0.0));
    report["normalized_penalty"] = price_node_map(tree, alpha + rho0);
    emit(args, report);
    return 0;
}

// ---- oracle ------------------------------------------------------------------

int run_oracle(const CommonArgs& args) {
    const json tj = fdrisk::load_json(args.tree_path);
    const json rj = fdrisk::load_json(args.risk_path);
    const json sj = fdrisk::load_json(args.strategies_path);
    const json cj = fdrisk::load_json(args.claims_path);

    const fdrisk::ScenarioTree tree = fdrisk::tree_from_json(tj);
    const fdrisk::RiskHandle risk = fdrisk::risk_from_json(tree, rj);
    const fdrisk::StrategySpace space = fdrisk::strategies_from_json(sj);
    space.validate(tree.asset_dim());
    const auto claims = fdrisk::claims_from_json(tree, cj);

    json report = envelope("oracle", canonical_inputs({&tj, &rj, &sj, &cj}, args));
    json results = json::array();
    for (std::size_t i = 0; i < claims.size(); ++i) {
        const int t = args.to_level < 0 ? claims[i].level : args.to_level;
        fdrisk::GridSpec grid;
        grid.resolution = args.resolution;
        const fdrisk::NodeVariable slow =
            fdrisk::oracle_price_grid(risk.family(), space, args.from_level, t, claims[i], grid);
        const fdrisk::NodeVariable fast =
            fdrisk::price(risk.family(), space, args.from_level, t, claims[i]).price;
        results.push_back(json{{"claim", i},
                               {"grid", price_node_map(tree, slow)},
                               {"descent", price_node_map(tree, fast)},
                               {"max_gap", fdrisk::nv_max_abs(slow - fast)}});
    }
    report["results"] = std::move(results);
    emit(args, report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk measures, indifference prices and deviation bounds on scenario trees"};
    app.require_subcommand(1);

    CommonArgs args;

    auto add_common = [&](CLI::App* cmd, bool tree, bool risk, bool strategies, bool claims,
                          bool delta, bool measure) {
        if (tree) cmd->add_option("--tree", args.tree_path, "scenario tree JSON")->required();
        if (risk) cmd->add_option("--risk", args.risk_path, "risk family JSON")->required();
        if (strategies)
            cmd->add_option("--strategies", args.strategies_path, "strategy space JSON");
        if (claims) cmd->add_option("--claims", args.claims_path, "claims JSON")->required();
        if (delta) cmd->add_option("--delta", args.delta_path, "deviation schedule JSON");
        if (measure)
            cmd->add_option("--measure", args.measure_path, "density change JSON")->required();
        cmd->add_option("--from", args.from_level, "evaluation level s");
        cmd->add_option("--to", args.to_level, "claim level t (default: from the claim)");
        cmd->add_option("--out", args.out_path, "write the JSON report here");
    };

    CLI::App* price_cmd = app.add_subcommand("price", "seller indifference prices");
    add_common(price_cmd, true, true, true, true, false, false);
    price_cmd->get_option("--strategies")->required();
    price_cmd->add_option("--csv", args.csv_path, "also write node prices as CSV");

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "deviation price corridor");
    add_common(bounds_cmd, true, false, false, true, true, false);
    bounds_cmd->get_option("--delta")->required();
    bounds_cmd->add_option("--csv", args.csv_path, "also write the corridor as CSV");

    CLI::App* check_cmd = app.add_subcommand("check", "structural property checks");
    add_common(check_cmd, true, true, true, false, true, false);
    check_cmd->add_option("--levels", args.levels, "three levels r,s,t (default 0,mid,last)");
    check_cmd->add_option("--checks", args.checks,
                          "comma list: axioms,strong_tc,tc_decomposition,domination,"
                          "price_operator,recursiveness,sandwich,theorem_ab (default all)");
    check_cmd->add_option("--samples", args.samples, "number of generated sample claims");
    check_cmd->add_option("--seed", args.seed, "sample generator seed");

    CLI::App* penalty_cmd = app.add_subcommand("penalty", "minimal penalty of a density change");
    add_common(penalty_cmd, true, true, false, false, false, true);

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "cross-check prices against the slow grid oracle");
    add_common(oracle_cmd, true, true, true, true, false, false);
    oracle_cmd->get_option("--strategies")->required();
    oracle_cmd->add_option("--resolution", args.resolution, "grid points per coordinate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (price_cmd->parsed()) return run_price(args);
        if (bounds_cmd->parsed()) return run_bounds(args);
        if (check_cmd->parsed()) return run_check(args);
        if (penalty_cmd->parsed()) return run_penalty(args);
        if (oracle_cmd->parsed()) return run_oracle(args);
    } catch (const fdrisk::UnboundedRiskReduction& e) {
        json err{{"error", "unbounded_risk_reduction"},
                 {"message", e.what()},
                 {"node", e.node_id},
                 {"direction", e.direction}};
        std::cerr << err.dump(2) << '\n';
        return 2;
    } catch (const fdrisk::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
