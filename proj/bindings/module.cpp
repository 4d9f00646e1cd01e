// Python surface: trees and risk families from the same JSON documents the
// CLI reads, claims as plain lists in level order, reports as dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>

#include "fdrisk/generate.hpp"
#include "fdrisk/good_deal.hpp"
#include "fdrisk/indifference.hpp"
#include "fdrisk/json_io.hpp"
#include "fdrisk/oracle.hpp"
#include "fdrisk/report.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw fdrisk::ValidationError(std::string(what) + ": " + e.what());
    }
}

py::object to_py(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

fdrisk::NodeVariable as_variable(const fdrisk::ScenarioTree& tree, int level,
                                 const std::vector<double>& values) {
    fdrisk::NodeVariable x(level, values);
    fdrisk::require_shape(tree, x, "claim");
    return x;
}

struct PyRisk {
    const fdrisk::ScenarioTree* tree;
    fdrisk::RiskHandle handle;
};

} // namespace

PYBIND11_MODULE(fdrisk, m) {
    m.doc() = "dynamic risk measures, indifference prices and deviation bounds on scenario trees";

    py::register_exception<fdrisk::ValidationError>(m, "ValidationError");
    py::register_exception<fdrisk::UnboundedRiskReduction>(m, "UnboundedRiskReduction");

    m.def("version", &fdrisk::library_version);

    py::class_<fdrisk::ScenarioTree>(m, "Tree")
        .def(py::init([](const std::string& text) {
                 return fdrisk::tree_from_json(parse(text, "tree"));
             }),
             py::arg("json_text"))
        .def_property_readonly("levels", &fdrisk::ScenarioTree::levels)
        .def_property_readonly("node_count", &fdrisk::ScenarioTree::node_count)
        .def_property_readonly("asset_dim", &fdrisk::ScenarioTree::asset_dim)
        .def("nodes_at",
             [](const fdrisk::ScenarioTree& t, int level) { return t.nodes_at(level); })
        .def("to_json",
             [](const fdrisk::ScenarioTree& t) { return fdrisk::tree_to_json(t).dump(); });

    py::class_<PyRisk>(m, "Risk")
        .def(py::init([](const fdrisk::ScenarioTree& tree, const std::string& text) {
                 PyRisk r;
                 r.tree = &tree;
                 r.handle = fdrisk::risk_from_json(tree, parse(text, "risk"));
                 return r;
             }),
             py::arg("tree"), py::arg("json_text"), py::keep_alive<1, 2>())
        .def_property_readonly("kind", [](const PyRisk& r) { return r.handle.kind; })
        .def("rho",
             [](const PyRisk& r, int s, int t, const std::vector<double>& values) {
                 return r.handle.family().rho(s, t, as_variable(*r.tree, t, values)).values;
             })
        .def("penalty",
             [](const PyRisk& r, int s, int t, const std::string& density_text) {
                 const fdrisk::DensityChange q =
                     fdrisk::density_from_json(*r.tree, parse(density_text, "density"));
                 return fdrisk::minimal_penalty(r.handle.family(), s, t, q).values;
             });

    m.def(
        "price",
        [](const PyRisk& r, const std::string& strategies_text, int s, int t,
           const std::vector<double>& values) {
            const fdrisk::StrategySpace space =
                fdrisk::strategies_from_json(parse(strategies_text, "strategies"));
            space.validate(r.tree->asset_dim());
            const fdrisk::PriceResult res =
                fdrisk::price(r.handle.family(), space, s, t, as_variable(*r.tree, t, values));
            return py::dict(py::arg("price") = res.price.values,
                            py::arg("risk_with_claim") = res.risk_with_claim.values,
                            py::arg("risk_without") = res.risk_without.values,
                            py::arg("iterations") = res.diag.iterations);
        },
        py::arg("risk"), py::arg("strategies"), py::arg("s"), py::arg("t"), py::arg("values"));

    m.def(
        "bounds",
        [](const fdrisk::ScenarioTree& tree, int s, double delta, int t,
           const std::vector<double>& values) {
            const fdrisk::NodeVariable x = as_variable(tree, t, values);
            const fdrisk::NgdBound up = fdrisk::ngd_upper(tree, x, s, delta);
            const fdrisk::NgdBound lo = fdrisk::ngd_lower(tree, x, s, delta);
            return py::dict(py::arg("lower") = lo.value.values,
                            py::arg("upper") = up.value.values,
                            py::arg("pinned_upper") = up.pinned_count,
                            py::arg("pinned_lower") = lo.pinned_count);
        },
        py::arg("tree"), py::arg("s"), py::arg("delta"), py::arg("t"), py::arg("values"));

    m.def(
        "check_axioms",
        [](const PyRisk& r, int s, int t, int samples, std::uint64_t seed) {
            fdrisk::Rng rng(seed);
            std::vector<fdrisk::NodeVariable> xs;
            for (int i = 0; i < samples; ++i)
                xs.push_back(fdrisk::random_claim(rng, *r.tree, t));
            return to_py(fdrisk::check_axioms(r.handle.family(), s, t, xs).to_json());
        },
        py::arg("risk"), py::arg("s"), py::arg("t"), py::arg("samples") = 8,
        py::arg("seed") = 1);

    m.def(
        "check_strong_tc",
        [](const PyRisk& r, int rr, int s, int t, int samples, std::uint64_t seed) {
            fdrisk::Rng rng(seed);
            std::vector<fdrisk::NodeVariable> xs;
            for (int i = 0; i < samples; ++i)
                xs.push_back(fdrisk::random_claim(rng, *r.tree, t));
            return to_py(fdrisk::check_strong_tc(r.handle.family(), rr, s, t, xs).to_json());
        },
        py::arg("risk"), py::arg("r"), py::arg("s"), py::arg("t"), py::arg("samples") = 8,
        py::arg("seed") = 1);
}
