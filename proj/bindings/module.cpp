#include "nrmc/experiment.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nrmc;

namespace {

py::dict result_to_dict(const ExperimentResult& res) {
    py::dict out;

    py::list occupancy, display;
    for (int v = 0; v < res.occupancy.vertex_count(); ++v) {
        occupancy.append(res.occupancy.occupancy(v));
        display.append(res.occupancy.display(v));
    }
    out["occupancy"] = occupancy;
    out["occupancy_display"] = display;

    py::list transitions;
    for (const auto& row : res.transitions.count) {
        py::list r;
        for (std::int64_t v : row) r.append(v);
        transitions.append(r);
    }
    out["transitions"] = transitions;

    py::list chains;
    for (const ChainResult& c : res.chains) {
        py::dict d;
        d["steps"] = c.steps;
        d["accepted"] = c.accepted;
        d["acceptance_rate"] = c.acceptance_rate();
        d["forced_flips"] = c.forced_flips;
        d["frozen"] = c.frozen;
        d["metastate_steps"] = c.metastate_steps;
        d["final_labels"] = c.labels;
        chains.append(d);
    }
    out["chains"] = chains;

    py::list g_curve;
    for (const GPoint& p : res.g_curve) {
        py::dict d;
        d["t"] = p.lag;
        d["g"] = p.g;
        d["ci_low"] = p.ci_low;
        d["ci_high"] = p.ci_high;
        g_curve.append(d);
    }
    out["g_curve"] = g_curve;
    out["wall_seconds"] = res.wall_seconds;
    return out;
}

} // namespace

PYBIND11_MODULE(_nrmc, m) {
    m.doc() = "Redistricting samplers: reversible single-node-flip and non-reversible "
              "flow-guided variants";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<PrecinctGraph>(m, "Graph")
        .def_static("lattice", &PrecinctGraph::lattice, py::arg("width"), py::arg("height"))
        .def_static("from_json", &PrecinctGraph::from_json_text, py::arg("text"))
        .def_property_readonly("vertex_count", &PrecinctGraph::vertex_count)
        .def_property_readonly("edge_count", &PrecinctGraph::edge_count)
        .def("neighbors",
             [](const PrecinctGraph& g, int v) {
                 auto span = g.neighbors(v);
                 return std::vector<int>(span.begin(), span.end());
             },
             py::arg("v"))
        .def("to_json", &PrecinctGraph::to_json_text);

    py::class_<Plan>(m, "Plan")
        .def(py::init<const PrecinctGraph&, std::vector<int>, int>(), py::arg("graph"),
             py::arg("labels"), py::arg("num_districts"), py::keep_alive<1, 2>())
        .def_property_readonly("labels", &Plan::labels)
        .def_property_readonly("district_count", &Plan::district_count)
        .def("district_pop", &Plan::district_pop, py::arg("district"))
        .def("cut_edge_count", &Plan::cut_edge_count)
        .def("cut_boundary_length", &Plan::cut_boundary_length)
        .def("to_csv", &plan_to_csv);

    py::class_<ScoreSpec>(m, "ScoreSpec")
        .def(py::init<>())
        .def_readwrite("w_pop", &ScoreSpec::w_pop)
        .def_readwrite("w_compact", &ScoreSpec::w_compact)
        .def_readwrite("pop_min", &ScoreSpec::pop_min)
        .def_readwrite("pop_max", &ScoreSpec::pop_max)
        .def_readwrite("pop_target", &ScoreSpec::pop_target)
        .def_readwrite("compact_scale", &ScoreSpec::compact_scale);

    py::class_<ValiditySpec>(m, "ValiditySpec")
        .def(py::init<>())
        .def_readwrite("pop_min", &ValiditySpec::pop_min)
        .def_readwrite("pop_max", &ValiditySpec::pop_max)
        .def_readwrite("require_connected", &ValiditySpec::require_connected)
        .def_readwrite("require_simply_connected", &ValiditySpec::require_simply_connected);

    m.def("total_score", &total_score, py::arg("plan"), py::arg("score"));
    m.def("is_valid", &is_valid, py::arg("plan"), py::arg("validity"));
    m.def("load_plan_csv", &load_plan_csv, py::arg("graph"), py::arg("text"),
          py::arg("num_districts"), py::keep_alive<0, 1>());

    m.def(
        "run_experiment",
        [](const std::string& config_text, bool resume) {
            const auto config = ExperimentConfig::from_json_text(config_text);
            ExperimentResult res = [&] {
                py::gil_scoped_release release;
                return run_experiment(config, resume);
            }();
            return result_to_dict(res);
        },
        py::arg("config"), py::arg("resume") = false,
        "Run an experiment from a JSON configuration string and return the merged "
        "diagnostics as a dict.");
}
