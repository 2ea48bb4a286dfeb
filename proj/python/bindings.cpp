#include "remoteq/bounds.hpp"
#include "remoteq/config_io.hpp"
#include "remoteq/core.hpp"
#include "remoteq/engine.hpp"
#include "remoteq/harness.hpp"
#include "remoteq/metrics.hpp"
#include "remoteq/planning.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace remoteq;

namespace {

// Scenarios cross the boundary as JSON text; the Python package converts dicts.
ScenarioConfig parse(const std::string& text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError(std::vector<Violation>{{"config", std::string("malformed JSON: ") + e.what()}});
    }
    return scenario_from_json(j);
}

py::dict stats_dict(const SampleStats& s)
{
    py::dict d;
    d["mtcc"] = s.time_avg_total_count;
    d["mean_wait"] = s.mean_wait;
    d["mean_travel"] = s.mean_travel;
    d["mean_time_to_service"] = s.mean_time_to_service;
    d["imbalance_sup"] = s.imbalance_sup;
    d["chi_emergent"] = s.chi_emergent;
    d["utilization"] = s.utilization;
    d["time_avg_count"] = s.time_avg_count;
    d["appearances"] = s.appearances;
    d["events"] = s.events;
    d["final_counts"] = s.final_counts;
    return d;
}

py::list rows_list(const std::vector<ResultRow>& rows)
{
    py::list out;
    for (const auto& r : rows)
    {
        py::dict d;
        d["scenario_id"] = r.scenario_id;
        d["policy"] = r.policy;
        d["chi"] = r.chi;
        d["delay"] = r.delay;
        d["rho"] = r.rho;
        d["metric"] = r.metric;
        d["mean"] = r.estimate.mean;
        d["half_width"] = r.estimate.half_width;
        d["reps"] = r.estimate.count;
        out.append(d);
    }
    return out;
}

PoolKind pool_kind(const std::string& s)
{
    if (s == "ssp")
    {
        return PoolKind::ssp;
    }
    if (s == "mdsp")
    {
        return PoolKind::mdsp;
    }
    throw std::invalid_argument("pool must be 'ssp' or 'mdsp'");
}

ChiRule chi_rule(const std::string& s)
{
    if (s == "fixed")
    {
        return ChiRule::fixed;
    }
    if (s == "root_excess")
    {
        return ChiRule::root_excess;
    }
    if (s == "corollary1")
    {
        return ChiRule::corollary1;
    }
    throw std::invalid_argument("rule must be fixed, root_excess or corollary1");
}

} // namespace

PYBIND11_MODULE(_remoteq, m)
{
    m.doc() = "Simulation and planning for remote queues under randomized shortest-queue routing";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PlanningError>(m, "PlanningError", PyExc_RuntimeError);
    py::register_exception<SimulationFault>(m, "SimulationFault", PyExc_RuntimeError);

    m.def("normalize", [](const std::string& text) { return scenario_to_json(parse(text)).dump(); },
          py::arg("scenario_json"));

    m.def(
        "validate",
        [](const std::string& text) {
            std::vector<std::string> out;
            for (const auto& v : validate_scenario(parse(text)))
            {
                out.push_back(v.field + ": " + v.reason);
            }
            return out;
        },
        py::arg("scenario_json"));

    m.def(
        "run",
        [](const std::string& text, std::uint64_t replication, bool record_customers) {
            const auto cfg = parse(text);
            RunOptions o;
            o.record_customers = record_customers;
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(cfg, replication, o);
            }
            py::dict d = stats_dict(r.stats);
            if (record_customers)
            {
                py::list customers;
                for (const auto& c : r.customers)
                {
                    customers.append(py::make_tuple(c.id, c.appear, c.arrive, c.station, c.requirement));
                }
                d["customers"] = customers;
            }
            if (!r.trajectory.t.empty())
            {
                d["trajectory_csv"] = r.trajectory.to_csv();
            }
            return d;
        },
        py::arg("scenario_json"), py::arg("replication") = 0, py::arg("record_customers") = false);

    m.def(
        "simulate",
        [](const std::string& text, std::size_t reps, std::size_t parallel) {
            const auto cfg = parse(text);
            std::vector<SampleStats> stats;
            {
                py::gil_scoped_release release;
                stats = run_replications(cfg, reps, parallel);
            }
            return rows_list(summarize(cfg, stats));
        },
        py::arg("scenario_json"), py::arg("reps") = 500, py::arg("parallel") = 1);

    m.def(
        "sweep",
        [](const std::string& text, const std::string& variable, const std::vector<double>& grid, std::size_t reps,
           std::size_t parallel) {
            SweepSpec spec;
            spec.base = parse(text);
            spec.variable = variable;
            spec.grid = grid;
            spec.reps = reps;
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = run_sweep(spec, parallel);
            }
            py::list points;
            for (const auto& p : r.points)
            {
                points.append(py::make_tuple(p.value, p.mtcc.mean, p.mtcc.half_width));
            }
            py::dict d;
            d["points"] = points;
            d["argmin"] = r.argmin;
            return d;
        },
        py::arg("scenario_json"), py::arg("variable"), py::arg("grid"), py::arg("reps") = 500,
        py::arg("parallel") = 1);

    m.def(
        "scaling",
        [](const std::vector<double>& n_grid, const std::string& rule, double constant, std::size_t reps,
           std::uint64_t seed, std::size_t parallel) {
            ScalingSpec spec;
            spec.n_grid = n_grid;
            spec.rule = chi_rule(rule);
            spec.constant = constant;
            spec.reps = reps;
            spec.seed = seed;
            ScalingResult r;
            {
                py::gil_scoped_release release;
                r = run_scaling(spec, parallel);
            }
            py::list points;
            for (const auto& p : r.points)
            {
                points.append(py::make_tuple(p.n, p.chi, p.median_scaled_imbalance));
            }
            py::dict d;
            d["points"] = points;
            d["slope"] = r.slope;
            d["slope_se"] = r.slope_se;
            return d;
        },
        py::arg("n_grid"), py::arg("rule") = "corollary1", py::arg("constant") = 0.4, py::arg("reps") = 40,
        py::arg("seed") = 1, py::arg("parallel") = 1);

    m.def(
        "plan",
        [](const std::string& text, bool exact_width) {
            PlanOptions o;
            o.width_model = exact_width ? WidthModel::exact : WidthModel::band;
            const auto report = run_plan(parse(text), o);
            auto j = plan_to_json(report);
            j["derived_scenario"] = scenario_to_json(report.derived);
            return j.dump();
        },
        py::arg("scenario_json"), py::arg("exact_width") = false);

    m.def(
        "coupled",
        [](const std::string& text, const std::string& pool, std::size_t reps) {
            const auto cfg = parse(text);
            CoupledSummary s;
            {
                py::gil_scoped_release release;
                s = run_coupled_replications(cfg, pool_kind(pool), reps);
            }
            py::dict d;
            d["min_gap"] = s.min_gap;
            d["sup_gap"] = s.sup_gap;
            d["scaled_sup_gap"] = s.scaled_sup_gap;
            return d;
        },
        py::arg("scenario_json"), py::arg("pool") = "ssp", py::arg("reps") = 10);

    m.def(
        "table",
        [](const std::string& id, std::size_t reps, std::uint64_t seed, std::size_t parallel) {
            py::gil_scoped_release release;
            return run_table(id, reps, seed, parallel);
        },
        py::arg("id"), py::arg("reps") = 500, py::arg("seed") = 1, py::arg("parallel") = 1);

    m.def(
        "solve_transportation",
        [](const std::vector<double>& supply, const std::vector<double>& demand, const std::vector<double>& cost) {
            const auto s = solve_transportation(supply, demand, cost);
            return py::make_tuple(s.flow, s.objective);
        },
        py::arg("supply"), py::arg("demand"), py::arg("cost"));

    m.def("oscillation_index",
          [](const std::vector<double>& series, std::size_t min_lag) { return oscillation_index(series, min_lag); },
          py::arg("series"), py::arg("min_lag"));

    m.def("n_from_rho", &n_from_rho, py::arg("rho"));
}
