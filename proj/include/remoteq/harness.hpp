#pragma once

#include "remoteq/bounds.hpp"
#include "remoteq/metrics.hpp"
#include "remoteq/planning.hpp"
#include "remoteq/types.hpp"

#include "json.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace remoteq {

// Exit codes of the command-line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<double> horizon;
    std::optional<double> burnin;
    std::optional<double> sample_dt;
    std::optional<double> chi;
    std::optional<double> tau_bar;
    std::optional<double> delay; // replaces every entry of the delay matrix
    std::optional<double> rho;
};

void apply_overrides(ScenarioConfig& cfg, const Overrides& o);

// Builders for the standard experiments.
// s identical stations (rate 1), one origin with the same delay to all, RJSQ unaware.
ScenarioConfig make_symmetric(std::size_t stations, double rho, double delay_min, double chi);
// Three stations in the 20 km square, capacities (1, 1.5, 1.5), lambda = 3.96, tolerance rule.
ScenarioConfig make_geographic(double tau_bar, const DistDescriptor& service);

// chi at which RJSQ sends everyone to the shortest queue: (s-1) min mu_k / mu.
double jsq_chi(const ScenarioConfig& cfg);

// "Delay" column: mean smallest delay over origins (discrete) or 0 for geographic scenarios.
double delay_descriptor(const ScenarioConfig& cfg);

std::vector<ResultRow> summarize(const ScenarioConfig& cfg, const std::vector<SampleStats>& stats);

struct SweepSpec
{
    ScenarioConfig base;
    std::string variable = "chi"; // chi | tau_bar | delay | rho | n
    std::vector<double> grid;
    std::size_t reps = 500;
};

struct SweepPoint
{
    double value = 0.0;
    Estimate mtcc;
    std::vector<ResultRow> rows;
};

struct SweepResult
{
    std::vector<SweepPoint> points;
    double argmin = 0.0; // grid value with the smallest mean MTCC, first on ties
};

ScenarioConfig sweep_scenario(const SweepSpec& spec, double value);
SweepResult run_sweep(const SweepSpec& spec, std::size_t parallel = 1);

// MTCC-minimizing chi: a coarse grid of step `coarse` over [0, chi_max], refined with step
// `fine` over +-coarse around the coarse argmin. Every point reuses replications 0..reps-1.
struct ChiSearch
{
    double chi_opt = 0.0;
    Estimate cc_opt;
    std::vector<std::pair<double, double>> curve; // (chi, mean MTCC), ascending chi
};
ChiSearch search_chi(const ScenarioConfig& base, std::size_t reps, double coarse = 0.01, double fine = 0.002,
                     std::size_t parallel = 1);

enum class ChiRule : std::uint8_t { fixed, root_excess, corollary1 };

struct ScalingSpec
{
    std::vector<double> n_grid{100, 400, 1600, 6400};
    ChiRule rule = ChiRule::corollary1;
    double constant = 0.4;
    double d = 1.0;      // primitive delay; the traveling delay is sqrt(n) d
    double T = 50.0;     // horizon n T, no burn-in
    std::size_t reps = 40;
    std::uint64_t seed = 1;
};

struct ScalingPoint
{
    double n = 0.0;
    double chi = 0.0;
    double median_scaled_imbalance = 0.0;
    std::vector<double> scaled_imbalance; // per replication
};

struct ScalingResult
{
    std::vector<ScalingPoint> points;
    double slope = 0.0;
    double slope_se = 0.0;
};

double scaling_chi(ChiRule rule, double constant, double n);
ScenarioConfig scaling_scenario(const ScalingSpec& spec, double n);
// Throws std::invalid_argument when fewer than 3 distinct n are given.
ScalingResult run_scaling(const ScalingSpec& spec, std::size_t parallel = 1);

struct LineFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

enum class CapacitySource : std::uint8_t { joint, config };

struct PlanOptions
{
    CapacitySource capacities = CapacitySource::joint;
    WidthModel width_model = WidthModel::band;
    double c_dstar = 0.4;
    std::size_t grid = 200; // cells per axis for the discretized geographic LP
};

struct PlanReport
{
    PlanningResult joint;
    std::vector<double> grid_capacities;   // geographic only
    RoutingPlan routing;                   // discrete only, for the chosen capacities
    double routing_objective = 0.0;
    ExtraDelay extra_delay;
    double chi_dstar = 0.0;
    double tau_bar = 0.0;                  // geographic only
    BorderStructure borders;
    ScenarioConfig derived;
};

PlanReport run_plan(const ScenarioConfig& cfg, const PlanOptions& options = {});
nlohmann::json plan_to_json(const PlanReport& report);

// Result tables t1, t2, t3; returns the CSV text.
std::string run_table(const std::string& id, std::size_t reps, std::uint64_t seed, std::size_t parallel = 1,
                      double coarse = 0.01, double fine = 0.002);

struct CoupledSummary
{
    std::vector<double> min_gap;
    std::vector<double> sup_gap;
    std::vector<double> scaled_sup_gap;
};
CoupledSummary run_coupled_replications(const ScenarioConfig& cfg, PoolKind kind, std::size_t reps);

// Command-line entry point; argv as given to main.
int cli_main(int argc, char** argv);

} // namespace remoteq
