#pragma once

#include "remoteq/types.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace remoteq {

class PlanningError : public std::runtime_error
{
public:
    PlanningError(const std::string& what, int station = -1)
        : std::runtime_error(what), station_(station)
    {
    }
    int station() const { return station_; } // 0-based, -1 when not station specific

private:
    int station_;
};

// Discrete origin law: probabilities p_m and delays d_{m,k} (minutes).
struct OriginSet
{
    std::vector<double> probs;
    std::vector<std::vector<double>> delays;

    std::size_t origins() const { return probs.size(); }
    std::size_t stations() const { return delays.empty() ? 0 : delays.front().size(); }
    static OriginSet from_scenario(const ScenarioConfig& cfg);
};

struct TransportSolution
{
    std::vector<double> flow; // row-major supplies x demands
    double objective = 0.0;
    std::size_t pivots = 0;
};

// Balanced transportation problem min sum c x, row sums = supply, column sums = demand.
// Northwest-corner start, u-v potentials, Bland's rule on the lexicographic (row, col) index.
TransportSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                       std::span<const double> cost);

struct PlanningResult
{
    std::vector<double> capacities;
    RoutingPlan plan;
    double objective = 0.0; // mean traveling delay, minutes
    bool gbc = false;
};

// Capacities and plan minimizing mean traveling delay with capacities free (total mu_total).
// Every origin goes to its nearest station, lowest index on ties.
PlanningResult solve_joint_lp(const OriginSet& origins, double mu_total);

// Plan minimizing mean traveling delay for fixed capacities.
RoutingPlan solve_routing_lp(const OriginSet& origins, std::span<const double> capacities);

double plan_objective(const OriginSet& origins, const RoutingPlan& plan);

// r_{m,k} > tol only where d_{m,k} equals the smallest delay of origin m.
bool is_gbc(const OriginSet& origins, const RoutingPlan& plan, double tol = 1e-9);

struct BorderStructure
{
    std::vector<int> zone;                 // nearest station of each origin (discrete only)
    std::vector<std::vector<int>> borders; // N'_k (discrete only)
    std::vector<double> zone_mass;         // probability of N_k
    std::vector<double> p_prime;           // probability of N'_k
    double border_mass = 0.0;              // probability of the union of the N'_k
    std::vector<std::string> warnings;
};

BorderStructure build_borders(const OriginSet& origins, double tau_bar);

// Uniform origins over the region, evaluated by Monte Carlo on the monte_carlo stream.
BorderStructure build_borders(const GeographicSpec& geo, double tau_bar, std::size_t samples = 1'000'000,
                              std::uint64_t seed = 1);

// Geometry of the nearest-station partition of the region.
struct VoronoiCell
{
    std::vector<Point2> polygon; // counter-clockwise
    double area = 0.0;
};

struct BorderSegment
{
    Point2 a;
    Point2 b;
    int left = 0; // the two stations equidistant along the segment
    int right = 0;
};

std::vector<VoronoiCell> voronoi_cells(const GeographicSpec& geo);
std::vector<BorderSegment> border_segments(const GeographicSpec& geo);
double border_length(const GeographicSpec& geo);

// Capacities proportional to zone areas and the nearest-station plan over a grid of cell centres.
OriginSet discretize(const GeographicSpec& geo, std::size_t nx, std::size_t ny);
std::vector<double> zone_capacities(const GeographicSpec& geo, double mu_total);

double chi_root_excess(double rho, double c_star = 0.4);
double chi_reciprocal_root(double gamma_hat, double c_dstar = 0.4);
// Two-station form with a common delay of delay_min minutes: c / sqrt(delay_min).
double chi_for_delay(double delay_min, double c_dstar = 0.4);

struct ExtraDelay
{
    double gamma_bar = 0.0; // minutes, primitive
    double gamma_hat = 0.0;
};

enum class DelayMode : std::uint8_t { unaware, aware };

// Mean delay of the additional shortest-queue customers. When delays_scaled, d are primitive
// and gamma_hat = gamma_bar / (1 - rho); otherwise gamma_hat = gamma_bar.
ExtraDelay mean_extra_delay(const OriginSet& origins, DelayMode mode, double rho, bool delays_scaled,
                            const BorderStructure* borders = nullptr);

// Mean distance from the border lines to the adjacent stations, weighted by border length,
// converted to minutes at geo.speed.
ExtraDelay mean_extra_delay(const GeographicSpec& geo);

enum class WidthModel : std::uint8_t {
    band,  // border area = border length x speed x tau_bar
    exact, // Monte Carlo border area, inverted by bisection
};

struct TauOptions
{
    WidthModel model = WidthModel::band;
    double round_to = 1.0; // minutes; 0 keeps the raw value
    std::size_t samples = 200'000;
    std::uint64_t seed = 1;
};

// tau_bar whose border region carries probability s x chi_target.
double tau_from_chi(const GeographicSpec& geo, double chi_target, const TauOptions& options = {});

} // namespace remoteq
