#pragma once

// Domain types shared by every module. All times are minutes, all rates are
// per minute, all station/origin indices are 0-based.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace remoteq {

enum class DistKind : std::uint8_t { exponential, deterministic, lognormal, hyperexponential };

// A nonnegative distribution normalized to mean 1.
struct DistDescriptor
{
    DistKind kind = DistKind::exponential;
    // lognormal: variance of the mean-1 law.
    double variance = 1.0;
    // hyperexponential: branch probabilities and branch means (sum p_i m_i == 1).
    std::vector<double> probs;
    std::vector<double> means;

    static DistDescriptor exponential() { return {}; }
    static DistDescriptor deterministic() { return {DistKind::deterministic, 0.0, {}, {}}; }
    static DistDescriptor lognormal(double variance) { return {DistKind::lognormal, variance, {}, {}}; }
    static DistDescriptor hyperexponential(std::vector<double> probs, std::vector<double> means)
    {
        return {DistKind::hyperexponential, 0.0, std::move(probs), std::move(means)};
    }
};

struct StationConfig
{
    double service_rate = 1.0;
    DistDescriptor service;
};

struct OriginSpec
{
    double probability = 1.0;
    std::vector<double> delays; // one per station
};

struct Point2
{
    double x = 0.0;
    double y = 0.0;
};

struct Rect
{
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    double area() const { return (x1 - x0) * (y1 - y0); }
    bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

// Customers appear uniformly over `region` and travel in a straight line.
struct GeographicSpec
{
    Rect region{0.0, 0.0, 20.0, 20.0};
    std::vector<Point2> stations;
    double speed = 0.1; // km per minute
};

// Dense row-major b x s matrix of routing proportions r[m][k].
class RoutingPlan
{
public:
    RoutingPlan() = default;
    RoutingPlan(std::size_t origins, std::size_t stations, double fill = 0.0)
        : rows_(origins), cols_(stations), data_(origins * stations, fill)
    {
    }
    static RoutingPlan from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t origins() const { return rows_; }
    std::size_t stations() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t m, std::size_t k) const { return data_[m * cols_ + k]; }
    double& operator()(std::size_t m, std::size_t k) { return data_[m * cols_ + k]; }

    std::vector<std::vector<double>> to_rows() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct TrafficSpec
{
    double appearance_rate = 0.0;
    DistDescriptor interappearance;
    double rho = 0.0; // derived: appearance_rate / total service rate
    double n = 0.0;   // heavy-traffic index; 1/(1-rho)^2 unless given explicitly
};

enum class PolicyKind : std::uint8_t { jsq, random_proportional, rjsq_unaware, rjsq_aware, tolerance_geo };
enum class TieRule : std::uint8_t { lowest_index, random };
enum class ToleranceMode : std::uint8_t { deterministic, probabilistic };

struct PolicySpec
{
    PolicyKind kind = PolicyKind::rjsq_unaware;
    TieRule tie_rule = TieRule::lowest_index;
    double chi = 0.0;
    // Optional explicit perturbation vector by rank; default_perturbation() otherwise.
    std::vector<double> eps;
    // Routing plan for rjsq_aware.
    RoutingPlan plan;
    // tolerance_geo
    double tau_bar = 0.0; // minutes, may be +inf
    ToleranceMode tolerance_mode = ToleranceMode::deterministic;
    std::vector<double> p_prime; // border masses for the probabilistic rule
};

// Where the service requirement of a customer comes from.
//  per_station:  the i-th customer dispatched to station k takes the i-th draw of stream service(k).
//  per_customer: customer j takes the j-th draw of a single common stream (station-independent
//                requirements; all stations must share one service law).
enum class ServiceAssignment : std::uint8_t { per_station, per_customer };

struct ScenarioConfig
{
    std::string id = "scenario";
    std::vector<StationConfig> stations;
    std::vector<OriginSpec> origins;
    bool delays_scaled = false; // multiply origin delays by sqrt(n)
    std::optional<GeographicSpec> geography;
    TrafficSpec traffic;
    PolicySpec policy;
    ServiceAssignment service_assignment = ServiceAssignment::per_station;
    double horizon_min = 2.0e5;
    double burnin_min = 6.0e4;
    std::uint64_t seed = 1;
    double sample_dt = 0.0; // trajectory sampling period, 0 disables

    double total_service_rate() const;
};

std::string to_string(PolicyKind kind);
std::string to_string(DistKind kind);

} // namespace remoteq
