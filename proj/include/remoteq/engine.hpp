#pragma once

#include "remoteq/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace remoteq {

// Per-replication statistics over the window [burnin, horizon].
//
// Count-based quantities (MTCC, utilization, imbalance) are time integrals. Customer
// averages (wait, travel, time to service) cover customers that appeared inside the window
// and started service by the horizon; customers still waiting at the horizon are excluded.
struct SampleStats
{
    double window = 0.0;
    double time_avg_total_count = 0.0; // MTCC contribution
    double mean_wait = 0.0;
    double mean_travel = 0.0;
    double mean_time_to_service = 0.0;
    double imbalance_sup = 0.0;   // sup over the window of max_k L_k - min_k L_k
    double chi_emergent = 0.0;    // share of in-window dispatches sent to a non-nearest station
    std::vector<double> utilization;
    std::vector<double> time_avg_count; // per station

    std::uint64_t appearances = 0;       // over [0, horizon]
    std::uint64_t window_appearances = 0;
    std::uint64_t served_in_window = 0;  // customers entering the customer averages
    std::uint64_t events = 0;
    std::vector<std::uint64_t> arrivals;   // A_k at the horizon
    std::vector<std::uint64_t> departures; // per station at the horizon
    std::uint64_t en_route_at_horizon = 0;
    std::vector<int> final_counts;
};

// One row per sampling instant: t, Q_1..Q_s, W_1..W_s, U (workloads in service-requirement units).
struct Trajectory
{
    std::size_t stations = 0;
    std::vector<double> t;
    std::vector<int> q;     // t.size() x stations
    std::vector<double> w;  // t.size() x stations
    std::vector<double> u;

    std::string to_csv() const;
};

enum class EventType : std::uint8_t { completion = 0, arrival = 1, appearance = 2 };

struct EventRecord
{
    double time = 0.0;
    EventType type = EventType::appearance;
    int station = -1;
    std::uint64_t customer = 0;
    bool operator==(const EventRecord&) const = default;
};

// Piecewise-constant station counts: counts in force from time[i] until time[i+1].
struct CountPath
{
    std::size_t stations = 0;
    std::vector<double> time;
    std::vector<int> counts; // time.size() x stations
};

struct CustomerRecord
{
    std::uint64_t id = 0;
    double appear = 0.0;
    double arrive = 0.0;     // at the chosen station
    double min_delay = 0.0;  // smallest delay over stations from this customer's location
    double requirement = 0.0;
    int origin = -1;
    int station = 0;
};

struct RunOptions
{
    bool record_events = false;
    bool record_customers = false;
    bool record_count_path = false;
    std::size_t max_pending = 50'000'000; // en-route overflow guard
};

struct RunResult
{
    SampleStats stats;
    Trajectory trajectory;             // filled when cfg.sample_dt > 0
    std::vector<EventRecord> events;   // when record_events
    std::vector<CustomerRecord> customers; // dispatch order, when record_customers
    CountPath count_path;              // when record_count_path
};

// Raised when the simulation reaches an impossible state.
class SimulationFault : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ReplicationError : public std::runtime_error
{
public:
    ReplicationError(std::size_t replication, const std::string& what)
        : std::runtime_error("replication " + std::to_string(replication) + ": " + what), replication_(replication)
    {
    }
    std::size_t replication() const { return replication_; }

private:
    std::size_t replication_;
};

// Simulates [0, horizon] from an empty system. Throws ConfigError on an invalid scenario.
RunResult run(const ScenarioConfig& cfg, std::uint64_t replication, const RunOptions& options = {});

// Replications 0..count-1 spread over `parallelism` threads (0 = hardware concurrency).
std::vector<SampleStats> run_replications(const ScenarioConfig& cfg, std::size_t count, std::size_t parallelism = 1);

} // namespace remoteq
