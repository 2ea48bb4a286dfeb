#pragma once

#include "remoteq/engine.hpp"
#include "remoteq/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace remoteq {

enum class PoolKind : std::uint8_t { ssp, mdsp };

struct PoolSpec
{
    PoolKind kind = PoolKind::ssp;
    double service_rate = 0.0; // aggregate mu; 0 means sum of station rates

    static PoolSpec for_scenario(const ScenarioConfig& cfg, PoolKind kind);
};

// Values just after t. The workloads jump at arrivals; gamma does not.
struct GapPoint
{
    double t = 0.0;
    double distributed = 0.0; // stationed workload, summed over stations
    double pool = 0.0;        // stationed workload of the pool
    double gamma = 0.0;       // SSP: distributed - pool; MDSP: also plus the en-route difference U - U-dagger
};

// Stationed workload of the pool just after each of its arrivals.
struct PoolSample
{
    double t = 0.0;
    double workload = 0.0;
    bool operator==(const PoolSample&) const = default;
};

struct CoupledRun
{
    PoolKind kind = PoolKind::ssp;
    double service_rate = 0.0;
    double n = 1.0;
    double burnin = 0.0;
    double horizon = 0.0;
    std::vector<GapPoint> gap;      // every kink of the piecewise-linear gap, time ordered
    std::vector<PoolSample> pool;   // pool path at its own arrival epochs
    double min_gap = 0.0;
    SampleStats distributed_stats;

    std::string gap_csv() const;
};

struct GapSupremum
{
    double sup = 0.0;
    double scaled = 0.0; // sup / sqrt(n)
};

// Runs the distributed system and the requested pool on the same appearances, origins,
// routing uniforms and service requirements. Both systems start empty.
CoupledRun run_coupled(const ScenarioConfig& cfg, const PoolSpec& pool, std::uint64_t replication);

// Same computation on an existing customer log (dispatch order) of a distributed run.
CoupledRun couple_log(const ScenarioConfig& resolved_cfg, const PoolSpec& pool,
                      const std::vector<CustomerRecord>& customers);

// Supremum of the gap over [t0, t1]. The gap is linear between stored points.
GapSupremum gap_supremum(const CoupledRun& run, double t0, double t1);
GapSupremum gap_supremum(const CoupledRun& run); // over [burnin, horizon]

} // namespace remoteq
