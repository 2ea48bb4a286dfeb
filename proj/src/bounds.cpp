#include "remoteq/bounds.hpp"

#include "remoteq/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace remoteq {

PoolSpec PoolSpec::for_scenario(const ScenarioConfig& cfg, PoolKind kind)
{
    return PoolSpec{kind, cfg.total_service_rate()};
}

std::string CoupledRun::gap_csv() const
{
    std::ostringstream out;
    out.precision(12);
    out << "t,gamma\n";
    for (const auto& p : gap)
    {
        out << p.t << ',' << p.gamma << '\n';
    }
    return out.str();
}

namespace {

struct PathEvent
{
    double t;
    std::uint64_t id;
    bool pool; // false: arrival at a station of the distributed system
    int station;
    double requirement;
};

// Work-conserving single-server workload draining at a fixed rate.
struct Drain
{
    double rate = 1.0;
    double level = 0.0;
    double since = 0.0;

    double at(double t) const { return std::max(level - rate * (t - since), 0.0); }
    double empties() const { return since + level / rate; }
    void advance(double t)
    {
        level = at(t);
        since = t;
    }
};

} // namespace

CoupledRun couple_log(const ScenarioConfig& cfg, const PoolSpec& spec, const std::vector<CustomerRecord>& customers)
{
    const std::size_t s = cfg.stations.size();
    CoupledRun out;
    out.kind = spec.kind;
    out.service_rate = spec.service_rate > 0.0 ? spec.service_rate : cfg.total_service_rate();
    out.n = cfg.traffic.n > 0.0 ? cfg.traffic.n : 1.0;
    out.burnin = cfg.burnin_min;
    out.horizon = cfg.horizon_min;
    const double horizon = cfg.horizon_min;

    std::vector<PathEvent> events;
    events.reserve(2 * customers.size());
    for (const auto& c : customers)
    {
        if (c.arrive <= horizon)
        {
            events.push_back({c.arrive, c.id, false, c.station, c.requirement});
        }
        const double pool_arrive = spec.kind == PoolKind::ssp ? c.arrive : c.appear + c.min_delay;
        if (pool_arrive > c.arrive)
        {
            throw SimulationFault("coupling violation: pool arrival after distributed arrival for customer " +
                                  std::to_string(c.id));
        }
        if (pool_arrive <= horizon)
        {
            events.push_back({pool_arrive, c.id, true, -1, c.requirement});
        }
    }
    std::sort(events.begin(), events.end(), [](const PathEvent& a, const PathEvent& b) {
        if (a.t != b.t)
        {
            return a.t < b.t;
        }
        if (a.id != b.id)
        {
            return a.id < b.id;
        }
        return a.pool && !b.pool;
    });

    std::vector<Drain> stations(s);
    for (std::size_t k = 0; k < s; ++k)
    {
        stations[k].rate = cfg.stations[k].service_rate;
    }
    Drain pool{out.service_rate, 0.0, 0.0};
    double en_route_diff = 0.0; // U - U-dagger (MDSP only)
    std::int64_t en_route_gap_count = 0;
    const bool mdsp = spec.kind == PoolKind::mdsp;

    auto record = [&](double t) {
        double w = 0.0;
        for (const auto& st : stations)
        {
            w += st.at(t);
        }
        const double p = pool.at(t);
        const double g = w - p + (mdsp ? en_route_diff : 0.0);
        out.gap.push_back({t, w, p, g});
        out.min_gap = std::min(out.min_gap, g);
    };

    out.gap.reserve(2 * events.size() + 2);
    record(0.0);
    double last = 0.0;
    std::vector<double> kinks;
    auto advance_to = [&](double t) {
        // Emptying instants strictly between the previous epoch and t are kinks of the gap.
        kinks.clear();
        for (const auto& st : stations)
        {
            if (st.level > 0.0 && st.empties() > last && st.empties() < t)
            {
                kinks.push_back(st.empties());
            }
        }
        if (pool.level > 0.0 && pool.empties() > last && pool.empties() < t)
        {
            kinks.push_back(pool.empties());
        }
        std::sort(kinks.begin(), kinks.end());
        for (double tk : kinks)
        {
            record(tk);
        }
        for (auto& st : stations)
        {
            st.advance(t);
        }
        pool.advance(t);
        last = t;
    };

    std::size_t i = 0;
    while (i < events.size())
    {
        const double t = events[i].t;
        advance_to(t);
        bool pool_arrival = false;
        for (; i < events.size() && events[i].t == t; ++i)
        {
            const auto& e = events[i];
            if (e.pool)
            {
                pool_arrival = true;
                pool.level += e.requirement;
                if (mdsp)
                {
                    en_route_diff += e.requirement;
                    ++en_route_gap_count;
                }
            }
            else
            {
                stations[static_cast<std::size_t>(e.station)].level += e.requirement;
                if (mdsp)
                {
                    en_route_diff -= e.requirement;
                    if (--en_route_gap_count == 0)
                    {
                        en_route_diff = 0.0;
                    }
                }
            }
        }
        if (en_route_gap_count < 0)
        {
            throw SimulationFault("coupling violation: distributed arrival precedes pool arrival");
        }
        if (pool_arrival)
        {
            out.pool.push_back({t, pool.level});
        }
        record(t);
    }
    if (last < horizon)
    {
        advance_to(horizon);
        record(horizon);
    }
    return out;
}

CoupledRun run_coupled(const ScenarioConfig& cfg_in, const PoolSpec& pool, std::uint64_t replication)
{
    if (auto v = validate_scenario(cfg_in); !v.empty())
    {
        throw ConfigError(std::move(v));
    }
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    RunOptions options;
    options.record_customers = true;
    auto result = run(cfg, replication, options);
    auto coupled = couple_log(cfg, pool, result.customers);
    coupled.distributed_stats = std::move(result.stats);
    return coupled;
}

GapSupremum gap_supremum(const CoupledRun& run, double t0, double t1)
{
    GapSupremum out;
    const auto& g = run.gap;
    for (std::size_t i = 0; i < g.size(); ++i)
    {
        if (g[i].t >= t0 && g[i].t <= t1)
        {
            out.sup = std::max(out.sup, g[i].gamma);
        }
        // Window ends falling between stored points: interpolate.
        if (i + 1 < g.size() && g[i].t < g[i + 1].t)
        {
            for (double edge : {t0, t1})
            {
                if (edge > g[i].t && edge < g[i + 1].t)
                {
                    const double a = (edge - g[i].t) / (g[i + 1].t - g[i].t);
                    out.sup = std::max(out.sup, g[i].gamma + a * (g[i + 1].gamma - g[i].gamma));
                }
            }
        }
    }
    out.scaled = out.sup / std::sqrt(run.n);
    return out;
}

GapSupremum gap_supremum(const CoupledRun& run)
{
    return gap_supremum(run, run.burnin, run.horizon);
}

} // namespace remoteq
