#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "remoteq/bounds.hpp"
#include "remoteq/core.hpp"
#include "remoteq/engine.hpp"
#include "remoteq/stochastics.hpp"

#include <algorithm>
#include <cmath>

using namespace remoteq;

namespace {

ScenarioConfig two_origin(PolicyKind kind, double chi)
{
    ScenarioConfig c;
    c.id = "coupling";
    c.stations = {StationConfig{1.0, {}}, StationConfig{1.5, {}}};
    c.origins = {OriginSpec{0.6, {2.0, 6.0}}, OriginSpec{0.4, {5.0, 1.0}}};
    c.traffic.rho = 0.9;
    c.policy.kind = kind;
    c.policy.chi = chi;
    c.horizon_min = 4000.0;
    c.burnin_min = 500.0;
    c.seed = 21;
    c.service_assignment = ServiceAssignment::per_customer;
    resolve_traffic(c);
    return c;
}

// Reflected workload at t by the supremum formula: max over arrivals a_j <= t of
// (work arriving in [a_j, t]) - rate (t - a_j), floored at 0.
double reflected(const std::vector<std::pair<double, double>>& arrivals, double rate, double t)
{
    double best = 0.0;
    double tail = 0.0;
    for (auto it = arrivals.rbegin(); it != arrivals.rend(); ++it)
    {
        if (it->first > t)
        {
            continue;
        }
        tail += it->second;
        best = std::max(best, tail - rate * (t - it->first));
    }
    return best;
}

GapPoint interpolate(const CoupledRun& run, double t)
{
    auto it = std::upper_bound(run.gap.begin(), run.gap.end(), t,
                               [](double x, const GapPoint& p) { return x < p.t; });
    REQUIRE(it != run.gap.begin());
    REQUIRE(it != run.gap.end());
    const auto& a = *(it - 1);
    const auto& b = *it;
    const double f = (t - a.t) / (b.t - a.t);
    return {t, a.distributed + f * (b.distributed - a.distributed), a.pool + f * (b.pool - a.pool),
            a.gamma + f * (b.gamma - a.gamma)};
}

} // namespace

TEST_CASE("gap is nonnegative for both pools")
{
    for (auto kind : {PolicyKind::jsq, PolicyKind::rjsq_unaware})
    {
        const auto c = two_origin(kind, 0.1);
        for (auto pk : {PoolKind::ssp, PoolKind::mdsp})
        {
            for (std::uint64_t rep = 0; rep < 3; ++rep)
            {
                const auto r = run_coupled(c, PoolSpec::for_scenario(c, pk), rep);
                CHECK(r.min_gap >= -1e-9);
                CHECK(r.gap.size() > 1000);
            }
        }
    }
}

TEST_CASE("stored workloads agree with an independent reflected-path oracle")
{
    const auto c = two_origin(PolicyKind::rjsq_unaware, 0.1);
    RunOptions o;
    o.record_customers = true;
    const auto log = run(c, 0, o);
    for (auto pk : {PoolKind::ssp, PoolKind::mdsp})
    {
        const auto cr = couple_log(c, PoolSpec::for_scenario(c, pk), log.customers);
        std::vector<std::vector<std::pair<double, double>>> station(2);
        std::vector<std::pair<double, double>> pool;
        for (const auto& cust : log.customers)
        {
            station[cust.station].push_back({cust.arrive, cust.requirement});
            pool.push_back({pk == PoolKind::ssp ? cust.arrive : cust.appear + cust.min_delay, cust.requirement});
        }
        for (auto& v : station)
        {
            std::sort(v.begin(), v.end());
        }
        std::sort(pool.begin(), pool.end());
        for (const auto& p : cr.gap)
        {
            const double w = reflected(station[0], 1.0, p.t) + reflected(station[1], 1.5, p.t);
            CHECK(p.distributed == doctest::Approx(w).epsilon(1e-9).scale(1.0));
            CHECK(p.pool == doctest::Approx(reflected(pool, 2.5, p.t)).epsilon(1e-9).scale(1.0));
        }
        // The gap itself is continuous and piecewise linear between stored points.
        Rng g(5);
        for (int i = 0; i < 200; ++i)
        {
            const double t = 1.0 + g.uniform() * (c.horizon_min - 2.0);
            double gamma = reflected(station[0], 1.0, t) + reflected(station[1], 1.5, t) - reflected(pool, 2.5, t);
            if (pk == PoolKind::mdsp)
            {
                for (const auto& cust : log.customers)
                {
                    if (cust.appear + cust.min_delay <= t && t < cust.arrive)
                    {
                        gamma += cust.requirement;
                    }
                }
            }
            CHECK(interpolate(cr, t).gamma == doctest::Approx(gamma).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("engine trajectory workloads agree with the oracle")
{
    auto c = two_origin(PolicyKind::jsq, 0.0);
    c.sample_dt = 37.0;
    RunOptions o;
    o.record_customers = true;
    const auto r = run(c, 1, o);
    std::vector<std::vector<std::pair<double, double>>> station(2);
    for (const auto& cust : r.customers)
    {
        station[cust.station].push_back({cust.arrive, cust.requirement});
    }
    for (auto& v : station)
    {
        std::sort(v.begin(), v.end());
    }
    const auto& tr = r.trajectory;
    for (std::size_t i = 0; i < tr.t.size(); ++i)
    {
        CHECK(tr.w[i * 2] == doctest::Approx(reflected(station[0], 1.0, tr.t[i])).scale(1.0));
        CHECK(tr.w[i * 2 + 1] == doctest::Approx(reflected(station[1], 1.5, tr.t[i])).scale(1.0));
    }
}

TEST_CASE("equal delays: SSP and MDSP gaps coincide")
{
    auto c = two_origin(PolicyKind::rjsq_unaware, 0.1);
    c.origins = {OriginSpec{1.0, {3.0, 3.0}}};
    const auto ssp = run_coupled(c, PoolSpec::for_scenario(c, PoolKind::ssp), 2);
    const auto mdsp = run_coupled(c, PoolSpec::for_scenario(c, PoolKind::mdsp), 2);
    REQUIRE(ssp.gap.size() == mdsp.gap.size());
    for (std::size_t i = 0; i < ssp.gap.size(); ++i)
    {
        CHECK(ssp.gap[i].t == mdsp.gap[i].t);
        CHECK(ssp.gap[i].gamma == doctest::Approx(mdsp.gap[i].gamma).scale(1.0));
    }
    CHECK(gap_supremum(ssp).sup == doctest::Approx(gap_supremum(mdsp).sup));
}

TEST_CASE("MDSP pool path does not depend on the routing policy")
{
    const auto jsq = two_origin(PolicyKind::jsq, 0.0);
    const auto rjsq = two_origin(PolicyKind::rjsq_unaware, 0.2);
    const auto a = run_coupled(jsq, PoolSpec::for_scenario(jsq, PoolKind::mdsp), 4);
    const auto b = run_coupled(rjsq, PoolSpec::for_scenario(rjsq, PoolKind::mdsp), 4);
    CHECK(a.pool == b.pool);
    CHECK(a.distributed_stats.time_avg_total_count != b.distributed_stats.time_avg_total_count);
}

TEST_CASE("gap supremum interpolates at the window edges")
{
    CoupledRun r;
    r.n = 4.0;
    r.burnin = 1.0;
    r.horizon = 3.0;
    r.gap = {{0.0, 0, 0, 0.0}, {2.0, 0, 0, 10.0}, {4.0, 0, 0, 0.0}};
    auto s = gap_supremum(r);
    CHECK(s.sup == 10.0);
    CHECK(s.scaled == 5.0);
    s = gap_supremum(r, 0.0, 1.0);
    CHECK(s.sup == doctest::Approx(5.0));
    s = gap_supremum(r, 3.5, 4.0);
    CHECK(s.sup == doctest::Approx(2.5));
}

TEST_CASE("coupling violation is detected")
{
    const auto c = two_origin(PolicyKind::jsq, 0.0);
    std::vector<CustomerRecord> log{{0, 1.0, 1.5, 2.0, 1.0, 0, 0}};
    CHECK_THROWS_AS(couple_log(c, PoolSpec::for_scenario(c, PoolKind::mdsp), log), SimulationFault);
    CHECK_NOTHROW(couple_log(c, PoolSpec::for_scenario(c, PoolKind::ssp), log));
}
