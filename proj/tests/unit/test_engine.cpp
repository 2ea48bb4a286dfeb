#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "remoteq/core.hpp"
#include "remoteq/engine.hpp"

#include <cmath>
#include <numeric>

using namespace remoteq;

namespace {

ScenarioConfig deterministic_pair()
{
    ScenarioConfig c;
    c.id = "trace";
    c.stations = {StationConfig{1.0, DistDescriptor::deterministic()}, StationConfig{1.0, DistDescriptor::deterministic()}};
    c.origins = {OriginSpec{1.0, {0.0, 0.0}}};
    c.traffic.appearance_rate = 1.0;
    c.traffic.interappearance = DistDescriptor::deterministic();
    c.policy.kind = PolicyKind::jsq;
    c.horizon_min = 5.5;
    c.burnin_min = 0.0;
    return c;
}

ScenarioConfig markov_pair(double rho, double delay, PolicyKind kind, double chi = 0.0)
{
    ScenarioConfig c;
    c.id = "pair";
    c.stations = {StationConfig{}, StationConfig{}};
    c.origins = {OriginSpec{1.0, {delay, delay}}};
    c.traffic.rho = rho;
    c.policy.kind = kind;
    c.policy.chi = chi;
    c.horizon_min = 2.0e4;
    c.burnin_min = 2.0e3;
    c.seed = 11;
    return c;
}

} // namespace

TEST_CASE("hand trace: equal-time completions precede appearances")
{
    RunOptions o;
    o.record_events = true;
    o.record_customers = true;
    const auto r = run(deterministic_pair(), 0, o);
    // Each customer appears at t = j, arrives at once, and finishes at t = j + 1 just before the
    // next appearance, so JSQ with lowest-index ties keeps choosing station 1.
    std::vector<EventRecord> expect;
    for (std::uint64_t j = 0; j < 5; ++j)
    {
        const double t = static_cast<double>(j + 1);
        if (j > 0)
        {
            expect.push_back({t, EventType::completion, 0, j - 1});
        }
        expect.push_back({t, EventType::appearance, 0, j});
        expect.push_back({t, EventType::arrival, 0, j});
    }
    CHECK(r.events == expect);
    for (const auto& c : r.customers)
    {
        CHECK(c.station == 0);
        CHECK(c.arrive == c.appear);
    }
    CHECK(r.stats.mean_wait == 0.0);
    CHECK(r.stats.time_avg_total_count == doctest::Approx(4.5 / 5.5));
    CHECK(r.stats.final_counts == std::vector<int>{1, 0});
}

TEST_CASE("hand trace with travel delay")
{
    auto c = deterministic_pair();
    c.origins = {OriginSpec{1.0, {0.5, 2.0}}};
    RunOptions o;
    o.record_customers = true;
    const auto r = run(c, 0, o);
    // Customer 1 sees station 1 busy and goes to station 2; customer 2 sees both empty (customer 1 is
    // still travelling); customer 3 arrives just as customer 1 reaches station 2 and ties; customer 4
    // sees station 2 empty again.
    const std::vector<int> stations{0, 1, 0, 0, 1};
    REQUIRE(r.customers.size() == 5);
    for (std::size_t j = 0; j < 5; ++j)
    {
        const auto& cust = r.customers[j];
        CHECK(cust.appear == static_cast<double>(j + 1));
        CHECK(cust.station == stations[j]);
        CHECK(cust.arrive == doctest::Approx(cust.appear + (stations[j] == 0 ? 0.5 : 2.0)));
        CHECK(cust.min_delay == 0.5);
    }
    // Customer 4 is still travelling at the horizon.
    CHECK(r.stats.en_route_at_horizon == 1);
    CHECK(r.stats.mean_wait == 0.0);
    CHECK(r.stats.mean_travel == doctest::Approx((0.5 + 2.0 + 0.5 + 0.5) / 4.0));
    CHECK(r.stats.chi_emergent == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("conservation of customers")
{
    const auto c = markov_pair(0.9, 5.0, PolicyKind::rjsq_unaware, 0.1);
    const auto r = run(c, 3);
    const auto& s = r.stats;
    std::uint64_t arrived = 0;
    for (std::size_t k = 0; k < 2; ++k)
    {
        CHECK(s.arrivals[k] - s.departures[k] == static_cast<std::uint64_t>(s.final_counts[k]));
        arrived += s.arrivals[k];
    }
    CHECK(arrived + s.en_route_at_horizon == s.appearances);
    CHECK(s.served_in_window <= s.window_appearances);
    CHECK(std::accumulate(s.time_avg_count.begin(), s.time_avg_count.end(), 0.0) ==
          doctest::Approx(s.time_avg_total_count));
    for (double u : s.utilization)
    {
        CHECK(u == doctest::Approx(0.9).epsilon(0.05));
    }
}

TEST_CASE("random proportional routing gives two independent M/M/1 queues")
{
    // Poisson thinning: each station is M/M/1 at load rho, so E[L] = 2 rho / (1 - rho), E[W] = rho / (1 - rho).
    auto c = markov_pair(0.8, 3.0, PolicyKind::random_proportional);
    c.horizon_min = 2.0e5;
    const auto stats = run_replications(c, 4);
    double cc = 0.0;
    double wait = 0.0;
    for (const auto& s : stats)
    {
        cc += s.time_avg_total_count / 4.0;
        wait += s.mean_wait / 4.0;
    }
    CHECK(cc == doctest::Approx(8.0).epsilon(0.05));
    CHECK(wait == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("determinism and parallel equals serial")
{
    const auto c = markov_pair(0.95, 10.0, PolicyKind::rjsq_unaware, 0.05);
    RunOptions o;
    o.record_events = true;
    const auto a = run(c, 2, o);
    const auto b = run(c, 2, o);
    CHECK(a.events == b.events);
    CHECK(a.stats.time_avg_total_count == b.stats.time_avg_total_count);
    const auto other = run(c, 3, o);
    CHECK(other.events != a.events);

    const auto serial = run_replications(c, 6, 1);
    const auto parallel = run_replications(c, 6, 3);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i)
    {
        CHECK(serial[i].time_avg_total_count == parallel[i].time_avg_total_count);
        CHECK(serial[i].mean_wait == parallel[i].mean_wait);
        CHECK(serial[i].events == parallel[i].events);
    }
}

TEST_CASE("per-customer requirements do not depend on the routing")
{
    auto c = markov_pair(0.9, 2.0, PolicyKind::jsq);
    c.service_assignment = ServiceAssignment::per_customer;
    RunOptions o;
    o.record_customers = true;
    const auto jsq = run(c, 0, o);
    c.policy.kind = PolicyKind::rjsq_unaware;
    c.policy.chi = 0.2;
    const auto rjsq = run(c, 0, o);
    REQUIRE(jsq.customers.size() == rjsq.customers.size());
    bool routes_differ = false;
    for (std::size_t i = 0; i < jsq.customers.size(); ++i)
    {
        CHECK(jsq.customers[i].appear == rjsq.customers[i].appear);
        CHECK(jsq.customers[i].requirement == rjsq.customers[i].requirement);
        routes_differ = routes_differ || jsq.customers[i].station != rjsq.customers[i].station;
    }
    CHECK(routes_differ);
}

TEST_CASE("trajectory sampling")
{
    auto c = markov_pair(0.9, 1.0, PolicyKind::jsq);
    c.horizon_min = 100.0;
    c.burnin_min = 0.0;
    c.sample_dt = 10.0;
    const auto r = run(c, 0);
    const auto& tr = r.trajectory;
    REQUIRE(tr.stations == 2);
    REQUIRE(tr.t.size() == 11);
    CHECK(tr.t.front() == 0.0);
    CHECK(tr.t.back() == 100.0);
    CHECK(tr.q.size() == 22);
    CHECK(tr.w.size() == 22);
    CHECK(tr.u.size() == 11);
    for (std::size_t i = 0; i < tr.t.size(); ++i)
    {
        for (std::size_t k = 0; k < 2; ++k)
        {
            CHECK(tr.q[i * 2 + k] >= 0);
            CHECK(tr.w[i * 2 + k] >= 0.0);
            CHECK((tr.q[i * 2 + k] == 0) == (tr.w[i * 2 + k] == 0.0));
        }
    }
    const auto csv = tr.to_csv();
    CHECK(csv.rfind("t,Q_1,Q_2,W_1,W_2,U\n", 0) == 0);
}

TEST_CASE("count path matches the time averages")
{
    auto c = markov_pair(0.9, 1.0, PolicyKind::jsq);
    c.horizon_min = 3000.0;
    c.burnin_min = 500.0;
    RunOptions o;
    o.record_count_path = true;
    const auto r = run(c, 1, o);
    const auto& p = r.count_path;
    double area = 0.0;
    for (std::size_t i = 0; i < p.time.size(); ++i)
    {
        const double a = std::max(p.time[i], c.burnin_min);
        const double b = std::min(i + 1 < p.time.size() ? p.time[i + 1] : c.horizon_min, c.horizon_min);
        if (b > a)
        {
            area += (b - a) * (p.counts[i * 2] + p.counts[i * 2 + 1]);
        }
    }
    CHECK(area / (c.horizon_min - c.burnin_min) == doctest::Approx(r.stats.time_avg_total_count).epsilon(1e-9));
}

TEST_CASE("faults and configuration errors")
{
    auto c = markov_pair(0.9, 1.0e6, PolicyKind::jsq);
    RunOptions o;
    o.max_pending = 10;
    CHECK_THROWS_AS(run(c, 0, o), SimulationFault);
    try
    {
        run(c, 0, o);
    }
    catch (const SimulationFault& e)
    {
        CHECK(std::string(e.what()).find("en-route queue overflow") != std::string::npos);
    }
    auto bad = markov_pair(1.2, 1.0, PolicyKind::jsq);
    CHECK_THROWS_AS(run(bad, 0), ConfigError);
}
