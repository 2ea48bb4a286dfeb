#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "remoteq/core.hpp"

#include <cmath>

using namespace remoteq;

namespace {

ScenarioConfig pair(double rho, double delay, double chi)
{
    ScenarioConfig c;
    c.stations = {StationConfig{}, StationConfig{}};
    c.origins = {OriginSpec{1.0, {delay, delay}}};
    c.traffic.rho = rho;
    c.policy.kind = PolicyKind::rjsq_unaware;
    c.policy.chi = chi;
    return c;
}

bool mentions(const std::vector<Violation>& v, const std::string& field, const std::string& text = "")
{
    for (const auto& x : v)
    {
        if (x.field == field && x.reason.find(text) != std::string::npos)
        {
            return true;
        }
    }
    return false;
}

} // namespace

TEST_CASE("n from rho")
{
    CHECK(n_from_rho(0.9) == doctest::Approx(100.0));
    CHECK(n_from_rho(0.99) == doctest::Approx(1.0e4));
    CHECK_THROWS_AS(n_from_rho(1.0), std::domain_error);
    CHECK_THROWS_AS(n_from_rho(0.0), std::domain_error);
}

TEST_CASE("valid two-station scenario")
{
    CHECK(validate_scenario(pair(0.99, 100.0, 0.042)).empty());
    CHECK(validate_scenario(pair(0.9, 0.0, 0.5)).empty());
}

TEST_CASE("chi above (s-1) min mu/mu is rejected")
{
    auto c = pair(0.9, 10.0, 0.6);
    const auto v = validate_scenario(c);
    REQUIRE_FALSE(v.empty());
    CHECK(mentions(v, "policy.chi", "condition (ii)"));
}

TEST_CASE("unstable traffic is rejected")
{
    CHECK(mentions(validate_scenario(pair(1.0, 0.0, 0.1)), "traffic.rho"));
    auto c = pair(0.5, 0.0, 0.1);
    c.traffic.rho = 0.0;
    c.traffic.appearance_rate = 2.5;
    CHECK(mentions(validate_scenario(c), "traffic.rho"));
}

TEST_CASE("origin probabilities must sum to one")
{
    auto c = pair(0.9, 1.0, 0.1);
    c.origins = {OriginSpec{0.5, {1.0, 2.0}}, OriginSpec{0.4, {2.0, 1.0}}};
    CHECK(mentions(validate_scenario(c), "origins", "sum"));
}

TEST_CASE("every violation is reported, not just the first")
{
    auto c = pair(0.9, -1.0, 2.0);
    c.horizon_min = -5.0;
    c.stations[1].service_rate = 0.0;
    const auto v = validate_scenario(c);
    CHECK(mentions(v, "stations[2]"));
    CHECK(mentions(v, "origins[1]"));
    CHECK(mentions(v, "horizon_min"));
}

TEST_CASE("plan validation names the violated station")
{
    const auto plan = RoutingPlan::from_rows({{1.0, 0.0}, {1.0, 0.0}});
    const auto v = validate_plan(plan, {0.5, 0.5}, {1.0, 1.0});
    REQUIRE_FALSE(v.empty());
    bool found = false;
    for (const auto& x : v)
    {
        found = found || x.reason.find("heavy-traffic violation at k=1") != std::string::npos;
    }
    CHECK(found);
    CHECK(validate_plan(RoutingPlan::from_rows({{1.0, 0.0}, {0.0, 1.0}}), {0.5, 0.5}, {1.0, 1.0}).empty());
}

TEST_CASE("aware policy needs a consistent plan")
{
    auto c = pair(0.99, 0.0, 0.04);
    c.policy.kind = PolicyKind::rjsq_aware;
    c.origins = {OriginSpec{0.5, {1.0, 3.0}}, OriginSpec{0.5, {3.0, 1.0}}};
    CHECK_FALSE(validate_scenario(c).empty());
    c.policy.plan = RoutingPlan::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(validate_scenario(c).empty());
}

TEST_CASE("resolve_traffic fills the missing quantities")
{
    auto c = pair(0.99, 1.0, 0.0);
    resolve_traffic(c);
    CHECK(c.traffic.appearance_rate == doctest::Approx(1.98));
    CHECK(c.traffic.n == doctest::Approx(1.0e4));
    c.delays_scaled = true;
    const auto d = effective_delays(c);
    CHECK(d[0][0] == doctest::Approx(100.0));
}

TEST_CASE("geography and origins are exclusive")
{
    auto c = pair(0.9, 1.0, 0.0);
    c.geography = GeographicSpec{};
    c.geography->stations = {{1.0, 1.0}, {2.0, 2.0}};
    CHECK(mentions(validate_scenario(c), "origins", "not both"));
}

TEST_CASE("per-customer service needs one law")
{
    auto c = pair(0.9, 1.0, 0.0);
    c.service_assignment = ServiceAssignment::per_customer;
    CHECK(validate_scenario(c).empty());
    c.stations[1].service = DistDescriptor::lognormal(3.0);
    CHECK(mentions(validate_scenario(c), "service_assignment"));
}
