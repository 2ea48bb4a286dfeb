#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "remoteq/core.hpp"
#include "remoteq/planning.hpp"
#include "remoteq/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace remoteq;

namespace {

GeographicSpec square()
{
    GeographicSpec g;
    g.region = {0.0, 0.0, 20.0, 20.0};
    g.stations = {{5.0, 5.0}, {5.0, 15.0}, {15.0, 5.0}};
    g.speed = 0.1;
    return g;
}

OriginSet three_origins()
{
    return OriginSet{{0.4, 0.2, 0.4}, {{0.5, 1.5}, {1.0, 1.0}, {1.5, 0.5}}};
}

// 3 x 2 transportation: the free variables are x_{i,1}; a vertex has at most one of them strictly
// between its bounds, so enumerate every bound pattern of the other two.
double brute_3x2(const std::vector<double>& a, double d1, const std::vector<double>& c)
{
    double best = std::numeric_limits<double>::infinity();
    for (int free = 0; free < 3; ++free)
    {
        for (int mask = 0; mask < 4; ++mask)
        {
            std::vector<double> x(3, 0.0);
            double used = 0.0;
            int bit = 0;
            for (int i = 0; i < 3; ++i)
            {
                if (i == free)
                {
                    continue;
                }
                x[i] = (mask >> bit++) & 1 ? a[i] : 0.0;
                used += x[i];
            }
            x[free] = d1 - used;
            if (x[free] < -1e-12 || x[free] > a[free] + 1e-12)
            {
                continue;
            }
            double obj = 0.0;
            for (int i = 0; i < 3; ++i)
            {
                obj += c[i * 2] * x[i] + c[i * 2 + 1] * (a[i] - x[i]);
            }
            best = std::min(best, obj);
        }
    }
    return best;
}

// Random strictly positive flow with the given margins (Sinkhorn scaling).
std::vector<double> random_flow(const std::vector<double>& a, const std::vector<double>& b, Rng& g)
{
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<double> x(n * m);
    for (auto& v : x)
    {
        v = 0.01 + g.uniform();
    }
    for (int it = 0; it < 500; ++it)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            double r = 0.0;
            for (std::size_t j = 0; j < m; ++j)
            {
                r += x[i * m + j];
            }
            for (std::size_t j = 0; j < m; ++j)
            {
                x[i * m + j] *= a[i] / r;
            }
        }
        for (std::size_t j = 0; j < m; ++j)
        {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                c += x[i * m + j];
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                x[i * m + j] *= b[j] / c;
            }
        }
    }
    return x;
}

void check_margins(const TransportSolution& sol, std::span<const double> a, std::span<const double> b)
{
    const std::size_t m = b.size();
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        double r = 0.0;
        for (std::size_t j = 0; j < m; ++j)
        {
            CHECK(sol.flow[i * m + j] >= -1e-12);
            r += sol.flow[i * m + j];
        }
        CHECK(r == doctest::Approx(a[i]));
    }
    for (std::size_t j = 0; j < m; ++j)
    {
        double c = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            c += sol.flow[i * m + j];
        }
        CHECK(c == doctest::Approx(b[j]));
    }
}

// Composite Simpson rule on [0, 1].
template <class F>
double simpson(F f, int n = 2000)
{
    const double h = 1.0 / n;
    double acc = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i)
    {
        acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

} // namespace

TEST_CASE("transportation agrees with vertex enumeration on 3x2")
{
    Rng g(3);
    for (int trial = 0; trial < 300; ++trial)
    {
        std::vector<double> a(3);
        for (auto& v : a)
        {
            v = 0.1 + g.uniform();
        }
        const double total = std::accumulate(a.begin(), a.end(), 0.0);
        const double d1 = total * (0.05 + 0.9 * g.uniform());
        const std::vector<double> b{d1, total - d1};
        std::vector<double> c(6);
        for (auto& v : c)
        {
            v = std::floor(g.uniform() * 5.0); // integer costs make ties common
        }
        const auto sol = solve_transportation(a, b, c);
        check_margins(sol, a, b);
        CHECK(sol.objective == doctest::Approx(brute_3x2(a, d1, c)).epsilon(1e-9));
    }
}

TEST_CASE("transportation agrees with permutation enumeration on assignment problems")
{
    Rng g(4);
    for (int trial = 0; trial < 100; ++trial)
    {
        const std::size_t n = 3 + trial % 3;
        const std::vector<double> ones(n, 1.0);
        std::vector<double> c(n * n);
        for (auto& v : c)
        {
            v = std::floor(g.uniform() * 10.0);
        }
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do
        {
            double obj = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                obj += c[i * n + perm[i]];
            }
            best = std::min(best, obj);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const auto sol = solve_transportation(ones, ones, c);
        check_margins(sol, ones, ones);
        CHECK(sol.objective == doctest::Approx(best));
    }
}

TEST_CASE("no random feasible plan beats the transportation optimum")
{
    Rng g(5);
    const std::vector<double> a{0.3, 0.5, 0.2, 0.4};
    const std::vector<double> b{0.6, 0.1, 0.7};
    std::vector<double> c(12);
    for (auto& v : c)
    {
        v = g.uniform() * 10.0;
    }
    const auto sol = solve_transportation(a, b, c);
    check_margins(sol, a, b);
    for (int i = 0; i < 1000; ++i)
    {
        const auto x = random_flow(a, b, g);
        double obj = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
        {
            obj += c[j] * x[j];
        }
        CHECK(obj >= sol.objective - 1e-9);
    }
}

TEST_CASE("transportation rejects unbalanced input")
{
    const std::vector<double> a{1.0, 1.0};
    const std::vector<double> b{1.0, 1.5};
    const std::vector<double> c{1, 2, 3, 4};
    CHECK_THROWS_AS(solve_transportation(a, b, c), PlanningError);
}

TEST_CASE("joint LP sends every origin to its nearest station")
{
    const auto o = three_origins();
    const auto r = solve_joint_lp(o, 2.0);
    CHECK(r.capacities[0] == doctest::Approx(1.2));
    CHECK(r.capacities[1] == doctest::Approx(0.8));
    CHECK(r.objective == doctest::Approx(0.6));
    CHECK(r.gbc);
    CHECK(r.plan(1, 0) == 1.0);
}

TEST_CASE("routing LP for fixed capacities")
{
    const auto o = three_origins();
    const std::vector<double> caps{1.0, 1.0};
    const auto plan = solve_routing_lp(o, caps);
    CHECK(plan_objective(o, plan) == doctest::Approx(0.6));
    CHECK(is_gbc(o, plan));
    CHECK(validate_plan(plan, o.probs, caps).empty());
    // Capacities far from the nearest-station shares force non-nearest routing.
    const std::vector<double> skew{1.8, 0.2};
    const auto forced = solve_routing_lp(o, skew);
    CHECK(!is_gbc(o, forced));
    CHECK(plan_objective(o, forced) == doctest::Approx(0.4 * 0.5 + 0.2 * 1.0 + 0.3 * 1.5 + 0.1 * 0.5));
}

TEST_CASE("routing LP errors name the station")
{
    const auto o = three_origins();
    const std::vector<double> bad{1.0, -0.5};
    try
    {
        solve_routing_lp(o, bad);
        FAIL("expected a planning error");
    }
    catch (const PlanningError& e)
    {
        CHECK(e.station() == 1);
    }
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(solve_routing_lp(o, zero), PlanningError);
}

TEST_CASE("voronoi geometry of the square")
{
    const auto g = square();
    const auto cells = voronoi_cells(g);
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].area == doctest::Approx(100.0));
    CHECK(cells[1].area == doctest::Approx(150.0));
    CHECK(cells[2].area == doctest::Approx(150.0));
    CHECK(border_length(g) == doctest::Approx(20.0 + 10.0 * std::sqrt(2.0)));
    const auto caps = zone_capacities(g, 4.0);
    CHECK(caps[0] == doctest::Approx(1.0));
    CHECK(caps[1] == doctest::Approx(1.5));
    CHECK(caps[2] == doctest::Approx(1.5));
}

TEST_CASE("discretized joint LP approaches the exact zone capacities")
{
    const auto g = square();
    const auto o = discretize(g, 200, 200);
    CHECK(o.origins() == 40000);
    const auto r = solve_joint_lp(o, 4.0);
    CHECK(r.capacities[0] == doctest::Approx(1.0).epsilon(0.01));
    CHECK(r.capacities[1] == doctest::Approx(1.5).epsilon(0.01));
    CHECK(r.capacities[2] == doctest::Approx(1.5).epsilon(0.01));
}

TEST_CASE("mean border distance against Simpson's rule")
{
    const auto g = square();
    // Border y = 10, x in [0, 10] (and its mirror x = 10) to (5, 5); border y = x from (10, 10) to (20, 20) to (5, 15).
    const double straight = 10.0 * simpson([](double u) { return std::hypot(10.0 * u - 5.0, 5.0); });
    const double diagonal = 10.0 * std::sqrt(2.0) *
                            simpson([](double u) { return std::hypot(5.0 + 10.0 * u, 10.0 * u - 5.0); });
    const double km = (2.0 * straight + diagonal) / (20.0 + 10.0 * std::sqrt(2.0));
    CHECK(km == doctest::Approx(7.694).epsilon(1e-3));
    const auto e = mean_extra_delay(g);
    CHECK(e.gamma_bar == doctest::Approx(km / 0.1).epsilon(1e-9));
    CHECK(chi_reciprocal_root(e.gamma_bar) == doctest::Approx(0.0456).epsilon(1e-3));
}

TEST_CASE("discrete borders and extra delays")
{
    const auto o = three_origins();
    const auto b = build_borders(o, 1.0);
    CHECK(b.zone == std::vector<int>{0, 0, 1});
    CHECK(b.zone_mass[0] == doctest::Approx(0.6));
    CHECK(b.p_prime[0] == doctest::Approx(0.4));
    CHECK(b.p_prime[1] == doctest::Approx(0.6));
    CHECK(b.border_mass == doctest::Approx(1.0));
    CHECK(b.warnings.empty());
    const auto narrow = build_borders(o, 0.0);
    CHECK(narrow.p_prime[1] == doctest::Approx(0.2));
    CHECK(narrow.p_prime[0] == 0.0);
    CHECK(narrow.warnings.size() == 1);

    const auto unaware = mean_extra_delay(o, DelayMode::unaware, 0.99, true);
    CHECK(unaware.gamma_bar == doctest::Approx(1.0));
    CHECK(unaware.gamma_hat == doctest::Approx(100.0));
    const auto aware = mean_extra_delay(o, DelayMode::aware, 0.99, false, &b);
    CHECK(aware.gamma_bar == doctest::Approx(0.5 * (1.5 + (0.4 * 1.5 + 0.2 * 1.0) / 0.6)));
    CHECK(aware.gamma_hat == aware.gamma_bar);
    CHECK_THROWS(mean_extra_delay(o, DelayMode::aware, 0.99, false, &narrow));
}

TEST_CASE("geographic border mass: Monte Carlo against a grid count")
{
    const auto g = square();
    const double tau = 16.0;
    const auto mc = build_borders(g, tau, 400'000, 9);
    const int n = 600;
    int inside = 0;
    for (int i = 0; i < n; ++i)
    {
        for (int j = 0; j < n; ++j)
        {
            const Point2 p{(i + 0.5) * 20.0 / n, (j + 0.5) * 20.0 / n};
            std::vector<double> d;
            for (const auto& st : g.stations)
            {
                d.push_back(std::hypot(p.x - st.x, p.y - st.y) / g.speed);
            }
            std::sort(d.begin(), d.end());
            inside += d[1] <= d[0] + tau ? 1 : 0;
        }
    }
    const double grid = static_cast<double>(inside) / (n * n);
    CHECK(mc.border_mass == doctest::Approx(grid).epsilon(0.02));
    CHECK(mc.border_mass == doctest::Approx(0.164).epsilon(0.02));
    CHECK(std::accumulate(mc.zone_mass.begin(), mc.zone_mass.end(), 0.0) == doctest::Approx(1.0));
    CHECK(mc.zone_mass[0] == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("tau from chi")
{
    const auto g = square();
    CHECK(tau_from_chi(g, 0.0) == 0.0);
    CHECK(tau_from_chi(g, 0.0456) == 16.0);
    double prev = 0.0;
    for (double chi : {0.01, 0.02, 0.04, 0.06, 0.08, 0.1})
    {
        TauOptions raw;
        raw.round_to = 0.0;
        const double t = tau_from_chi(g, chi, raw);
        CHECK(t > prev);
        // Band model: 3 chi = L speed tau / area.
        CHECK(t == doctest::Approx(3.0 * chi * 400.0 / (border_length(g) * 0.1)));
        prev = t;
    }
    TauOptions exact;
    exact.model = WidthModel::exact;
    exact.round_to = 0.0;
    const double te = tau_from_chi(g, 0.0456, exact);
    const auto check = build_borders(g, te, 400'000, 2);
    CHECK(check.border_mass == doctest::Approx(3 * 0.0456).epsilon(0.03));
    CHECK_THROWS(tau_from_chi(g, 0.5));
}

TEST_CASE("chi heuristics")
{
    CHECK(chi_root_excess(0.99) == doctest::Approx(0.04));
    CHECK(chi_root_excess(0.9) == doctest::Approx(0.1265).epsilon(1e-3));
    CHECK(chi_reciprocal_root(0.64) == doctest::Approx(0.5));
    CHECK(chi_for_delay(20.0) == doctest::Approx(0.0894).epsilon(1e-3));
    CHECK(chi_for_delay(100.0) == doctest::Approx(0.04));
    CHECK_THROWS_AS(chi_reciprocal_root(0.0), std::domain_error);
    CHECK_THROWS_AS(chi_reciprocal_root(-1.0), std::domain_error);
}
