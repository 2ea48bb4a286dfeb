#include "remoteq/planning.hpp"

#include "remoteq/core.hpp"
#include "remoteq/stochastics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace remoteq {

OriginSet OriginSet::from_scenario(const ScenarioConfig& cfg)
{
    OriginSet out;
    const auto delays = effective_delays(cfg);
    for (std::size_t m = 0; m < cfg.origins.size(); ++m)
    {
        out.probs.push_back(cfg.origins[m].probability);
        out.delays.push_back(delays[m]);
    }
    return out;
}

namespace {

int argmin_lowest(const std::vector<double>& d)
{
    int best = 0;
    for (std::size_t k = 1; k < d.size(); ++k)
    {
        if (d[k] < d[static_cast<std::size_t>(best)])
        {
            best = static_cast<int>(k);
        }
    }
    return best;
}

void check_origins(const OriginSet& origins)
{
    if (origins.origins() == 0 || origins.stations() == 0)
    {
        throw PlanningError("origin set is empty");
    }
    for (const auto& row : origins.delays)
    {
        if (row.size() != origins.stations())
        {
            throw PlanningError("delay rows have unequal lengths");
        }
    }
}

} // namespace

TransportSolution solve_transportation(std::span<const double> supply, std::span<const double> demand,
                                       std::span<const double> cost)
{
    const std::size_t m = supply.size();
    const std::size_t n = demand.size();
    if (m == 0 || n == 0 || cost.size() != m * n)
    {
        throw PlanningError("transportation problem has inconsistent dimensions");
    }
    double total_supply = 0.0;
    double total_demand = 0.0;
    for (double v : supply)
    {
        if (!(v >= 0.0) || !std::isfinite(v))
        {
            throw PlanningError("supplies must be finite and nonnegative");
        }
        total_supply += v;
    }
    for (double v : demand)
    {
        if (!(v >= 0.0) || !std::isfinite(v))
        {
            throw PlanningError("demands must be finite and nonnegative");
        }
        total_demand += v;
    }
    if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, total_supply))
    {
        throw PlanningError("transportation problem is unbalanced");
    }
    std::vector<double> s(supply.begin(), supply.end());
    std::vector<double> d(demand.begin(), demand.end());
    std::vector<double> x(m * n, 0.0);
    std::vector<char> basic(m * n, 0);

    // Northwest corner: m + n - 1 basic cells, degenerate zeros included.
    {
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < m && j < n)
        {
            const double q = std::min(s[i], d[j]);
            x[i * n + j] = q;
            basic[i * n + j] = 1;
            s[i] -= q;
            d[j] -= q;
            if (i + 1 == m)
            {
                ++j;
            }
            else if (j + 1 == n)
            {
                ++i;
            }
            else if (s[i] <= d[j])
            {
                ++i;
            }
            else
            {
                ++j;
            }
        }
    }

    TransportSolution out;
    std::vector<double> u(m);
    std::vector<double> v(n);
    std::vector<char> seen(m + n);
    std::vector<std::size_t> parent(m + n);
    std::vector<std::size_t> stack;
    const std::size_t max_pivots = 50 * (m + n) * (m + n) + 1000;

    while (true)
    {
        // Potentials on the basis tree, u_0 = 0. Nodes 0..m-1 rows, m..m+n-1 columns.
        std::fill(seen.begin(), seen.end(), 0);
        u[0] = 0.0;
        seen[0] = 1;
        stack.assign(1, 0);
        while (!stack.empty())
        {
            const std::size_t a = stack.back();
            stack.pop_back();
            if (a < m)
            {
                for (std::size_t j = 0; j < n; ++j)
                {
                    if (basic[a * n + j] && !seen[m + j])
                    {
                        v[j] = cost[a * n + j] - u[a];
                        seen[m + j] = 1;
                        stack.push_back(m + j);
                    }
                }
            }
            else
            {
                const std::size_t j = a - m;
                for (std::size_t i = 0; i < m; ++i)
                {
                    if (basic[i * n + j] && !seen[i])
                    {
                        u[i] = cost[i * n + j] - v[j];
                        seen[i] = 1;
                        stack.push_back(i);
                    }
                }
            }
        }

        // Bland: first cell in (row, col) order with a negative reduced cost enters.
        std::size_t enter = m * n;
        for (std::size_t c = 0; c < m * n && enter == m * n; ++c)
        {
            if (!basic[c] && cost[c] - u[c / n] - v[c % n] < -1e-12)
            {
                enter = c;
            }
        }
        if (enter == m * n)
        {
            break;
        }
        if (++out.pivots > max_pivots)
        {
            throw PlanningError("transportation simplex did not terminate");
        }

        // Tree path from the entering column to the entering row closes the cycle.
        const std::size_t ei = enter / n;
        const std::size_t ej = enter % n;
        std::fill(seen.begin(), seen.end(), 0);
        seen[m + ej] = 1;
        stack.assign(1, m + ej);
        while (!stack.empty() && !seen[ei])
        {
            const std::size_t a = stack.back();
            stack.pop_back();
            if (a < m)
            {
                for (std::size_t j = 0; j < n; ++j)
                {
                    if (basic[a * n + j] && !seen[m + j])
                    {
                        seen[m + j] = 1;
                        parent[m + j] = a;
                        stack.push_back(m + j);
                    }
                }
            }
            else
            {
                const std::size_t j = a - m;
                for (std::size_t i = 0; i < m; ++i)
                {
                    if (basic[i * n + j] && !seen[i])
                    {
                        seen[i] = 1;
                        parent[i] = a;
                        stack.push_back(i);
                    }
                }
            }
        }
        // Walk back from the row: cells alternate -, +, -, ... after the entering (+) cell.
        std::vector<std::size_t> cycle{enter};
        std::size_t node = ei;
        while (node != m + ej)
        {
            const std::size_t p = parent[node];
            const std::size_t cell = node < m ? node * n + (p - m) : p * n + (node - m);
            cycle.push_back(cell);
            node = p;
        }
        std::size_t leave = m * n;
        double theta = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < cycle.size(); k += 2)
        {
            const std::size_t c = cycle[k];
            if (x[c] < theta || (x[c] == theta && c < leave))
            {
                theta = x[c];
                leave = c;
            }
        }
        for (std::size_t k = 0; k < cycle.size(); ++k)
        {
            x[cycle[k]] += (k % 2 == 0) ? theta : -theta;
        }
        x[leave] = 0.0;
        basic[leave] = 0;
        basic[enter] = 1;
    }

    for (auto& q : x)
    {
        q = std::max(q, 0.0);
    }
    out.objective = 0.0;
    for (std::size_t c = 0; c < m * n; ++c)
    {
        out.objective += cost[c] * x[c];
    }
    out.flow = std::move(x);
    return out;
}

double plan_objective(const OriginSet& origins, const RoutingPlan& plan)
{
    double obj = 0.0;
    for (std::size_t m = 0; m < origins.origins(); ++m)
    {
        for (std::size_t k = 0; k < origins.stations(); ++k)
        {
            obj += origins.probs[m] * plan(m, k) * origins.delays[m][k];
        }
    }
    return obj;
}

bool is_gbc(const OriginSet& origins, const RoutingPlan& plan, double tol)
{
    for (std::size_t m = 0; m < origins.origins(); ++m)
    {
        const auto& d = origins.delays[m];
        const double dmin = *std::min_element(d.begin(), d.end());
        for (std::size_t k = 0; k < d.size(); ++k)
        {
            if (plan(m, k) > tol && d[k] > dmin + 1e-12 * std::max(1.0, std::abs(dmin)))
            {
                return false;
            }
        }
    }
    return true;
}

PlanningResult solve_joint_lp(const OriginSet& origins, double mu_total)
{
    check_origins(origins);
    if (!(mu_total > 0.0) || !std::isfinite(mu_total))
    {
        throw PlanningError("mu_total must be positive and finite");
    }
    const std::size_t b = origins.origins();
    const std::size_t s = origins.stations();
    std::vector<std::vector<double>> rows(b, std::vector<double>(s, 0.0));
    std::vector<double> share(s, 0.0);
    double obj = 0.0;
    for (std::size_t m = 0; m < b; ++m)
    {
        const int k = argmin_lowest(origins.delays[m]);
        rows[m][static_cast<std::size_t>(k)] = 1.0;
        share[static_cast<std::size_t>(k)] += origins.probs[m];
        obj += origins.probs[m] * origins.delays[m][static_cast<std::size_t>(k)];
    }
    const double total = std::accumulate(share.begin(), share.end(), 0.0);
    PlanningResult out;
    for (double p : share)
    {
        out.capacities.push_back(mu_total * p / total);
    }
    out.plan = RoutingPlan::from_rows(rows);
    out.objective = obj;
    out.gbc = true;
    return out;
}

RoutingPlan solve_routing_lp(const OriginSet& origins, std::span<const double> capacities)
{
    check_origins(origins);
    const std::size_t b = origins.origins();
    const std::size_t s = origins.stations();
    if (capacities.size() != s)
    {
        throw PlanningError("capacity vector length differs from the station count");
    }
    double mu = 0.0;
    for (std::size_t k = 0; k < s; ++k)
    {
        if (!(capacities[k] >= 0.0) || !std::isfinite(capacities[k]))
        {
            throw PlanningError("infeasible capacities: station " + std::to_string(k + 1) +
                                    " has a negative or nonfinite rate",
                                static_cast<int>(k));
        }
        mu += capacities[k];
    }
    if (!(mu > 0.0))
    {
        throw PlanningError("infeasible capacities: total rate is zero");
    }
    const double ptot = std::accumulate(origins.probs.begin(), origins.probs.end(), 0.0);
    std::vector<double> demand(s);
    for (std::size_t k = 0; k < s; ++k)
    {
        demand[k] = ptot * capacities[k] / mu;
    }
    std::vector<double> cost(b * s);
    for (std::size_t m = 0; m < b; ++m)
    {
        for (std::size_t k = 0; k < s; ++k)
        {
            cost[m * s + k] = origins.delays[m][k];
        }
    }
    const auto sol = solve_transportation(origins.probs, demand, cost);
    std::vector<std::vector<double>> rows(b, std::vector<double>(s, 0.0));
    for (std::size_t m = 0; m < b; ++m)
    {
        const double p = origins.probs[m];
        double row_sum = 0.0;
        for (std::size_t k = 0; k < s; ++k)
        {
            rows[m][k] = p > 0.0 ? sol.flow[m * s + k] / p : capacities[k] / mu;
            row_sum += rows[m][k];
        }
        for (auto& r : rows[m])
        {
            r /= row_sum;
        }
    }
    return RoutingPlan::from_rows(rows);
}

BorderStructure build_borders(const OriginSet& origins, double tau_bar)
{
    check_origins(origins);
    if (!(tau_bar >= 0.0))
    {
        throw PlanningError("tau_bar must be nonnegative");
    }
    const std::size_t s = origins.stations();
    BorderStructure out;
    out.borders.assign(s, {});
    out.zone_mass.assign(s, 0.0);
    out.p_prime.assign(s, 0.0);
    for (std::size_t m = 0; m < origins.origins(); ++m)
    {
        const auto& d = origins.delays[m];
        const int z = argmin_lowest(d);
        const double dmin = d[static_cast<std::size_t>(z)];
        out.zone.push_back(z);
        out.zone_mass[static_cast<std::size_t>(z)] += origins.probs[m];
        bool any = false;
        for (std::size_t k = 0; k < s; ++k)
        {
            if (static_cast<int>(k) != z && d[k] <= dmin + tau_bar)
            {
                out.borders[k].push_back(static_cast<int>(m));
                out.p_prime[k] += origins.probs[m];
                any = true;
            }
        }
        if (any)
        {
            out.border_mass += origins.probs[m];
        }
    }
    for (std::size_t k = 0; k < s; ++k)
    {
        if (out.p_prime[k] <= 0.0)
        {
            out.warnings.push_back("border of station " + std::to_string(k + 1) + " is empty");
        }
    }
    return out;
}

BorderStructure build_borders(const GeographicSpec& geo, double tau_bar, std::size_t samples, std::uint64_t seed)
{
    if (!(tau_bar >= 0.0))
    {
        throw PlanningError("tau_bar must be nonnegative");
    }
    if (samples == 0)
    {
        throw PlanningError("Monte Carlo sample count must be positive");
    }
    const std::size_t s = geo.stations.size();
    BorderStructure out;
    out.zone_mass.assign(s, 0.0);
    out.p_prime.assign(s, 0.0);
    std::vector<std::uint64_t> zone_hits(s, 0);
    std::vector<std::uint64_t> border_hits(s, 0);
    std::uint64_t union_hits = 0;
    Rng gen = derive_stream(seed, {StreamPurpose::monte_carlo, 0, 0});
    std::vector<double> d(s);
    const double slack = tau_bar * geo.speed; // km
    for (std::size_t i = 0; i < samples; ++i)
    {
        const double x = geo.region.x0 + (geo.region.x1 - geo.region.x0) * gen.uniform();
        const double y = geo.region.y0 + (geo.region.y1 - geo.region.y0) * gen.uniform();
        for (std::size_t k = 0; k < s; ++k)
        {
            d[k] = std::hypot(x - geo.stations[k].x, y - geo.stations[k].y);
        }
        const auto z = static_cast<std::size_t>(argmin_lowest(d));
        ++zone_hits[z];
        bool any = false;
        for (std::size_t k = 0; k < s; ++k)
        {
            if (k != z && d[k] <= d[z] + slack)
            {
                ++border_hits[k];
                any = true;
            }
        }
        union_hits += any ? 1 : 0;
    }
    const auto total = static_cast<double>(samples);
    for (std::size_t k = 0; k < s; ++k)
    {
        out.zone_mass[k] = static_cast<double>(zone_hits[k]) / total;
        out.p_prime[k] = static_cast<double>(border_hits[k]) / total;
        if (border_hits[k] == 0)
        {
            out.warnings.push_back("border of station " + std::to_string(k + 1) + " is empty");
        }
    }
    out.border_mass = static_cast<double>(union_hits) / total;
    return out;
}

namespace {

// Keeps the part of `poly` with n.p <= c.
std::vector<Point2> clip(const std::vector<Point2>& poly, Point2 n, double c)
{
    std::vector<Point2> out;
    const std::size_t count = poly.size();
    for (std::size_t i = 0; i < count; ++i)
    {
        const Point2 a = poly[i];
        const Point2 b = poly[(i + 1) % count];
        const double fa = n.x * a.x + n.y * a.y - c;
        const double fb = n.x * b.x + n.y * b.y - c;
        if (fa <= 0.0)
        {
            out.push_back(a);
        }
        if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0))
        {
            const double t = fa / (fa - fb);
            out.push_back({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
        }
    }
    return out;
}

double polygon_area(const std::vector<Point2>& poly)
{
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
    {
        const Point2 p = poly[i];
        const Point2 q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

} // namespace

std::vector<VoronoiCell> voronoi_cells(const GeographicSpec& geo)
{
    const auto& r = geo.region;
    std::vector<VoronoiCell> cells;
    for (std::size_t i = 0; i < geo.stations.size(); ++i)
    {
        std::vector<Point2> poly{{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
        const Point2 si = geo.stations[i];
        for (std::size_t j = 0; j < geo.stations.size() && !poly.empty(); ++j)
        {
            const Point2 sj = geo.stations[j];
            if (j == i || (sj.x == si.x && sj.y == si.y))
            {
                continue;
            }
            const Point2 n{2.0 * (sj.x - si.x), 2.0 * (sj.y - si.y)};
            const double c = sj.x * sj.x + sj.y * sj.y - si.x * si.x - si.y * si.y;
            poly = clip(poly, n, c);
        }
        cells.push_back({poly, polygon_area(poly)});
    }
    return cells;
}

std::vector<BorderSegment> border_segments(const GeographicSpec& geo)
{
    const auto cells = voronoi_cells(geo);
    const double scale = std::max(geo.region.x1 - geo.region.x0, geo.region.y1 - geo.region.y0);
    const double tol = 1e-9 * scale;
    std::vector<BorderSegment> out;
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
        const auto& poly = cells[i].polygon;
        for (std::size_t e = 0; e < poly.size(); ++e)
        {
            const Point2 a = poly[e];
            const Point2 b = poly[(e + 1) % poly.size()];
            if (dist(a, b) <= tol)
            {
                continue;
            }
            for (std::size_t j = i + 1; j < cells.size(); ++j)
            {
                const Point2 si = geo.stations[i];
                const Point2 sj = geo.stations[j];
                if (std::abs(dist(a, si) - dist(a, sj)) <= tol && std::abs(dist(b, si) - dist(b, sj)) <= tol)
                {
                    out.push_back({a, b, static_cast<int>(i), static_cast<int>(j)});
                }
            }
        }
    }
    return out;
}

double border_length(const GeographicSpec& geo)
{
    double total = 0.0;
    for (const auto& seg : border_segments(geo))
    {
        total += dist(seg.a, seg.b);
    }
    return total;
}

std::vector<double> zone_capacities(const GeographicSpec& geo, double mu_total)
{
    const auto cells = voronoi_cells(geo);
    std::vector<double> out;
    for (const auto& c : cells)
    {
        out.push_back(mu_total * c.area / geo.region.area());
    }
    return out;
}

OriginSet discretize(const GeographicSpec& geo, std::size_t nx, std::size_t ny)
{
    if (nx == 0 || ny == 0)
    {
        throw PlanningError("grid must have at least one cell per axis");
    }
    OriginSet out;
    const double hx = (geo.region.x1 - geo.region.x0) / static_cast<double>(nx);
    const double hy = (geo.region.y1 - geo.region.y0) / static_cast<double>(ny);
    const double p = 1.0 / static_cast<double>(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
    {
        for (std::size_t j = 0; j < ny; ++j)
        {
            const Point2 c{geo.region.x0 + (static_cast<double>(i) + 0.5) * hx,
                           geo.region.y0 + (static_cast<double>(j) + 0.5) * hy};
            std::vector<double> row;
            for (const auto& st : geo.stations)
            {
                row.push_back(dist(c, st) / geo.speed);
            }
            out.probs.push_back(p);
            out.delays.push_back(std::move(row));
        }
    }
    return out;
}

double chi_root_excess(double rho, double c_star)
{
    if (!(rho > 0.0 && rho < 1.0) || !(c_star > 0.0))
    {
        throw std::domain_error("root-of-excess rule needs 0 < rho < 1 and c > 0");
    }
    return c_star * std::sqrt(1.0 - rho);
}

double chi_reciprocal_root(double gamma_hat, double c_dstar)
{
    if (!(gamma_hat > 0.0) || !(c_dstar > 0.0))
    {
        throw std::domain_error("reciprocal-root rule needs a positive delay and c > 0");
    }
    return c_dstar / std::sqrt(gamma_hat);
}

double chi_for_delay(double delay_min, double c_dstar)
{
    return chi_reciprocal_root(delay_min, c_dstar);
}

ExtraDelay mean_extra_delay(const OriginSet& origins, DelayMode mode, double rho, bool delays_scaled,
                            const BorderStructure* borders)
{
    check_origins(origins);
    const std::size_t s = origins.stations();
    ExtraDelay out;
    if (mode == DelayMode::unaware)
    {
        for (std::size_t m = 0; m < origins.origins(); ++m)
        {
            for (std::size_t k = 0; k < s; ++k)
            {
                out.gamma_bar += origins.probs[m] * origins.delays[m][k];
            }
        }
        out.gamma_bar /= static_cast<double>(s);
    }
    else
    {
        if (borders == nullptr || borders->borders.size() != s)
        {
            throw std::invalid_argument("aware mode needs the border structure of these origins");
        }
        for (std::size_t k = 0; k < s; ++k)
        {
            if (!(borders->p_prime[k] > 0.0))
            {
                throw std::invalid_argument("border of station " + std::to_string(k + 1) + " is empty");
            }
            double acc = 0.0;
            for (int m : borders->borders[k])
            {
                acc += origins.probs[static_cast<std::size_t>(m)] * origins.delays[static_cast<std::size_t>(m)][k];
            }
            out.gamma_bar += acc / borders->p_prime[k];
        }
        out.gamma_bar /= static_cast<double>(s);
    }
    if (delays_scaled)
    {
        if (!(rho > 0.0 && rho < 1.0))
        {
            throw std::domain_error("scaled delays need 0 < rho < 1");
        }
        out.gamma_hat = out.gamma_bar / (1.0 - rho);
    }
    else
    {
        out.gamma_hat = out.gamma_bar;
    }
    return out;
}

ExtraDelay mean_extra_delay(const GeographicSpec& geo)
{
    double length = 0.0;
    double integral = 0.0;
    for (const auto& seg : border_segments(geo))
    {
        const double len = dist(seg.a, seg.b);
        const Point2 st = geo.stations[static_cast<std::size_t>(seg.left)];
        auto f = [&](double t) {
            const Point2 p{seg.a.x + t * (seg.b.x - seg.a.x), seg.a.y + t * (seg.b.y - seg.a.y)};
            return dist(p, st);
        };
        integral += len * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 10, 1e-12);
        length += len;
    }
    if (!(length > 0.0))
    {
        throw std::invalid_argument("geography has no border lines");
    }
    ExtraDelay out;
    out.gamma_bar = integral / length / geo.speed;
    out.gamma_hat = out.gamma_bar;
    return out;
}

double tau_from_chi(const GeographicSpec& geo, double chi_target, const TauOptions& options)
{
    if (!(chi_target >= 0.0) || !std::isfinite(chi_target))
    {
        throw std::invalid_argument("chi_target must be finite and nonnegative");
    }
    const double s = static_cast<double>(geo.stations.size());
    const double target = s * chi_target; // border probability
    if (target > 1.0)
    {
        throw std::invalid_argument("chi_target exceeds the largest attainable border mass");
    }
    auto rounded = [&](double tau) {
        return options.round_to > 0.0 ? std::round(tau / options.round_to) * options.round_to : tau;
    };
    if (chi_target == 0.0)
    {
        return 0.0;
    }
    if (options.model == WidthModel::band)
    {
        const double width_km = geo.region.area() * target / border_length(geo);
        return rounded(width_km / geo.speed);
    }
    const auto& r = geo.region;
    const double tau_max = std::hypot(r.x1 - r.x0, r.y1 - r.y0) / geo.speed;
    auto mass = [&](double tau) { return build_borders(geo, tau, options.samples, options.seed).border_mass; };
    if (mass(tau_max) < target)
    {
        throw std::invalid_argument("chi_target exceeds the largest attainable border mass");
    }
    double lo = 0.0;
    double hi = tau_max;
    for (int it = 0; it < 60 && hi - lo > 1e-6; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < target ? lo : hi) = mid;
    }
    return rounded(0.5 * (lo + hi));
}

} // namespace remoteq
