#include "remoteq/harness.hpp"

#include "remoteq/config_io.hpp"
#include "remoteq/core.hpp"
#include "remoteq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace remoteq {

void apply_overrides(ScenarioConfig& cfg, const Overrides& o)
{
    if (o.seed)
    {
        cfg.seed = *o.seed;
    }
    if (o.horizon)
    {
        cfg.horizon_min = *o.horizon;
    }
    if (o.burnin)
    {
        cfg.burnin_min = *o.burnin;
    }
    if (o.sample_dt)
    {
        cfg.sample_dt = *o.sample_dt;
    }
    if (o.chi)
    {
        cfg.policy.chi = *o.chi;
    }
    if (o.tau_bar)
    {
        cfg.policy.tau_bar = *o.tau_bar;
    }
    if (o.delay)
    {
        for (auto& origin : cfg.origins)
        {
            std::fill(origin.delays.begin(), origin.delays.end(), *o.delay);
        }
    }
    if (o.rho)
    {
        cfg.traffic.rho = *o.rho;
        cfg.traffic.appearance_rate = 0.0;
        cfg.traffic.n = 0.0;
    }
}

ScenarioConfig make_symmetric(std::size_t stations, double rho, double delay_min, double chi)
{
    ScenarioConfig cfg;
    cfg.id = "s" + std::to_string(stations) + "_rho" + format_number(rho) + "_d" + format_number(delay_min);
    cfg.stations.assign(stations, StationConfig{});
    cfg.origins = {OriginSpec{1.0, std::vector<double>(stations, delay_min)}};
    cfg.traffic.rho = rho;
    cfg.policy.kind = PolicyKind::rjsq_unaware;
    cfg.policy.chi = chi;
    return cfg;
}

ScenarioConfig make_geographic(double tau_bar, const DistDescriptor& service)
{
    ScenarioConfig cfg;
    cfg.id = "geo_tau" + format_number(tau_bar) + "_" + to_string(service.kind);
    for (double mu : {1.0, 1.5, 1.5})
    {
        cfg.stations.push_back(StationConfig{mu, service});
    }
    GeographicSpec geo;
    geo.region = {0.0, 0.0, 20.0, 20.0};
    geo.stations = {{5.0, 5.0}, {5.0, 15.0}, {15.0, 5.0}};
    geo.speed = 0.1;
    cfg.geography = geo;
    cfg.traffic.appearance_rate = 3.96;
    cfg.policy.kind = PolicyKind::tolerance_geo;
    cfg.policy.tau_bar = tau_bar;
    return cfg;
}

double jsq_chi(const ScenarioConfig& cfg)
{
    const auto mus = service_rates(cfg);
    const double mu = std::accumulate(mus.begin(), mus.end(), 0.0);
    return static_cast<double>(mus.size() - 1) * *std::min_element(mus.begin(), mus.end()) / mu;
}

double delay_descriptor(const ScenarioConfig& cfg_in)
{
    if (cfg_in.geography || cfg_in.origins.empty())
    {
        return 0.0;
    }
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    const auto d = effective_delays(cfg);
    double acc = 0.0;
    for (std::size_t m = 0; m < d.size(); ++m)
    {
        acc += cfg.origins[m].probability * *std::min_element(d[m].begin(), d[m].end());
    }
    return acc;
}

std::vector<ResultRow> summarize(const ScenarioConfig& cfg_in, const std::vector<SampleStats>& stats)
{
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    std::vector<ReplicationSummary> summaries;
    for (std::size_t r = 0; r < stats.size(); ++r)
    {
        summaries.push_back(ReplicationSummary::from_stats(stats[r], r));
    }
    const auto est = aggregate(summaries);
    std::vector<ResultRow> rows;
    const double chi = cfg.policy.kind == PolicyKind::tolerance_geo ? cfg.policy.tau_bar : cfg.policy.chi;
    for (const char* metric :
         {"mtcc", "mean_wait", "mean_travel", "mean_time_to_service", "imbalance_sup", "chi_emergent"})
    {
        rows.push_back({cfg.id, to_string(cfg.policy.kind), chi, delay_descriptor(cfg), cfg.traffic.rho, metric,
                        est.at(metric)});
    }
    return rows;
}

ScenarioConfig sweep_scenario(const SweepSpec& spec, double value)
{
    ScenarioConfig cfg = spec.base;
    Overrides o;
    if (spec.variable == "chi")
    {
        o.chi = value;
    }
    else if (spec.variable == "tau_bar")
    {
        o.tau_bar = value;
    }
    else if (spec.variable == "delay")
    {
        o.delay = value;
    }
    else if (spec.variable == "rho")
    {
        o.rho = value;
    }
    else if (spec.variable == "n")
    {
        if (!(value > 1.0))
        {
            throw ConfigError(std::vector<Violation>{{"sweep.grid", "n must exceed 1"}});
        }
        o.rho = 1.0 - 1.0 / std::sqrt(value);
        apply_overrides(cfg, o);
        cfg.traffic.n = value;
        return cfg;
    }
    else
    {
        throw ConfigError(std::vector<Violation>{{"sweep.variable", "unknown sweep variable '" + spec.variable + "'"}});
    }
    apply_overrides(cfg, o);
    return cfg;
}

SweepResult run_sweep(const SweepSpec& spec, std::size_t parallel)
{
    if (spec.grid.empty())
    {
        throw ConfigError(std::vector<Violation>{{"sweep.grid", "grid is empty"}});
    }
    SweepResult out;
    double best = std::numeric_limits<double>::infinity();
    for (double v : spec.grid)
    {
        const ScenarioConfig cfg = sweep_scenario(spec, v);
        const auto stats = run_replications(cfg, spec.reps, parallel);
        SweepPoint p;
        p.value = v;
        p.rows = summarize(cfg, stats);
        for (const auto& r : p.rows)
        {
            if (r.metric == "mtcc")
            {
                p.mtcc = r.estimate;
            }
        }
        if (p.mtcc.mean < best)
        {
            best = p.mtcc.mean;
            out.argmin = v;
        }
        out.points.push_back(std::move(p));
    }
    return out;
}

ChiSearch search_chi(const ScenarioConfig& base, std::size_t reps, double coarse, double fine, std::size_t parallel)
{
    const double chi_max = jsq_chi(base);
    std::map<long long, std::pair<double, Estimate>> cache; // keyed by chi in 1e-9 units
    auto eval = [&](double chi) {
        chi = std::clamp(chi, 0.0, chi_max);
        const long long key = std::llround(chi * 1e9);
        auto it = cache.find(key);
        if (it == cache.end())
        {
            ScenarioConfig cfg = base;
            cfg.policy.chi = chi;
            const auto stats = run_replications(cfg, reps, parallel);
            std::vector<double> v;
            for (const auto& s : stats)
            {
                v.push_back(s.time_avg_total_count);
            }
            it = cache.emplace(key, std::make_pair(chi, estimate(v))).first;
        }
        return it->second;
    };
    auto argmin = [&]() {
        double best = std::numeric_limits<double>::infinity();
        double at = 0.0;
        for (const auto& [key, p] : cache)
        {
            if (p.second.mean < best)
            {
                best = p.second.mean;
                at = p.first;
            }
        }
        return at;
    };
    const auto steps = static_cast<long long>(std::floor(chi_max / coarse + 1e-9));
    for (long long i = 0; i <= steps; ++i)
    {
        eval(static_cast<double>(i) * coarse);
    }
    eval(chi_max);
    const double centre = argmin();
    const auto lo = static_cast<long long>(std::ceil((centre - coarse) / fine - 1e-9));
    const auto hi = static_cast<long long>(std::floor((centre + coarse) / fine + 1e-9));
    for (long long i = std::max(0LL, lo); i <= hi; ++i)
    {
        eval(static_cast<double>(i) * fine);
    }
    ChiSearch out;
    out.chi_opt = argmin();
    out.cc_opt = eval(out.chi_opt).second;
    for (const auto& [key, p] : cache)
    {
        out.curve.emplace_back(p.first, p.second.mean);
    }
    return out;
}

double scaling_chi(ChiRule rule, double constant, double n)
{
    switch (rule)
    {
    case ChiRule::fixed: return constant;
    case ChiRule::root_excess: return constant * std::pow(n, -0.25);
    case ChiRule::corollary1: return constant * std::pow(n, -0.25) * std::sqrt(std::log(n));
    }
    return constant;
}

ScenarioConfig scaling_scenario(const ScalingSpec& spec, double n)
{
    ScenarioConfig cfg = make_symmetric(2, 1.0 - 1.0 / std::sqrt(n), spec.d, 0.0);
    cfg.id = "scaling_n" + format_number(n);
    cfg.delays_scaled = true;
    cfg.traffic.n = n;
    cfg.policy.chi = std::min(scaling_chi(spec.rule, spec.constant, n), 0.5);
    cfg.horizon_min = n * spec.T;
    cfg.burnin_min = 0.0;
    cfg.seed = spec.seed;
    return cfg;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (x.size() > 2)
    {
        double sse = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double e = y[i] - f.intercept - f.slope * x[i];
            sse += e * e;
        }
        f.slope_se = std::sqrt(sse / (k - 2.0) / sxx);
    }
    return f;
}

ScalingResult run_scaling(const ScalingSpec& spec, std::size_t parallel)
{
    const std::set<double> distinct(spec.n_grid.begin(), spec.n_grid.end());
    if (distinct.size() < 3)
    {
        throw std::invalid_argument("scaling fit needs at least 3 distinct values of n");
    }
    if (spec.reps == 0)
    {
        throw std::invalid_argument("scaling needs at least one replication");
    }
    ScalingResult out;
    std::vector<double> lx;
    std::vector<double> ly;
    for (double n : distinct)
    {
        const auto cfg = scaling_scenario(spec, n);
        const auto stats = run_replications(cfg, spec.reps, parallel);
        ScalingPoint p;
        p.n = n;
        p.chi = cfg.policy.chi;
        for (const auto& s : stats)
        {
            p.scaled_imbalance.push_back(s.imbalance_sup / std::sqrt(n));
        }
        auto sorted = p.scaled_imbalance;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t h = sorted.size() / 2;
        p.median_scaled_imbalance = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
        if (p.median_scaled_imbalance > 0.0)
        {
            lx.push_back(std::log(n));
            ly.push_back(std::log(p.median_scaled_imbalance));
        }
        out.points.push_back(std::move(p));
    }
    if (lx.size() < 3)
    {
        throw std::invalid_argument("scaling fit has fewer than 3 usable points");
    }
    const auto fit = fit_line(lx, ly);
    out.slope = fit.slope;
    out.slope_se = fit.slope_se;
    return out;
}

PlanReport run_plan(const ScenarioConfig& cfg_in, const PlanOptions& options)
{
    if (auto v = validate_scenario(cfg_in); !v.empty())
    {
        throw ConfigError(std::move(v));
    }
    ScenarioConfig cfg = cfg_in;
    resolve_traffic(cfg);
    const double mu_total = cfg.total_service_rate();
    PlanReport rep;
    rep.derived = cfg;
    rep.derived.id = cfg.id + "_planned";
    if (cfg.geography)
    {
        const auto& geo = *cfg.geography;
        rep.joint.capacities = zone_capacities(geo, mu_total);
        rep.joint.gbc = true;
        const auto grid = discretize(geo, options.grid, options.grid);
        const auto grid_lp = solve_joint_lp(grid, mu_total);
        rep.grid_capacities = grid_lp.capacities;
        rep.joint.objective = grid_lp.objective;
        rep.extra_delay = mean_extra_delay(geo);
        rep.chi_dstar = chi_reciprocal_root(rep.extra_delay.gamma_hat, options.c_dstar);
        TauOptions topt;
        topt.model = options.width_model;
        topt.seed = cfg.seed;
        rep.tau_bar = tau_from_chi(geo, rep.chi_dstar, topt);
        rep.borders = build_borders(geo, rep.tau_bar, 1'000'000, cfg.seed);
        if (options.capacities == CapacitySource::joint)
        {
            for (std::size_t k = 0; k < rep.derived.stations.size(); ++k)
            {
                rep.derived.stations[k].service_rate = rep.joint.capacities[k];
            }
        }
        rep.derived.policy.kind = PolicyKind::tolerance_geo;
        rep.derived.policy.tau_bar = rep.tau_bar;
        rep.derived.policy.chi = rep.chi_dstar;
        return rep;
    }
    const auto origins = OriginSet::from_scenario(cfg);
    rep.joint = solve_joint_lp(origins, mu_total);
    rep.joint.gbc = is_gbc(origins, rep.joint.plan);
    const auto capacities = options.capacities == CapacitySource::joint ? rep.joint.capacities : service_rates(cfg);
    rep.routing = solve_routing_lp(origins, capacities);
    rep.routing_objective = plan_objective(origins, rep.routing);
    rep.extra_delay = mean_extra_delay(origins, DelayMode::unaware, cfg.traffic.rho, false);
    rep.chi_dstar = rep.extra_delay.gamma_hat > 0.0 ? chi_reciprocal_root(rep.extra_delay.gamma_hat, options.c_dstar)
                                                    : 0.0;
    for (std::size_t k = 0; k < rep.derived.stations.size(); ++k)
    {
        rep.derived.stations[k].service_rate = capacities[k];
    }
    const double bound = jsq_chi(rep.derived);
    rep.derived.policy.kind = origins.origins() > 1 ? PolicyKind::rjsq_aware : PolicyKind::rjsq_unaware;
    rep.derived.policy.plan = origins.origins() > 1 ? rep.routing : RoutingPlan{};
    rep.derived.policy.chi = rep.extra_delay.gamma_hat > 0.0 ? std::min(rep.chi_dstar, bound) : bound;
    return rep;
}

nlohmann::json plan_to_json(const PlanReport& r)
{
    nlohmann::json j;
    j["capacities"] = r.joint.capacities;
    j["objective"] = r.joint.objective;
    j["gbc"] = r.joint.gbc;
    if (!r.joint.plan.empty())
    {
        j["joint_plan"] = r.joint.plan.to_rows();
    }
    if (!r.grid_capacities.empty())
    {
        j["grid_capacities"] = r.grid_capacities;
    }
    if (!r.routing.empty())
    {
        j["routing_plan"] = r.routing.to_rows();
        j["routing_objective"] = r.routing_objective;
    }
    j["gamma_bar"] = r.extra_delay.gamma_bar;
    j["gamma_hat"] = r.extra_delay.gamma_hat;
    j["chi_dstar"] = r.chi_dstar;
    if (r.derived.geography)
    {
        j["tau_bar"] = r.tau_bar;
        j["border_mass"] = r.borders.border_mass;
        j["p_prime"] = r.borders.p_prime;
        j["warnings"] = r.borders.warnings;
    }
    j["scenario"] = scenario_to_json(r.derived);
    return j;
}

namespace {

std::string fmt(double v) { return format_number(v); }

std::vector<SampleStats> replicate(ScenarioConfig cfg, double chi, std::size_t reps, std::size_t parallel)
{
    cfg.policy.chi = chi;
    return run_replications(cfg, reps, parallel);
}

Estimate mtcc_of(const std::vector<SampleStats>& stats)
{
    std::vector<double> v;
    for (const auto& s : stats)
    {
        v.push_back(s.time_avg_total_count);
    }
    return estimate(v);
}

std::string multi_station_table(std::size_t stations, std::size_t reps, std::uint64_t seed, std::size_t parallel,
                                double coarse, double fine)
{
    std::ostringstream out;
    out << "rho,delay,chi_opt,cc_opt,cc_opt_hw,chi_star,cc_star,cc_star_hw,chi_dstar,cc_dstar,cc_dstar_hw,"
           "cc_0,cc_0_hw,chi_jsq,cc_jsq,cc_jsq_hw,reps\n";
    const std::vector<std::pair<double, std::vector<double>>> layout{
        {0.90, {0, 1, 5, 10, 20, 100}},
        {0.99, {0, 10, 50, 100, 200, 1000}},
    };
    for (const auto& [rho, delays] : layout)
    {
        for (double d : delays)
        {
            ScenarioConfig cfg = make_symmetric(stations, rho, d, 0.0);
            cfg.seed = seed;
            const double chi_jsq = jsq_chi(cfg);
            const double chi_star = std::min(chi_root_excess(rho), chi_jsq);
            const double chi_dstar = d > 0.0 ? std::min(chi_for_delay(d), chi_jsq) : chi_jsq;
            const auto opt = search_chi(cfg, reps, coarse, fine, parallel);
            const auto cc_star = mtcc_of(replicate(cfg, chi_star, reps, parallel));
            const auto cc_dstar = mtcc_of(replicate(cfg, chi_dstar, reps, parallel));
            const auto cc_0 = mtcc_of(replicate(cfg, 0.0, reps, parallel));
            const auto cc_jsq = mtcc_of(replicate(cfg, chi_jsq, reps, parallel));
            out << fmt(rho) << ',' << fmt(d) << ',' << fmt(opt.chi_opt) << ',' << fmt(opt.cc_opt.mean) << ','
                << fmt(opt.cc_opt.half_width) << ',' << fmt(chi_star) << ',' << fmt(cc_star.mean) << ','
                << fmt(cc_star.half_width) << ',' << fmt(chi_dstar) << ',' << fmt(cc_dstar.mean) << ','
                << fmt(cc_dstar.half_width) << ',' << fmt(cc_0.mean) << ',' << fmt(cc_0.half_width) << ','
                << fmt(chi_jsq) << ',' << fmt(cc_jsq.mean) << ',' << fmt(cc_jsq.half_width) << ',' << reps << '\n';
        }
    }
    return out.str();
}

std::string geographic_table(std::size_t reps, std::uint64_t seed, std::size_t parallel)
{
    std::ostringstream out;
    out << "tau_bar,service,chi,chi_hw,delay,delay_hw,waiting,waiting_hw,time_to_service,time_to_service_hw,reps\n";
    const double inf = std::numeric_limits<double>::infinity();
    for (const auto& service : {DistDescriptor::exponential(), DistDescriptor::lognormal(3.0)})
    {
        for (double tau : {0.0, 5.0, 10.0, 15.0, 16.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, inf})
        {
            ScenarioConfig cfg = make_geographic(tau, service);
            cfg.seed = seed;
            const auto stats = run_replications(cfg, reps, parallel);
            std::vector<double> chi;
            std::vector<double> delay;
            std::vector<double> wait;
            std::vector<double> tts;
            for (const auto& s : stats)
            {
                chi.push_back(s.chi_emergent);
                delay.push_back(s.mean_travel);
                wait.push_back(s.mean_wait);
                tts.push_back(s.mean_time_to_service);
            }
            const auto ec = estimate(chi);
            const auto ed = estimate(delay);
            const auto ew = estimate(wait);
            const auto et = estimate(tts);
            out << fmt(tau) << ',' << to_string(service.kind) << ',' << fmt(ec.mean) << ',' << fmt(ec.half_width)
                << ',' << fmt(ed.mean) << ',' << fmt(ed.half_width) << ',' << fmt(ew.mean) << ','
                << fmt(ew.half_width) << ',' << fmt(et.mean) << ',' << fmt(et.half_width) << ',' << reps << '\n';
        }
    }
    return out.str();
}

} // namespace

std::string run_table(const std::string& id, std::size_t reps, std::uint64_t seed, std::size_t parallel, double coarse,
                      double fine)
{
    if (id == "t1")
    {
        return multi_station_table(2, reps, seed, parallel, coarse, fine);
    }
    if (id == "t2")
    {
        return multi_station_table(5, reps, seed, parallel, coarse, fine);
    }
    if (id == "t3")
    {
        return geographic_table(reps, seed, parallel);
    }
    throw std::invalid_argument("unknown table id '" + id + "' (expected t1, t2 or t3)");
}

CoupledSummary run_coupled_replications(const ScenarioConfig& cfg, PoolKind kind, std::size_t reps)
{
    CoupledSummary out;
    const auto pool = PoolSpec::for_scenario(cfg, kind);
    for (std::size_t r = 0; r < reps; ++r)
    {
        const auto run = run_coupled(cfg, pool, r);
        const auto sup = gap_supremum(run);
        out.min_gap.push_back(run.min_gap);
        out.sup_gap.push_back(sup.sup);
        out.scaled_sup_gap.push_back(sup.scaled);
    }
    return out;
}

} // namespace remoteq
