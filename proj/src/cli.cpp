#include "remoteq/config_io.hpp"
#include "remoteq/core.hpp"
#include "remoteq/harness.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace remoteq {

namespace {

struct Common
{
    std::string config;
    std::string out;
    std::size_t reps = 500;
    std::size_t parallel = 1;
    Overrides overrides;
    // CLI11 binds to plain values; copied into `overrides` when the flag was given.
    std::uint64_t seed = 0;
    double horizon = 0.0;
    double burnin = 0.0;
    double sample_dt = 0.0;
    double chi = 0.0;
    double tau_bar = 0.0;
    double delay = 0.0;
    double rho = 0.0;
};

struct Flags
{
    CLI::Option* seed = nullptr;
    CLI::Option* horizon = nullptr;
    CLI::Option* burnin = nullptr;
    CLI::Option* sample_dt = nullptr;
    CLI::Option* chi = nullptr;
    CLI::Option* tau_bar = nullptr;
    CLI::Option* delay = nullptr;
    CLI::Option* rho = nullptr;
};

Flags add_common(CLI::App* app, Common& c, bool needs_config)
{
    auto* cfg = app->add_option("--config", c.config, "scenario JSON file");
    if (needs_config)
    {
        cfg->required();
    }
    app->add_option("--out", c.out, "output file (default: stdout, or $REMOTEQ_OUT_DIR/<name>)");
    app->add_option("--reps", c.reps, "replications")->check(CLI::PositiveNumber);
    app->add_option("--parallel", c.parallel, "worker threads (0 = all cores)");
    Flags f;
    f.seed = app->add_option("--seed", c.seed, "base seed");
    f.horizon = app->add_option("--horizon", c.horizon, "horizon (minutes)");
    f.burnin = app->add_option("--burnin", c.burnin, "burn-in (minutes)");
    f.sample_dt = app->add_option("--sample-dt", c.sample_dt, "trajectory sampling period (minutes)");
    f.chi = app->add_option("--chi", c.chi, "balancing fraction");
    f.tau_bar = app->add_option("--tau-bar", c.tau_bar, "tolerance for delays (minutes)");
    f.delay = app->add_option("--delay", c.delay, "set every traveling delay (minutes)");
    f.rho = app->add_option("--rho", c.rho, "traffic intensity");
    return f;
}

void collect(Common& c, const Flags& f)
{
    if (f.seed->count()) c.overrides.seed = c.seed;
    if (f.horizon->count()) c.overrides.horizon = c.horizon;
    if (f.burnin->count()) c.overrides.burnin = c.burnin;
    if (f.sample_dt->count()) c.overrides.sample_dt = c.sample_dt;
    if (f.chi->count()) c.overrides.chi = c.chi;
    if (f.tau_bar->count()) c.overrides.tau_bar = c.tau_bar;
    if (f.delay->count()) c.overrides.delay = c.delay;
    if (f.rho->count()) c.overrides.rho = c.rho;
}

std::string out_path(const Common& c, const std::string& default_name)
{
    if (!c.out.empty())
    {
        return c.out;
    }
    if (const char* dir = std::getenv("REMOTEQ_OUT_DIR"); dir != nullptr && *dir != '\0')
    {
        return std::string(dir) + "/" + default_name;
    }
    return {};
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
    {
        throw std::runtime_error("cannot write " + path);
    }
    f << text;
}

std::string sibling(const std::string& path, const std::string& suffix)
{
    if (path.empty())
    {
        return {};
    }
    const auto dot = path.rfind('.');
    const auto slash = path.rfind('/');
    const auto stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? path.substr(0, dot)
                                                                                                 : path;
    return stem + suffix;
}

ScenarioConfig load(const Common& c)
{
    ScenarioConfig cfg = load_scenario(c.config);
    apply_overrides(cfg, c.overrides);
    if (auto v = validate_scenario(cfg); !v.empty())
    {
        throw ConfigError(std::move(v));
    }
    return cfg;
}

std::vector<double> parse_grid(const std::string& text)
{
    // "a:b:step" or a comma list.
    std::vector<double> out;
    if (text.find(':') != std::string::npos)
    {
        std::stringstream ss(text);
        std::string a, b, s;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, s, ':');
        const double lo = std::stod(a);
        const double hi = std::stod(b);
        const double step = std::stod(s);
        if (!(step > 0.0) || hi < lo)
        {
            throw ConfigError(std::vector<Violation>{{"grid", "expected lo:hi:step with step > 0 and hi >= lo"}});
        }
        const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
        for (long long i = 0; i <= count; ++i)
        {
            out.push_back(lo + static_cast<double>(i) * step);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        if (item == "inf")
        {
            out.push_back(std::numeric_limits<double>::infinity());
        }
        else
        {
            out.push_back(std::stod(item));
        }
    }
    return out;
}

std::string rows_csv(const std::vector<ResultRow>& rows)
{
    std::ostringstream out;
    write_rows(out, rows);
    return out.str();
}

} // namespace

int cli_main(int argc, char** argv)
{
    CLI::App app{"remoteq: simulation and planning for remote queues under randomized shortest-queue routing"};
    app.require_subcommand(1);

    Common sim_c;
    auto* sim = app.add_subcommand("simulate", "replicate one scenario and write aggregate rows");
    const auto sim_f = add_common(sim, sim_c, true);

    Common sw_c;
    std::string sw_var = "chi";
    std::string sw_grid = "0:0.5:0.01";
    auto* sw = app.add_subcommand("sweep", "MTCC over a grid of one variable");
    const auto sw_f = add_common(sw, sw_c, true);
    sw->add_option("--var", sw_var, "chi | tau_bar | delay | rho | n");
    sw->add_option("--grid", sw_grid, "lo:hi:step or comma list");

    Common sc_c;
    std::string sc_n = "100,400,1600,6400";
    std::string sc_rule = "corollary1";
    ScalingSpec sc_spec;
    auto* sc = app.add_subcommand("scaling", "fit the growth of the scaled load imbalance in n");
    const auto sc_f = add_common(sc, sc_c, false);
    sc->add_option("--n-grid", sc_n, "comma list of n");
    sc->add_option("--rule", sc_rule, "fixed | root_excess | corollary1");
    sc->add_option("--constant", sc_spec.constant, "chi constant");
    sc->add_option("--d", sc_spec.d, "primitive delay");
    sc->add_option("--T", sc_spec.T, "horizon per unit n");

    Common pl_c;
    std::string pl_caps = "joint";
    std::string pl_width = "band";
    std::string pl_scenario;
    auto* pl = app.add_subcommand("plan", "capacities, routing plan, chi and tau_bar for a scenario");
    const auto pl_f = add_common(pl, pl_c, true);
    pl->add_option("--capacities", pl_caps, "joint | config");
    pl->add_option("--width-model", pl_width, "band | exact");
    pl->add_option("--scenario-out", pl_scenario, "write the derived scenario here");

    Common tb_c;
    std::string tb_id;
    double tb_coarse = 0.01;
    double tb_fine = 0.002;
    auto* tb = app.add_subcommand("table", "reproduce a results table (t1, t2, t3)");
    const auto tb_f = add_common(tb, tb_c, false);
    tb->add_option("--id", tb_id, "t1 | t2 | t3")->required();
    tb->add_option("--coarse-step", tb_coarse, "coarse chi grid step for chi_opt");
    tb->add_option("--fine-step", tb_fine, "fine chi grid step for chi_opt");

    Common cp_c;
    std::string cp_pool = "both";
    std::string cp_gap;
    auto* cp = app.add_subcommand("coupled", "pathwise lower-bound systems and workload gaps");
    const auto cp_f = add_common(cp, cp_c, true);
    cp->add_option("--pool", cp_pool, "ssp | mdsp | both");
    cp->add_option("--gap-out", cp_gap, "gap CSV (t,gamma) of replication 0, one file per pool");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try
    {
        if (*sim)
        {
            collect(sim_c, sim_f);
            const auto cfg = load(sim_c);
            RunOptions none;
            const auto stats = run_replications(cfg, sim_c.reps, sim_c.parallel);
            const auto path = out_path(sim_c, cfg.id + "_simulate.csv");
            emit(path, rows_csv(summarize(cfg, stats)));
            if (cfg.sample_dt > 0.0)
            {
                const auto traj = run(cfg, 0, none).trajectory;
                const auto tpath = path.empty() ? out_path(sim_c, cfg.id + "_trajectory.csv")
                                                : sibling(path, "_trajectory.csv");
                if (tpath.empty())
                {
                    std::cerr << "trajectory not written: give --out or set REMOTEQ_OUT_DIR\n";
                }
                else
                {
                    emit(tpath, traj.to_csv());
                }
            }
        }
        else if (*sw)
        {
            collect(sw_c, sw_f);
            SweepSpec spec;
            spec.base = load(sw_c);
            spec.variable = sw_var;
            spec.grid = parse_grid(sw_grid);
            spec.reps = sw_c.reps;
            const auto res = run_sweep(spec, sw_c.parallel);
            std::ostringstream out;
            out << kResultHeader << ",value\n";
            for (const auto& p : res.points)
            {
                std::ostringstream rows;
                write_rows(rows, p.rows, false);
                std::string line;
                std::istringstream in(rows.str());
                while (std::getline(in, line))
                {
                    out << line << ',' << format_number(p.value) << '\n';
                }
            }
            emit(out_path(sw_c, spec.base.id + "_sweep.csv"), out.str());
            std::cerr << "argmin " << sw_var << " = " << format_number(res.argmin) << '\n';
        }
        else if (*sc)
        {
            collect(sc_c, sc_f);
            sc_spec.n_grid = parse_grid(sc_n);
            if (sc_rule == "fixed")
            {
                sc_spec.rule = ChiRule::fixed;
            }
            else if (sc_rule == "root_excess")
            {
                sc_spec.rule = ChiRule::root_excess;
            }
            else if (sc_rule == "corollary1")
            {
                sc_spec.rule = ChiRule::corollary1;
            }
            else
            {
                throw ConfigError(std::vector<Violation>{{"rule", "expected fixed, root_excess or corollary1"}});
            }
            sc_spec.reps = sc_c.reps;
            sc_spec.seed = sc_c.overrides.seed.value_or(1);
            const auto res = run_scaling(sc_spec, sc_c.parallel);
            std::ostringstream out;
            out << "n,chi,median_scaled_imbalance,reps,slope,slope_se\n";
            for (const auto& p : res.points)
            {
                out << format_number(p.n) << ',' << format_number(p.chi) << ','
                    << format_number(p.median_scaled_imbalance) << ',' << p.scaled_imbalance.size() << ','
                    << format_number(res.slope) << ',' << format_number(res.slope_se) << '\n';
            }
            emit(out_path(sc_c, "scaling_" + sc_rule + ".csv"), out.str());
        }
        else if (*pl)
        {
            collect(pl_c, pl_f);
            const auto cfg = load(pl_c);
            PlanOptions opt;
            if (pl_caps == "config")
            {
                opt.capacities = CapacitySource::config;
            }
            else if (pl_caps != "joint")
            {
                throw ConfigError(std::vector<Violation>{{"capacities", "expected joint or config"}});
            }
            if (pl_width == "exact")
            {
                opt.width_model = WidthModel::exact;
            }
            else if (pl_width != "band")
            {
                throw ConfigError(std::vector<Violation>{{"width-model", "expected band or exact"}});
            }
            const auto rep = run_plan(cfg, opt);
            emit(out_path(pl_c, cfg.id + "_plan.json"), plan_to_json(rep).dump(2) + "\n");
            if (!pl_scenario.empty())
            {
                save_scenario(rep.derived, pl_scenario);
            }
            for (const auto& w : rep.borders.warnings)
            {
                std::cerr << "warning: " << w << '\n';
            }
        }
        else if (*tb)
        {
            collect(tb_c, tb_f);
            if (tb_id != "t1" && tb_id != "t2" && tb_id != "t3")
            {
                std::cerr << "unknown table id '" << tb_id << "' (expected t1, t2 or t3)\n";
                return kExitConfig;
            }
            const auto text =
                run_table(tb_id, tb_c.reps, tb_c.overrides.seed.value_or(1), tb_c.parallel, tb_coarse, tb_fine);
            emit(out_path(tb_c, "table_" + tb_id + ".csv"), text);
        }
        else if (*cp)
        {
            collect(cp_c, cp_f);
            const auto cfg = load(cp_c);
            std::vector<std::pair<std::string, PoolKind>> pools;
            if (cp_pool == "ssp" || cp_pool == "both")
            {
                pools.emplace_back("ssp", PoolKind::ssp);
            }
            if (cp_pool == "mdsp" || cp_pool == "both")
            {
                pools.emplace_back("mdsp", PoolKind::mdsp);
            }
            if (pools.empty())
            {
                throw ConfigError(std::vector<Violation>{{"pool", "expected ssp, mdsp or both"}});
            }
            ScenarioConfig resolved = cfg;
            resolve_traffic(resolved);
            std::vector<ResultRow> rows;
            for (const auto& [name, kind] : pools)
            {
                const auto sum = run_coupled_replications(cfg, kind, cp_c.reps);
                const auto lo = *std::min_element(sum.min_gap.begin(), sum.min_gap.end());
                auto row = [&](const std::string& metric, Estimate e) {
                    rows.push_back({cfg.id, to_string(cfg.policy.kind), cfg.policy.chi, delay_descriptor(cfg),
                                    resolved.traffic.rho, metric, e});
                };
                row("min_gap_" + name, Estimate{lo, 0.0, sum.min_gap.size()});
                row("sup_gap_" + name, estimate(sum.sup_gap));
                row("scaled_sup_gap_" + name, estimate(sum.scaled_sup_gap));
                if (!cp_gap.empty())
                {
                    const auto first = run_coupled(cfg, PoolSpec::for_scenario(cfg, kind), 0);
                    emit(sibling(cp_gap, "_" + name + ".csv"), first.gap_csv());
                }
            }
            emit(out_path(cp_c, cfg.id + "_coupled.csv"), rows_csv(rows));
        }
    }
    catch (const ConfigError& e)
    {
        std::cerr << "configuration error:\n" << format_violations(e.violations()) << '\n';
        return kExitConfig;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace remoteq
