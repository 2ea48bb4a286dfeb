#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "remoteq/config_io.hpp"
#include "remoteq/core.hpp"
#include "remoteq/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace remoteq;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = REMOTEQ_SOURCE_DIR "/scenarios/";

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "remoteq");
    std::vector<char*> argv;
    for (auto& a : args)
    {
        argv.push_back(a.data());
    }
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "remoteq_test_harness";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("every shipped scenario loads and survives a JSON round trip")
{
    for (const auto& entry : fs::directory_iterator(kScenarios))
    {
        CAPTURE(entry.path().string());
        const auto cfg = load_scenario(entry.path().string());
        CHECK(validate_scenario(cfg).empty());
        const auto j = scenario_to_json(cfg);
        const auto back = scenario_from_json(j);
        CHECK(scenario_to_json(back) == j);
    }
}

TEST_CASE("round trip keeps infinite tolerance and plans")
{
    auto cfg = make_geographic(std::numeric_limits<double>::infinity(), DistDescriptor::lognormal(3.0));
    const auto back = scenario_from_json(scenario_to_json(cfg));
    CHECK(std::isinf(back.policy.tau_bar));
    CHECK(back.stations[1].service.kind == DistKind::lognormal);
    CHECK(back.stations[1].service.variance == 3.0);
    const auto aware = load_scenario(kScenarios + "three_origin_aware.json");
    CHECK(aware.policy.plan.to_rows() == std::vector<std::vector<double>>{{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}});
}

TEST_CASE("unknown keys and bad values are reported together")
{
    auto j = scenario_to_json(make_symmetric(2, 0.9, 10.0, 0.1));
    j["colour"] = "blue";
    j["traffic"]["rho"] = "high";
    try
    {
        scenario_from_json(j);
        FAIL("expected a configuration error");
    }
    catch (const ConfigError& e)
    {
        const std::string what = e.what();
        CHECK(what.find("colour") != std::string::npos);
        CHECK(what.find("rho") != std::string::npos);
    }
}

TEST_CASE("builders")
{
    const auto s = make_symmetric(2, 0.99, 100.0, 0.042);
    CHECK(s.id == "s2_rho0.99_d100");
    CHECK(validate_scenario(s).empty());
    CHECK(jsq_chi(s) == doctest::Approx(0.5));
    CHECK(delay_descriptor(s) == 100.0);
    const auto five = make_symmetric(5, 0.99, 100.0, 0.0);
    CHECK(jsq_chi(five) == doctest::Approx(0.8));
    const auto g = make_geographic(16.0, DistDescriptor::exponential());
    CHECK(validate_scenario(g).empty());
    CHECK(delay_descriptor(g) == 0.0);
    CHECK(jsq_chi(g) == doctest::Approx(0.5));
}

TEST_CASE("overrides")
{
    auto cfg = make_symmetric(2, 0.9, 10.0, 0.1);
    Overrides o;
    o.delay = 3.0;
    o.rho = 0.95;
    o.chi = 0.2;
    o.seed = 17;
    apply_overrides(cfg, o);
    CHECK(cfg.origins[0].delays == std::vector<double>{3.0, 3.0});
    CHECK(cfg.traffic.rho == 0.95);
    CHECK(cfg.policy.chi == 0.2);
    CHECK(cfg.seed == 17);
}

TEST_CASE("single-point sweep")
{
    SweepSpec spec;
    spec.base = make_symmetric(2, 0.9, 5.0, 0.0);
    spec.base.horizon_min = 5000.0;
    spec.base.burnin_min = 500.0;
    spec.grid = {0.1};
    spec.reps = 3;
    const auto r = run_sweep(spec);
    REQUIRE(r.points.size() == 1);
    CHECK(r.argmin == 0.1);
    CHECK(r.points[0].mtcc.count == 3);
    CHECK(r.points[0].rows.size() == 6);
    CHECK(r.points[0].rows[0].chi == 0.1);
}

TEST_CASE("scaling rules and degenerate grids")
{
    CHECK(scaling_chi(ChiRule::fixed, 0.3, 100.0) == 0.3);
    CHECK(scaling_chi(ChiRule::root_excess, 0.4, 16.0) == doctest::Approx(0.2));
    CHECK(scaling_chi(ChiRule::corollary1, 0.4, 10000.0) == doctest::Approx(0.04 * std::sqrt(std::log(10000.0))));
    ScalingSpec wide;
    wide.rule = ChiRule::fixed;
    wide.constant = 0.9;
    CHECK(scaling_scenario(wide, 100.0).policy.chi == 0.5);
    ScalingSpec spec;
    spec.n_grid = {100.0, 100.0, 400.0};
    CHECK_THROWS_AS(run_scaling(spec), std::invalid_argument);
    const auto cfg = scaling_scenario(ScalingSpec{}, 400.0);
    CHECK(cfg.traffic.rho == doctest::Approx(0.95));
    CHECK(cfg.horizon_min == doctest::Approx(400.0 * 50.0));
    CHECK(cfg.delays_scaled);
}

TEST_CASE("line fit")
{
    const auto f = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope_se == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("plan report for the geographic scenario")
{
    const auto cfg = load_scenario(kScenarios + "geographic_square.json");
    const auto rep = run_plan(cfg);
    CHECK(rep.joint.capacities[0] == doctest::Approx(1.0));
    CHECK(rep.extra_delay.gamma_bar == doctest::Approx(76.93).epsilon(1e-3));
    CHECK(rep.chi_dstar == doctest::Approx(0.0456).epsilon(1e-3));
    CHECK(rep.tau_bar == 16.0);
    CHECK(rep.derived.policy.kind == PolicyKind::tolerance_geo);
    CHECK(plan_to_json(rep).contains("tau_bar"));
}

TEST_CASE("cli exit codes and reproducible output")
{
    const auto bad = scratch("bad.json");
    std::ofstream(bad) << "{ not json";
    CHECK(cli({"simulate", "--config", bad.string(), "--reps", "1"}) == kExitConfig);
    CHECK(cli({"simulate", "--config", kScenarios + "mm1_pair.json", "--rho", "1.5", "--reps", "1"}) == kExitConfig);
    CHECK(cli({"simulate", "--bogus"}) == kExitConfig);
    CHECK(cli({"table", "--id", "t9", "--reps", "1"}) == kExitConfig);

    const auto a = scratch("a.csv");
    const auto b = scratch("b.csv");
    for (const auto& out : {a, b})
    {
        CHECK(cli({"simulate", "--config", kScenarios + "mm1_pair.json", "--reps", "4", "--horizon", "3000",
                   "--burnin", "300", "--out", out.string()}) == kExitOk);
    }
    const auto text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(text.rfind(kResultHeader, 0) == 0);
    CHECK(cli({"simulate", "--config", kScenarios + "mm1_pair.json", "--reps", "4", "--horizon", "3000",
               "--burnin", "300", "--parallel", "2", "--out", b.string()}) == kExitOk);
    CHECK(text == slurp(b));
}
