#include "remoteq/config_io.hpp"

#include "remoteq/core.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace remoteq {

using nlohmann::json;

namespace {

class Reader
{
public:
    std::vector<Violation> problems;

    void keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
    {
        if (!j.is_object())
        {
            problems.push_back({where, "expected an object"});
            return;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j.items())
        {
            if (!ok.count(k))
            {
                problems.push_back({where.empty() ? k : where + "." + k, "unknown key"});
            }
        }
    }

    // Numbers, or the strings "inf"/"infinity".
    double number(const json& j, const std::string& where)
    {
        if (j.is_number())
        {
            return j.get<double>();
        }
        if (j.is_string() && (j == "inf" || j == "infinity"))
        {
            return std::numeric_limits<double>::infinity();
        }
        problems.push_back({where, "expected a number"});
        return 0.0;
    }

    void opt_number(const json& j, const char* key, const std::string& where, double& out)
    {
        if (j.is_object() && j.contains(key))
        {
            out = number(j.at(key), where + key);
        }
    }

    std::vector<double> numbers(const json& j, const std::string& where)
    {
        std::vector<double> out;
        if (!j.is_array())
        {
            problems.push_back({where, "expected an array of numbers"});
            return out;
        }
        for (std::size_t i = 0; i < j.size(); ++i)
        {
            out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
        }
        return out;
    }

    std::string string(const json& j, const std::string& where)
    {
        if (!j.is_string())
        {
            problems.push_back({where, "expected a string"});
            return {};
        }
        return j.get<std::string>();
    }

    DistDescriptor dist(const json& j, const std::string& where)
    {
        DistDescriptor d;
        if (j.is_string())
        {
            return dist(json{{"kind", j}}, where);
        }
        keys(j, where, {"kind", "variance", "probs", "means"});
        if (!j.is_object())
        {
            return d;
        }
        const std::string kind = j.contains("kind") ? string(j.at("kind"), where + ".kind") : "exponential";
        if (kind == "exponential")
        {
            d = DistDescriptor::exponential();
        }
        else if (kind == "deterministic")
        {
            d = DistDescriptor::deterministic();
        }
        else if (kind == "lognormal")
        {
            d = DistDescriptor::lognormal(j.contains("variance") ? number(j.at("variance"), where + ".variance") : 1.0);
        }
        else if (kind == "hyperexponential")
        {
            d = DistDescriptor::hyperexponential(j.contains("probs") ? numbers(j.at("probs"), where + ".probs")
                                                                     : std::vector<double>{},
                                                 j.contains("means") ? numbers(j.at("means"), where + ".means")
                                                                     : std::vector<double>{});
        }
        else
        {
            problems.push_back({where + ".kind", "unknown distribution '" + kind + "'"});
        }
        return d;
    }
};

json dist_json(const DistDescriptor& d)
{
    json j{{"kind", to_string(d.kind)}};
    if (d.kind == DistKind::lognormal)
    {
        j["variance"] = d.variance;
    }
    if (d.kind == DistKind::hyperexponential)
    {
        j["probs"] = d.probs;
        j["means"] = d.means;
    }
    return j;
}

json number_json(double v)
{
    return std::isinf(v) ? json("inf") : json(v);
}

} // namespace

PolicyKind parse_policy_kind(const std::string& s)
{
    for (auto k : {PolicyKind::jsq, PolicyKind::random_proportional, PolicyKind::rjsq_unaware, PolicyKind::rjsq_aware,
                   PolicyKind::tolerance_geo})
    {
        if (to_string(k) == s)
        {
            return k;
        }
    }
    throw std::invalid_argument("unknown policy kind '" + s + "'");
}

ScenarioConfig scenario_from_json(const json& j)
{
    Reader r;
    ScenarioConfig cfg;
    r.keys(j, "", {"id", "stations", "origins", "delays_scaled", "geography", "traffic", "policy",
                   "service_assignment", "horizon_min", "burnin_min", "seed", "sample_dt"});
    if (!j.is_object())
    {
        throw ConfigError(r.problems);
    }
    if (j.contains("id"))
    {
        cfg.id = r.string(j.at("id"), "id");
    }
    if (!j.contains("stations") || !j.at("stations").is_array())
    {
        r.problems.push_back({"stations", "expected an array of stations"});
    }
    else
    {
        const auto& st = j.at("stations");
        for (std::size_t k = 0; k < st.size(); ++k)
        {
            const std::string where = "stations[" + std::to_string(k) + "]";
            StationConfig sc;
            r.keys(st[k], where, {"service_rate", "service"});
            r.opt_number(st[k], "service_rate", where + ".", sc.service_rate);
            if (st[k].is_object() && st[k].contains("service"))
            {
                sc.service = r.dist(st[k].at("service"), where + ".service");
            }
            cfg.stations.push_back(sc);
        }
    }
    if (j.contains("origins"))
    {
        const auto& o = j.at("origins");
        if (!o.is_array())
        {
            r.problems.push_back({"origins", "expected an array"});
        }
        else
        {
            for (std::size_t m = 0; m < o.size(); ++m)
            {
                const std::string where = "origins[" + std::to_string(m) + "]";
                OriginSpec spec;
                r.keys(o[m], where, {"probability", "delays"});
                r.opt_number(o[m], "probability", where + ".", spec.probability);
                if (o[m].is_object() && o[m].contains("delays"))
                {
                    spec.delays = r.numbers(o[m].at("delays"), where + ".delays");
                }
                cfg.origins.push_back(spec);
            }
        }
    }
    if (j.contains("delays_scaled"))
    {
        if (j.at("delays_scaled").is_boolean())
        {
            cfg.delays_scaled = j.at("delays_scaled").get<bool>();
        }
        else
        {
            r.problems.push_back({"delays_scaled", "expected a boolean"});
        }
    }
    if (j.contains("geography"))
    {
        const auto& g = j.at("geography");
        GeographicSpec geo;
        r.keys(g, "geography", {"region", "stations", "speed"});
        if (g.is_object())
        {
            if (g.contains("region"))
            {
                const auto v = r.numbers(g.at("region"), "geography.region");
                if (v.size() == 4)
                {
                    geo.region = {v[0], v[1], v[2], v[3]};
                }
                else
                {
                    r.problems.push_back({"geography.region", "expected [x0, y0, x1, y1]"});
                }
            }
            if (g.contains("stations") && g.at("stations").is_array())
            {
                for (std::size_t k = 0; k < g.at("stations").size(); ++k)
                {
                    const auto v = r.numbers(g.at("stations")[k], "geography.stations[" + std::to_string(k) + "]");
                    if (v.size() == 2)
                    {
                        geo.stations.push_back({v[0], v[1]});
                    }
                    else
                    {
                        r.problems.push_back({"geography.stations", "expected [x, y] points"});
                    }
                }
            }
            r.opt_number(g, "speed", "geography.", geo.speed);
        }
        cfg.geography = geo;
    }
    if (j.contains("traffic"))
    {
        const auto& t = j.at("traffic");
        r.keys(t, "traffic", {"rho", "appearance_rate", "interappearance", "n"});
        r.opt_number(t, "rho", "traffic.", cfg.traffic.rho);
        r.opt_number(t, "appearance_rate", "traffic.", cfg.traffic.appearance_rate);
        r.opt_number(t, "n", "traffic.", cfg.traffic.n);
        if (t.is_object() && t.contains("interappearance"))
        {
            cfg.traffic.interappearance = r.dist(t.at("interappearance"), "traffic.interappearance");
        }
    }
    else
    {
        r.problems.push_back({"traffic", "missing"});
    }
    if (j.contains("policy"))
    {
        const auto& p = j.at("policy");
        auto& pol = cfg.policy;
        r.keys(p, "policy", {"kind", "chi", "tie_rule", "eps", "plan", "tau_bar", "tolerance_mode", "p_prime"});
        if (p.is_object())
        {
            if (p.contains("kind"))
            {
                const auto s = r.string(p.at("kind"), "policy.kind");
                try
                {
                    pol.kind = parse_policy_kind(s);
                }
                catch (const std::exception& e)
                {
                    r.problems.push_back({"policy.kind", e.what()});
                }
            }
            r.opt_number(p, "chi", "policy.", pol.chi);
            r.opt_number(p, "tau_bar", "policy.", pol.tau_bar);
            if (p.contains("tie_rule"))
            {
                const auto s = r.string(p.at("tie_rule"), "policy.tie_rule");
                if (s == "random")
                {
                    pol.tie_rule = TieRule::random;
                }
                else if (s != "lowest_index")
                {
                    r.problems.push_back({"policy.tie_rule", "expected lowest_index or random"});
                }
            }
            if (p.contains("tolerance_mode"))
            {
                const auto s = r.string(p.at("tolerance_mode"), "policy.tolerance_mode");
                if (s == "probabilistic")
                {
                    pol.tolerance_mode = ToleranceMode::probabilistic;
                }
                else if (s != "deterministic")
                {
                    r.problems.push_back({"policy.tolerance_mode", "expected deterministic or probabilistic"});
                }
            }
            if (p.contains("eps"))
            {
                pol.eps = r.numbers(p.at("eps"), "policy.eps");
            }
            if (p.contains("p_prime"))
            {
                pol.p_prime = r.numbers(p.at("p_prime"), "policy.p_prime");
            }
            if (p.contains("plan"))
            {
                std::vector<std::vector<double>> rows;
                if (p.at("plan").is_array())
                {
                    for (std::size_t m = 0; m < p.at("plan").size(); ++m)
                    {
                        rows.push_back(r.numbers(p.at("plan")[m], "policy.plan[" + std::to_string(m) + "]"));
                    }
                    try
                    {
                        pol.plan = RoutingPlan::from_rows(rows);
                    }
                    catch (const std::exception& e)
                    {
                        r.problems.push_back({"policy.plan", e.what()});
                    }
                }
                else
                {
                    r.problems.push_back({"policy.plan", "expected an array of rows"});
                }
            }
        }
    }
    if (j.contains("service_assignment"))
    {
        const auto s = r.string(j.at("service_assignment"), "service_assignment");
        if (s == "per_customer")
        {
            cfg.service_assignment = ServiceAssignment::per_customer;
        }
        else if (s != "per_station")
        {
            r.problems.push_back({"service_assignment", "expected per_station or per_customer"});
        }
    }
    r.opt_number(j, "horizon_min", "", cfg.horizon_min);
    r.opt_number(j, "burnin_min", "", cfg.burnin_min);
    r.opt_number(j, "sample_dt", "", cfg.sample_dt);
    if (j.contains("seed"))
    {
        if (j.at("seed").is_number_unsigned())
        {
            cfg.seed = j.at("seed").get<std::uint64_t>();
        }
        else
        {
            r.problems.push_back({"seed", "expected a nonnegative integer"});
        }
    }
    if (!r.problems.empty())
    {
        throw ConfigError(r.problems);
    }
    return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg)
{
    json j;
    j["id"] = cfg.id;
    j["stations"] = json::array();
    for (const auto& s : cfg.stations)
    {
        j["stations"].push_back({{"service_rate", s.service_rate}, {"service", dist_json(s.service)}});
    }
    if (!cfg.origins.empty())
    {
        j["origins"] = json::array();
        for (const auto& o : cfg.origins)
        {
            j["origins"].push_back({{"probability", o.probability}, {"delays", o.delays}});
        }
        j["delays_scaled"] = cfg.delays_scaled;
    }
    if (cfg.geography)
    {
        const auto& g = *cfg.geography;
        json pts = json::array();
        for (const auto& p : g.stations)
        {
            pts.push_back({p.x, p.y});
        }
        j["geography"] = {{"region", {g.region.x0, g.region.y0, g.region.x1, g.region.y1}},
                          {"stations", pts},
                          {"speed", g.speed}};
    }
    json t;
    if (cfg.traffic.appearance_rate > 0.0)
    {
        t["appearance_rate"] = cfg.traffic.appearance_rate;
    }
    else
    {
        t["rho"] = cfg.traffic.rho;
    }
    if (cfg.traffic.n > 0.0)
    {
        t["n"] = cfg.traffic.n;
    }
    t["interappearance"] = dist_json(cfg.traffic.interappearance);
    j["traffic"] = t;

    const auto& p = cfg.policy;
    json pj{{"kind", to_string(p.kind)},
            {"chi", p.chi},
            {"tie_rule", p.tie_rule == TieRule::random ? "random" : "lowest_index"}};
    if (!p.eps.empty())
    {
        pj["eps"] = p.eps;
    }
    if (!p.plan.empty())
    {
        pj["plan"] = p.plan.to_rows();
    }
    if (p.kind == PolicyKind::tolerance_geo)
    {
        pj["tau_bar"] = number_json(p.tau_bar);
        pj["tolerance_mode"] = p.tolerance_mode == ToleranceMode::probabilistic ? "probabilistic" : "deterministic";
        if (!p.p_prime.empty())
        {
            pj["p_prime"] = p.p_prime;
        }
    }
    j["policy"] = pj;
    j["service_assignment"] = cfg.service_assignment == ServiceAssignment::per_customer ? "per_customer" : "per_station";
    j["horizon_min"] = cfg.horizon_min;
    j["burnin_min"] = cfg.burnin_min;
    j["seed"] = cfg.seed;
    j["sample_dt"] = cfg.sample_dt;
    return j;
}

ScenarioConfig load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw ConfigError(std::vector<Violation>{{"config", "cannot open " + path}});
    }
    json j;
    try
    {
        in >> j;
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(std::vector<Violation>{{"config", std::string("malformed JSON: ") + e.what()}});
    }
    return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
    {
        throw std::runtime_error("cannot write " + path);
    }
    out << scenario_to_json(cfg).dump(2) << '\n';
}

} // namespace remoteq
