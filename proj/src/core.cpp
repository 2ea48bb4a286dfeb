#include "remoteq/core.hpp"

#include "remoteq/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace remoteq {

RoutingPlan RoutingPlan::from_rows(const std::vector<std::vector<double>>& rows)
{
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    RoutingPlan plan(rows.size(), cols);
    for (std::size_t m = 0; m < rows.size(); ++m)
    {
        if (rows[m].size() != cols)
        {
            throw std::invalid_argument("routing plan rows have unequal length");
        }
        for (std::size_t k = 0; k < cols; ++k)
        {
            plan(m, k) = rows[m][k];
        }
    }
    return plan;
}

std::vector<std::vector<double>> RoutingPlan::to_rows() const
{
    std::vector<std::vector<double>> rows(rows_, std::vector<double>(cols_));
    for (std::size_t m = 0; m < rows_; ++m)
    {
        for (std::size_t k = 0; k < cols_; ++k)
        {
            rows[m][k] = (*this)(m, k);
        }
    }
    return rows;
}

double ScenarioConfig::total_service_rate() const
{
    double mu = 0.0;
    for (const auto& st : stations)
    {
        mu += st.service_rate;
    }
    return mu;
}

std::string to_string(PolicyKind kind)
{
    switch (kind)
    {
    case PolicyKind::jsq: return "jsq";
    case PolicyKind::random_proportional: return "random_proportional";
    case PolicyKind::rjsq_unaware: return "rjsq_unaware";
    case PolicyKind::rjsq_aware: return "rjsq_aware";
    case PolicyKind::tolerance_geo: return "tolerance_geo";
    }
    return "unknown";
}

std::string to_string(DistKind kind)
{
    switch (kind)
    {
    case DistKind::exponential: return "exponential";
    case DistKind::deterministic: return "deterministic";
    case DistKind::lognormal: return "lognormal";
    case DistKind::hyperexponential: return "hyperexponential";
    }
    return "unknown";
}

std::string format_violations(const std::vector<Violation>& violations)
{
    std::ostringstream out;
    for (const auto& v : violations)
    {
        out << v.field << ": " << v.reason << '\n';
    }
    return out.str();
}

ConfigError::ConfigError(std::vector<Violation> violations)
    : std::runtime_error("invalid scenario:\n" + format_violations(violations)), violations_(std::move(violations))
{
}

double n_from_rho(double rho)
{
    if (!(rho > 0.0 && rho < 1.0))
    {
        throw std::domain_error("rho must lie in (0, 1)");
    }
    return 1.0 / ((1.0 - rho) * (1.0 - rho));
}

std::vector<double> service_rates(const ScenarioConfig& cfg)
{
    std::vector<double> mus;
    mus.reserve(cfg.stations.size());
    for (const auto& st : cfg.stations)
    {
        mus.push_back(st.service_rate);
    }
    return mus;
}

void resolve_traffic(ScenarioConfig& cfg)
{
    const double mu = cfg.total_service_rate();
    auto& tr = cfg.traffic;
    if (tr.appearance_rate <= 0.0 && tr.rho > 0.0)
    {
        tr.appearance_rate = tr.rho * mu;
    }
    if (mu > 0.0)
    {
        tr.rho = tr.appearance_rate / mu;
    }
    if (tr.n <= 0.0 && tr.rho > 0.0 && tr.rho < 1.0)
    {
        tr.n = n_from_rho(tr.rho);
    }
}

std::vector<std::vector<double>> effective_delays(const ScenarioConfig& cfg)
{
    const double scale = cfg.delays_scaled ? std::sqrt(cfg.traffic.n) : 1.0;
    std::vector<std::vector<double>> d;
    d.reserve(cfg.origins.size());
    for (const auto& o : cfg.origins)
    {
        auto row = o.delays;
        for (auto& x : row)
        {
            x *= scale;
        }
        d.push_back(std::move(row));
    }
    return d;
}

namespace {

std::string idx(const char* name, std::size_t i)
{
    return std::string(name) + "[" + std::to_string(i + 1) + "]";
}

bool balancing(PolicyKind kind)
{
    return kind != PolicyKind::random_proportional;
}

} // namespace

std::vector<Violation> validate_plan(const RoutingPlan& plan, const std::vector<double>& probabilities,
                                     const std::vector<double>& mus)
{
    std::vector<Violation> out;
    if (plan.origins() != probabilities.size())
    {
        out.push_back({"policy.plan", "plan has " + std::to_string(plan.origins()) + " rows but there are " +
                                          std::to_string(probabilities.size()) + " origins"});
        return out;
    }
    if (!mus.empty() && plan.stations() != mus.size())
    {
        out.push_back({"policy.plan", "plan has " + std::to_string(plan.stations()) + " columns but there are " +
                                          std::to_string(mus.size()) + " stations"});
        return out;
    }
    for (std::size_t m = 0; m < plan.origins(); ++m)
    {
        double row = 0.0;
        for (std::size_t k = 0; k < plan.stations(); ++k)
        {
            const double r = plan(m, k);
            if (!(r >= 0.0 && r <= 1.0))
            {
                out.push_back({idx("policy.plan", m), "entry " + std::to_string(k + 1) + " outside [0,1]"});
            }
            row += r;
        }
        if (std::abs(row - 1.0) > kPlanTolerance)
        {
            out.push_back({idx("policy.plan", m), "row sums to " + std::to_string(row) + ", not 1"});
        }
    }
    if (!mus.empty())
    {
        const double mu = std::accumulate(mus.begin(), mus.end(), 0.0);
        for (std::size_t k = 0; k < mus.size(); ++k)
        {
            double load = 0.0;
            for (std::size_t m = 0; m < plan.origins(); ++m)
            {
                load += probabilities[m] * plan(m, k);
            }
            if (std::abs(load * mu - mus[k]) > kPlanTolerance)
            {
                std::ostringstream msg;
                msg << "heavy-traffic violation at k=" << k + 1 << ": sum_m p_m r_mk mu = " << load * mu
                    << " but mu_k = " << mus[k];
                out.push_back({"policy.plan", msg.str()});
            }
        }
    }
    return out;
}

std::vector<Violation> validate_scenario(const ScenarioConfig& cfg_in)
{
    std::vector<Violation> out;
    ScenarioConfig cfg = cfg_in;
    const std::size_t s = cfg.stations.size();

    if (s == 0)
    {
        out.push_back({"stations", "at least one station is required"});
    }
    else if (s < 2 && balancing(cfg.policy.kind))
    {
        out.push_back({"stations", "balancing policies need at least 2 stations"});
    }
    for (std::size_t k = 0; k < s; ++k)
    {
        const auto& st = cfg.stations[k];
        if (!(st.service_rate > 0.0) || !std::isfinite(st.service_rate))
        {
            out.push_back({idx("stations", k), "service_rate must be positive and finite"});
        }
        if (auto why = check_dist(st.service); !why.empty())
        {
            out.push_back({idx("stations", k) + ".service", why});
        }
    }
    if (cfg.service_assignment == ServiceAssignment::per_customer && s > 1)
    {
        for (std::size_t k = 1; k < s; ++k)
        {
            const auto& a = cfg.stations[0].service;
            const auto& b = cfg.stations[k].service;
            if (a.kind != b.kind || a.variance != b.variance || a.probs != b.probs || a.means != b.means)
            {
                out.push_back({"service_assignment", "per_customer requires one service law at all stations"});
                break;
            }
        }
    }

    const bool geo = cfg.geography.has_value();
    if (geo && !cfg.origins.empty())
    {
        out.push_back({"origins", "give either origins or geography, not both"});
    }
    if (!geo && cfg.origins.empty())
    {
        out.push_back({"origins", "origins or geography required"});
    }
    if (!geo && !cfg.origins.empty())
    {
        double total = 0.0;
        for (std::size_t m = 0; m < cfg.origins.size(); ++m)
        {
            const auto& o = cfg.origins[m];
            if (!(o.probability > 0.0 && o.probability <= 1.0))
            {
                out.push_back({idx("origins", m), "probability must lie in (0,1]"});
            }
            total += o.probability;
            if (o.delays.size() != s)
            {
                out.push_back({idx("origins", m), "needs one delay per station"});
            }
            for (double d : o.delays)
            {
                if (!(d >= 0.0) || !std::isfinite(d))
                {
                    out.push_back({idx("origins", m), "delays must be finite and nonnegative"});
                    break;
                }
            }
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance)
        {
            out.push_back({"origins", "probabilities sum to " + std::to_string(total) + ", not 1"});
        }
    }
    if (geo)
    {
        const auto& g = *cfg.geography;
        if (!(g.speed > 0.0) || !std::isfinite(g.speed))
        {
            out.push_back({"geography.speed", "must be positive"});
        }
        if (!(g.region.x1 > g.region.x0 && g.region.y1 > g.region.y0))
        {
            out.push_back({"geography.region", "empty rectangle"});
        }
        if (g.stations.size() != s)
        {
            out.push_back({"geography.stations", "needs one coordinate per station"});
        }
        for (std::size_t k = 0; k < g.stations.size(); ++k)
        {
            if (!g.region.contains(g.stations[k]))
            {
                out.push_back({idx("geography.stations", k), "station outside region"});
            }
        }
    }

    auto& tr = cfg.traffic;
    if (tr.appearance_rate <= 0.0 && tr.rho <= 0.0)
    {
        out.push_back({"traffic", "appearance_rate or rho must be positive"});
    }
    else if (s > 0 && cfg.total_service_rate() > 0.0)
    {
        try
        {
            resolve_traffic(cfg);
            if (!(tr.rho < 1.0))
            {
                out.push_back({"traffic.rho", "traffic intensity must be below 1, got " + std::to_string(tr.rho)});
            }
        }
        catch (const std::exception& e)
        {
            out.push_back({"traffic", e.what()});
        }
    }
    if (auto why = check_dist(tr.interappearance); !why.empty())
    {
        out.push_back({"traffic.interappearance", why});
    }
    if (cfg.delays_scaled && !(tr.n > 0.0))
    {
        out.push_back({"traffic.n", "scaled delays need a heavy-traffic index"});
    }

    if (!(cfg.horizon_min > 0.0) || !std::isfinite(cfg.horizon_min))
    {
        out.push_back({"horizon_min", "must be positive and finite"});
    }
    if (!(cfg.burnin_min >= 0.0 && cfg.burnin_min < cfg.horizon_min))
    {
        out.push_back({"burnin_min", "must satisfy 0 <= burnin < horizon"});
    }
    if (!(cfg.sample_dt >= 0.0) || !std::isfinite(cfg.sample_dt))
    {
        out.push_back({"sample_dt", "must be finite and nonnegative"});
    }

    // Policy.
    const auto& pol = cfg.policy;
    const auto mus = service_rates(cfg);
    const double mu = cfg.total_service_rate();
    if (pol.kind == PolicyKind::rjsq_unaware || pol.kind == PolicyKind::rjsq_aware)
    {
        if (!(pol.chi >= 0.0) || !std::isfinite(pol.chi))
        {
            out.push_back({"policy.chi", "must be finite and nonnegative"});
        }
        else if (s >= 2 && mu > 0.0)
        {
            if (!pol.eps.empty())
            {
                if (pol.eps.size() != s)
                {
                    out.push_back({"policy.eps", "needs one coefficient per rank"});
                }
                else
                {
                    const double sum = std::accumulate(pol.eps.begin(), pol.eps.end(), 0.0);
                    if (std::abs(sum) > kPlanTolerance)
                    {
                        out.push_back({"policy.eps", "coefficients must sum to 0"});
                    }
                    for (std::size_t l = 0; l < s; ++l)
                    {
                        for (double m_k : mus)
                        {
                            const double v = m_k / mu + pol.eps[l];
                            if (v < -kPlanTolerance || v > 1.0 + kPlanTolerance)
                            {
                                out.push_back({"policy.eps", "condition (ii) fails at rank " + std::to_string(l + 1)});
                                l = s;
                                break;
                            }
                        }
                    }
                }
            }
            else
            {
                double min_mu = mus.empty() ? 0.0 : mus[0];
                for (double m_k : mus)
                {
                    min_mu = std::min(min_mu, m_k);
                }
                const double bound = static_cast<double>(s - 1) * min_mu / mu;
                if (pol.chi > bound + kPlanTolerance)
                {
                    out.push_back({"policy.chi", "chi = " + std::to_string(pol.chi) +
                                                     " exceeds (s-1) min mu_k/mu = " + std::to_string(bound) +
                                                     " so mu_k/mu + eps_l >= 0 (condition (ii)) fails"});
                }
            }
        }
    }
    if (pol.kind == PolicyKind::rjsq_aware)
    {
        if (geo)
        {
            out.push_back({"policy", "rjsq_aware needs discrete origins"});
        }
        else if (pol.plan.empty())
        {
            out.push_back({"policy.plan", "rjsq_aware needs a routing plan"});
        }
    }
    if (!pol.plan.empty() && !geo)
    {
        std::vector<double> probs;
        for (const auto& o : cfg.origins)
        {
            probs.push_back(o.probability);
        }
        auto pv = validate_plan(pol.plan, probs, mus);
        out.insert(out.end(), pv.begin(), pv.end());
    }
    if (pol.kind == PolicyKind::tolerance_geo)
    {
        if (!(pol.tau_bar >= 0.0))
        {
            out.push_back({"policy.tau_bar", "must be nonnegative (inf allowed)"});
        }
        if (pol.tolerance_mode == ToleranceMode::probabilistic)
        {
            if (pol.p_prime.size() != s)
            {
                out.push_back({"policy.p_prime", "probabilistic rule needs one border mass per station"});
            }
            else
            {
                for (std::size_t k = 0; k < s; ++k)
                {
                    if (!(pol.p_prime[k] > 0.0))
                    {
                        out.push_back({idx("policy.p_prime", k), "border mass must be positive"});
                    }
                    else if (pol.chi > pol.p_prime[k] + kPlanTolerance)
                    {
                        out.push_back({"policy.chi", "chi must not exceed p'_" + std::to_string(k + 1)});
                    }
                }
            }
        }
    }
    return out;
}

} // namespace remoteq
