#include "remoteq/policies.hpp"

#include "remoteq/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace remoteq {

namespace {

double sum_of(std::span<const double> v)
{
    return std::accumulate(v.begin(), v.end(), 0.0);
}

// Walks cumulative masses; zero-mass stations are never returned.
int pick_by_mass(double u, std::span<const double> mass)
{
    double kappa = 0.0;
    int last_positive = -1;
    for (std::size_t k = 0; k < mass.size(); ++k)
    {
        if (mass[k] <= 0.0)
        {
            continue;
        }
        kappa += mass[k];
        last_positive = static_cast<int>(k);
        if (u < kappa)
        {
            return last_positive;
        }
    }
    return last_positive < 0 ? 0 : last_positive;
}

} // namespace

QueueSnapshot QueueSnapshot::from_counts(std::vector<int> counts, std::span<const double> mus)
{
    QueueSnapshot snap;
    snap.weighted.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
    {
        snap.weighted[k] = counts[k] / mus[k];
    }
    snap.counts = std::move(counts);
    return snap;
}

void rank_into(std::span<const double> weighted, TieRule tie_rule, Rng* gen, Ranking& out)
{
    const std::size_t s = weighted.size();
    out.zeta.resize(s);
    out.pi.resize(s);
    std::iota(out.zeta.begin(), out.zeta.end(), 0);
    // Insertion sort keeps equal keys in index order; s is small.
    for (std::size_t i = 1; i < s; ++i)
    {
        const int key = out.zeta[i];
        std::size_t j = i;
        while (j > 0 && weighted[out.zeta[j - 1]] > weighted[key])
        {
            out.zeta[j] = out.zeta[j - 1];
            --j;
        }
        out.zeta[j] = key;
    }
    if (tie_rule == TieRule::random && gen != nullptr)
    {
        std::size_t begin = 0;
        while (begin < s)
        {
            std::size_t end = begin + 1;
            while (end < s && weighted[out.zeta[end]] == weighted[out.zeta[begin]])
            {
                ++end;
            }
            for (std::size_t i = end - 1; i > begin; --i)
            {
                const auto span = static_cast<double>(i - begin + 1);
                const auto j = begin + static_cast<std::size_t>(gen->uniform() * span);
                std::swap(out.zeta[i], out.zeta[std::min(j, i)]);
            }
            begin = end;
        }
    }
    for (std::size_t l = 0; l < s; ++l)
    {
        out.pi[out.zeta[l]] = static_cast<int>(l);
    }
}

Ranking rank(const QueueSnapshot& snapshot, TieRule tie_rule, Rng* gen)
{
    Ranking r;
    rank_into(snapshot.weighted, tie_rule, gen, r);
    return r;
}

std::vector<std::string> check_scheme(const PerturbationScheme& scheme, std::span<const double> mus)
{
    std::vector<std::string> out;
    const std::size_t s = mus.size();
    if (scheme.eps.size() != s)
    {
        out.push_back("need one coefficient per rank");
        return out;
    }
    const double mu = sum_of(mus);
    if (std::abs(sum_of(scheme.eps)) > kPlanTolerance)
    {
        out.push_back("coefficients must sum to 0");
    }
    if (std::abs(scheme.eps[0] - scheme.chi) > kPlanTolerance)
    {
        out.push_back("condition (i): eps_1 must equal chi");
    }
    for (std::size_t l = 1; l < s; ++l)
    {
        if (scheme.chi > 0.0 && !(scheme.eps[l] < 0.0))
        {
            out.push_back("condition (i): eps_" + std::to_string(l + 1) + " must be negative");
        }
    }
    for (std::size_t l = 0; l < s; ++l)
    {
        for (std::size_t k = 0; k < s; ++k)
        {
            const double v = mus[k] / mu + scheme.eps[l];
            if (v < -kPlanTolerance || v > 1.0 + kPlanTolerance)
            {
                std::ostringstream msg;
                msg << "condition (ii): mu_" << k + 1 << "/mu + eps_" << l + 1 << " = " << v << " outside [0,1]";
                out.push_back(msg.str());
            }
        }
    }
    return out;
}

namespace {

double audit_delta0(const std::vector<double>& eps, double chi)
{
    if (!(chi > 0.0) || eps.size() < 2)
    {
        return 0.0;
    }
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l < eps.size(); ++l)
    {
        d = std::min(d, -eps[l] / chi);
    }
    return d;
}

} // namespace

PerturbationScheme default_perturbation(std::span<const double> mus, double chi)
{
    const std::size_t s = mus.size();
    if (s < 2)
    {
        throw ConstraintError("perturbation needs at least 2 stations");
    }
    if (!(chi >= 0.0))
    {
        throw ConstraintError("balancing fraction must be nonnegative");
    }
    const double mu = sum_of(mus);
    const double min_mu = *std::min_element(mus.begin(), mus.end());
    const double bound = static_cast<double>(s - 1) * min_mu / mu;
    if (chi > bound + kPlanTolerance)
    {
        std::ostringstream msg;
        msg << "condition (ii) violated: chi = " << chi << " exceeds (s-1) min mu_k/mu = " << bound
            << " (mu_min/mu - chi/(s-1) < 0)";
        throw ConstraintError(msg.str());
    }
    PerturbationScheme scheme;
    scheme.chi = chi;
    scheme.eps.assign(s, -chi / static_cast<double>(s - 1));
    scheme.eps[0] = chi;
    scheme.delta0 = audit_delta0(scheme.eps, chi);
    return scheme;
}

PerturbationScheme scheme_from_eps(std::span<const double> mus, std::vector<double> eps)
{
    PerturbationScheme scheme;
    scheme.chi = eps.empty() ? 0.0 : eps[0];
    scheme.eps = std::move(eps);
    scheme.delta0 = audit_delta0(scheme.eps, scheme.chi);
    if (auto why = check_scheme(scheme, mus); !why.empty())
    {
        throw ConstraintError(why.front());
    }
    return scheme;
}

int destination_unaware(double u, const Ranking& ranking, std::span<const double> mus,
                        const PerturbationScheme& scheme)
{
    const double mu = sum_of(mus);
    double mass[16];
    std::vector<double> heap_mass;
    double* m = mass;
    if (mus.size() > 16)
    {
        heap_mass.resize(mus.size());
        m = heap_mass.data();
    }
    for (std::size_t k = 0; k < mus.size(); ++k)
    {
        m[k] = mus[k] / mu + scheme.eps[ranking.pi[k]];
    }
    return pick_by_mass(u, std::span<const double>(m, mus.size()));
}

std::vector<double> origin_perturbation(const Ranking& ranking, std::size_t origin, const RoutingPlan& plan,
                                        std::span<const double> mus, const PerturbationScheme& scheme)
{
    const std::size_t s = mus.size();
    const double mu = sum_of(mus);
    std::vector<double> eps_m(s, 0.0);
    double moved = 0.0;
    for (std::size_t l = 1; l < s; ++l)
    {
        const auto k = static_cast<std::size_t>(ranking.zeta[l]);
        // Share of the rank-l deficit carried by this origin: r[m][k] / (mu_k / mu).
        eps_m[l] = scheme.eps[l] * plan(origin, k) * mu / mus[k];
        moved -= eps_m[l];
    }
    eps_m[0] = moved;
    for (std::size_t l = 0; l < s; ++l)
    {
        const auto k = static_cast<std::size_t>(ranking.zeta[l]);
        const double v = plan(origin, k) + eps_m[l];
        if (v < -kPlanTolerance || v > 1.0 + kPlanTolerance || (l == 0 && eps_m[l] < -kPlanTolerance) ||
            (l > 0 && eps_m[l] > kPlanTolerance))
        {
            std::ostringstream msg;
            msg << "infeasible origin allocation at origin " << origin + 1 << ", rank " << l + 1
                << " (plan not heavy-traffic consistent or scheme inadmissible)";
            throw ConstraintError(msg.str());
        }
    }
    return eps_m;
}

int destination_aware(double u, const Ranking& ranking, std::size_t origin, const RoutingPlan& plan,
                      std::span<const double> eps_m)
{
    const std::size_t s = plan.stations();
    std::vector<double> mass(s);
    for (std::size_t k = 0; k < s; ++k)
    {
        mass[k] = plan(origin, k) + eps_m[ranking.pi[k]];
    }
    return pick_by_mass(u, mass);
}

int destination_jsq(std::span<const double> weighted, TieRule tie_rule, Rng* gen)
{
    double best = weighted[0];
    int best_k = 0;
    int ties = 1;
    for (std::size_t k = 1; k < weighted.size(); ++k)
    {
        if (weighted[k] < best)
        {
            best = weighted[k];
            best_k = static_cast<int>(k);
            ties = 1;
        }
        else if (weighted[k] == best)
        {
            ++ties;
        }
    }
    if (ties > 1 && tie_rule == TieRule::random && gen != nullptr)
    {
        auto pick = static_cast<int>(gen->uniform() * ties);
        pick = std::min(pick, ties - 1);
        for (std::size_t k = 0; k < weighted.size(); ++k)
        {
            if (weighted[k] == best && pick-- == 0)
            {
                return static_cast<int>(k);
            }
        }
    }
    return best_k;
}

int nearest_station(std::span<const double> delays)
{
    int best = 0;
    for (std::size_t k = 1; k < delays.size(); ++k)
    {
        if (delays[k] < delays[best])
        {
            best = static_cast<int>(k);
        }
    }
    return best;
}

ToleranceChoice destination_tolerance_geo(std::span<const double> delays, std::span<const double> weighted,
                                          double tau_bar, ToleranceMode mode, double chi,
                                          std::span<const double> p_prime, TieRule tie_rule, Rng* gen)
{
    ToleranceChoice c;
    c.nearest = nearest_station(delays);
    c.station = c.nearest;
    const int shortest = destination_jsq(weighted, tie_rule, gen);
    if (shortest == c.nearest)
    {
        return c;
    }
    const bool in_border = delays[shortest] <= delays[c.nearest] + tau_bar;
    if (!in_border)
    {
        return c;
    }
    if (mode == ToleranceMode::deterministic)
    {
        c.station = shortest;
    }
    else if (gen != nullptr && gen->uniform() < chi / p_prime[shortest])
    {
        c.station = shortest;
    }
    return c;
}

Dispatcher::Dispatcher(const ScenarioConfig& cfg)
    : policy_(cfg.policy), mus_(service_rates(cfg)), mu_(cfg.total_service_rate()), s_(cfg.stations.size())
{
    if (policy_.kind == PolicyKind::rjsq_unaware || policy_.kind == PolicyKind::rjsq_aware)
    {
        scheme_ = policy_.eps.empty() ? default_perturbation(mus_, policy_.chi) : scheme_from_eps(mus_, policy_.eps);
    }
    kappa_.resize(s_);
    ranking_.zeta.resize(s_);
    ranking_.pi.resize(s_);
}

const std::vector<double>& Dispatcher::aware_kappa()
{
    std::uint64_t code = 0;
    for (std::size_t l = 0; l < s_; ++l)
    {
        code = code * s_ + static_cast<std::uint64_t>(ranking_.zeta[l]);
    }
    auto it = aware_cache_.find(code);
    if (it == aware_cache_.end())
    {
        const std::size_t b = policy_.plan.origins();
        std::vector<double> masses(b * s_);
        for (std::size_t m = 0; m < b; ++m)
        {
            const auto eps_m = origin_perturbation(ranking_, m, policy_.plan, mus_, scheme_);
            for (std::size_t k = 0; k < s_; ++k)
            {
                masses[m * s_ + k] = policy_.plan(m, k) + eps_m[ranking_.pi[k]];
            }
        }
        it = aware_cache_.emplace(code, std::move(masses)).first;
    }
    return it->second;
}

Dispatcher::Decision Dispatcher::choose(std::span<const double> weighted, std::size_t origin,
                                        std::span<const double> delays, Rng& routing)
{
    Decision d;
    switch (policy_.kind)
    {
    case PolicyKind::jsq:
        d.station = destination_jsq(weighted, policy_.tie_rule, &routing);
        break;
    case PolicyKind::random_proportional:
    {
        for (std::size_t k = 0; k < s_; ++k)
        {
            kappa_[k] = mus_[k] / mu_;
        }
        d.station = pick_by_mass(routing.uniform(), kappa_);
        break;
    }
    case PolicyKind::rjsq_unaware:
    {
        rank_into(weighted, policy_.tie_rule, &routing, ranking_);
        for (std::size_t k = 0; k < s_; ++k)
        {
            kappa_[k] = mus_[k] / mu_ + scheme_.eps[ranking_.pi[k]];
        }
        d.station = pick_by_mass(routing.uniform(), kappa_);
        break;
    }
    case PolicyKind::rjsq_aware:
    {
        rank_into(weighted, policy_.tie_rule, &routing, ranking_);
        const auto& masses = aware_kappa();
        d.station = pick_by_mass(routing.uniform(), std::span<const double>(masses.data() + origin * s_, s_));
        break;
    }
    case PolicyKind::tolerance_geo:
    {
        const auto c = destination_tolerance_geo(delays, weighted, policy_.tau_bar, policy_.tolerance_mode,
                                                 policy_.chi, policy_.p_prime, policy_.tie_rule, &routing);
        d.station = c.station;
        d.nonnearest = c.station != c.nearest;
        return d;
    }
    }
    if (!delays.empty())
    {
        d.nonnearest = delays[d.station] > delays[nearest_station(delays)];
    }
    return d;
}

} // namespace remoteq
