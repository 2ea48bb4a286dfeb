#pragma once

#include "remoteq/stochastics.hpp"
#include "remoteq/types.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace remoteq {

// Raised when perturbation coefficients cannot satisfy the admissibility conditions.
class ConstraintError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct QueueSnapshot
{
    std::vector<int> counts;
    std::vector<double> weighted; // counts[k] / mu[k]

    static QueueSnapshot from_counts(std::vector<int> counts, std::span<const double> mus);
};

// zeta[l] is the station holding the (l+1)-th shortest weighted queue; pi[k] is the rank of station k.
struct Ranking
{
    std::vector<int> zeta;
    std::vector<int> pi;
};

struct PerturbationScheme
{
    double chi = 0.0;
    std::vector<double> eps; // by rank; eps[0] == chi
    double delta0 = 0.0;     // min over ranks >= 2 of -eps/chi (audit of the drift condition)
};

// Sorts stations by weighted queue length. Ties keep ascending station index, or are shuffled
// with draws from `gen` when tie_rule == random (gen must then be non-null).
Ranking rank(const QueueSnapshot& snapshot, TieRule tie_rule, Rng* gen = nullptr);
void rank_into(std::span<const double> weighted, TieRule tie_rule, Rng* gen, Ranking& out);

// eps = (chi, -chi/(s-1), ..., -chi/(s-1)). Throws ConstraintError when chi > (s-1) min mu_k / mu.
PerturbationScheme default_perturbation(std::span<const double> mus, double chi);

// Wraps an explicit coefficient vector, throwing ConstraintError when it is inadmissible.
PerturbationScheme scheme_from_eps(std::span<const double> mus, std::vector<double> eps);

// Every admissibility condition the scheme violates for these capacities.
std::vector<std::string> check_scheme(const PerturbationScheme& scheme, std::span<const double> mus);

// Origin-unaware RJSQ: the station k with u in [kappa_{k-1}, kappa_k),
// kappa_k = sum_{l<=k} (mu_l/mu + eps[pi_l]).
int destination_unaware(double u, const Ranking& ranking, std::span<const double> mus,
                        const PerturbationScheme& scheme);

// Per-origin coefficients by rank for the given ranking. The rank-l deficit is taken from every
// origin in proportion to its plan mass at the rank-l station, and each origin moves the
// same total to the shortest queue, so the aggregate over origins reproduces `scheme.eps`.
std::vector<double> origin_perturbation(const Ranking& ranking, std::size_t origin, const RoutingPlan& plan,
                                        std::span<const double> mus, const PerturbationScheme& scheme);

// Origin-aware RJSQ: kappa^m_k = sum_{l<=k} (r[m][l] + eps_m[pi_l]).
int destination_aware(double u, const Ranking& ranking, std::size_t origin, const RoutingPlan& plan,
                      std::span<const double> eps_m);

int destination_jsq(std::span<const double> weighted, TieRule tie_rule, Rng* gen = nullptr);

struct ToleranceChoice
{
    int station = 0;
    int nearest = 0;
};

// Tolerance-for-delays rule. `delays` are this customer's travel times to every station.
//  deterministic: go to the shortest queue l iff delays[l] <= min delay + tau_bar, else nearest.
//  probabilistic: if the customer lies in the border set of the shortest queue l, go there with
//                 probability chi / p_prime[l] (one uniform from `gen`), else nearest.
ToleranceChoice destination_tolerance_geo(std::span<const double> delays, std::span<const double> weighted,
                                          double tau_bar, ToleranceMode mode, double chi,
                                          std::span<const double> p_prime, TieRule tie_rule, Rng* gen);

// Index of the smallest delay, lowest index on ties.
int nearest_station(std::span<const double> delays);

// Stateful dispatcher bound to one resolved scenario; caches per-ranking origin coefficients.
class Dispatcher
{
public:
    Dispatcher(const ScenarioConfig& cfg);

    struct Decision
    {
        int station = 0;
        bool nonnearest = false;
    };

    // `delays` are the customer's travel times (used by the tolerance rule and for the
    // non-nearest flag); `origin` is ignored for geographic scenarios.
    Decision choose(std::span<const double> weighted, std::size_t origin, std::span<const double> delays,
                    Rng& routing);

    const PerturbationScheme& scheme() const { return scheme_; }

private:
    // Per-origin masses (origins x stations) for the current ranking.
    const std::vector<double>& aware_kappa();

    PolicySpec policy_;
    std::vector<double> mus_;
    double mu_ = 0.0;
    std::size_t s_ = 0;
    PerturbationScheme scheme_;
    Ranking ranking_;
    std::vector<double> kappa_;
    std::unordered_map<std::uint64_t, std::vector<double>> aware_cache_;
};

} // namespace remoteq
