#pragma once

#include "remoteq/types.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace remoteq {

inline constexpr double kPlanTolerance = 1e-9;
inline constexpr double kProbabilityTolerance = 1e-12;

struct Violation
{
    std::string field;
    std::string reason;
};

std::string format_violations(const std::vector<Violation>& violations);

// Raised by operations that require a valid scenario.
class ConfigError : public std::runtime_error
{
public:
    explicit ConfigError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

// Heavy-traffic index with beta = 1: n = 1/(1-rho)^2. Throws std::domain_error outside (0,1).
double n_from_rho(double rho);

// Every violated invariant of the configuration; empty iff valid. Pure.
std::vector<Violation> validate_scenario(const ScenarioConfig& cfg);

// Checks rows-in-[0,1], rows summing to 1 and, when `mus` is nonempty, heavy-traffic
// consistency sum_m p_m r[m][k] mu = mu_k for every k.
std::vector<Violation> validate_plan(const RoutingPlan& plan, const std::vector<double>& probabilities,
                                     const std::vector<double>& mus);

std::vector<double> service_rates(const ScenarioConfig& cfg);

// Fills traffic.rho / traffic.n from whichever of (appearance_rate, rho) is set.
// A positive rho with zero appearance_rate sets appearance_rate = rho * mu.
void resolve_traffic(ScenarioConfig& cfg);

// Delay matrix in minutes (origins x stations), sqrt(n)-scaled when delays_scaled.
std::vector<std::vector<double>> effective_delays(const ScenarioConfig& cfg);

} // namespace remoteq
