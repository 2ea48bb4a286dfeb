#pragma once

#include "remoteq/engine.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace remoteq {

struct Window
{
    double t0 = 0.0;
    double t1 = 0.0;
};

// Time average of the total count over the window. Throws std::invalid_argument on an empty
// window or one that starts before the path.
double mtcc(const CountPath& path, Window window);
double mtcc(const SampleStats& stats);

// sup over the window of max_k L_k - min_k L_k, L_k = Q_k / mu_k.
double load_imbalance_sup(const CountPath& path, std::span<const double> mus, Window window);

// Periodicity score of an equally spaced series (typically Q_1 - Q_2) in [0, 1].
// With r(h) the unbiased sample autocorrelation at lag h normalised by r(0), the score is
// max(0, max r(h)) over h in [h0, N/2], where h0 is the first lag not below min_lag at which
// r has become nonpositive. Series without such a lag score 0.
double oscillation_index(std::span<const double> series, std::size_t min_lag);
// Convenience form: min_lag = mean_delay / 2 converted to samples.
double oscillation_index(std::span<const double> series, double sample_dt, double mean_delay);

struct ReplicationSummary
{
    std::uint64_t replication = 0;
    std::uint64_t events = 0;
    std::map<std::string, double> values;

    static ReplicationSummary from_stats(const SampleStats& stats, std::uint64_t replication);
};

struct Estimate
{
    double mean = 0.0;
    double half_width = 0.0; // 95% Student-t
    std::size_t count = 0;
};

// Mean and 95% half-width of a sample; values are summed in sorted order so the result does
// not depend on the order of the input.
Estimate estimate(std::vector<double> values);
std::map<std::string, Estimate> aggregate(const std::vector<ReplicationSummary>& summaries);

struct ResultRow
{
    std::string scenario_id;
    std::string policy;
    double chi = 0.0;
    double delay = 0.0;
    double rho = 0.0;
    std::string metric;
    Estimate estimate;
};

inline constexpr const char* kResultHeader = "scenario_id,policy,chi,delay,rho,metric,mean,half_width,reps";

// Fixed formatting so reruns produce identical bytes.
std::string format_number(double v);
void write_rows(std::ostream& out, const std::vector<ResultRow>& rows, bool header = true);

} // namespace remoteq
