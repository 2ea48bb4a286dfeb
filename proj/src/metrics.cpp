#include "remoteq/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace remoteq {

namespace {

void check_window(const CountPath& path, Window w)
{
    if (!(w.t1 > w.t0))
    {
        throw std::invalid_argument("empty window");
    }
    if (path.time.empty() || w.t0 < path.time.front())
    {
        throw std::invalid_argument("window starts before the recorded path");
    }
}

} // namespace

double mtcc(const CountPath& path, Window window)
{
    check_window(path, window);
    const std::size_t s = path.stations;
    double area = 0.0;
    for (std::size_t i = 0; i < path.time.size(); ++i)
    {
        const double a = std::max(path.time[i], window.t0);
        const double b = std::min(i + 1 < path.time.size() ? path.time[i + 1] : window.t1, window.t1);
        if (b > a)
        {
            int total = 0;
            for (std::size_t k = 0; k < s; ++k)
            {
                total += path.counts[i * s + k];
            }
            area += total * (b - a);
        }
    }
    return area / (window.t1 - window.t0);
}

double mtcc(const SampleStats& stats) { return stats.time_avg_total_count; }

double load_imbalance_sup(const CountPath& path, std::span<const double> mus, Window window)
{
    check_window(path, window);
    const std::size_t s = path.stations;
    if (mus.size() != s)
    {
        throw std::invalid_argument("capacity vector length differs from the path");
    }
    double sup = 0.0;
    for (std::size_t i = 0; i < path.time.size(); ++i)
    {
        const double end = i + 1 < path.time.size() ? path.time[i + 1] : window.t1;
        // A state counts when it is in force for some part of the window (or at t1 itself).
        const bool inside = (path.time[i] <= window.t1 && end > window.t0) || path.time[i] == window.t1;
        if (!inside)
        {
            continue;
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t k = 0; k < s; ++k)
        {
            const double l = path.counts[i * s + k] / mus[k];
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
        sup = std::max(sup, hi - lo);
    }
    return sup;
}

double oscillation_index(std::span<const double> x, std::size_t min_lag)
{
    const std::size_t n = x.size();
    if (n < 8 || min_lag >= n / 2)
    {
        throw std::invalid_argument("oscillation_index needs more samples than twice the minimum lag");
    }
    double mean = 0.0;
    for (double v : x)
    {
        mean += v;
    }
    mean /= static_cast<double>(n);
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < n; ++i)
    {
        c[i] = x[i] - mean;
    }
    auto acov = [&](std::size_t h) {
        double acc = 0.0;
        for (std::size_t i = 0; i + h < n; ++i)
        {
            acc += c[i] * c[i + h];
        }
        return acc / static_cast<double>(n - h);
    };
    const double r0 = acov(0);
    if (!(r0 > 0.0))
    {
        return 0.0;
    }
    std::size_t h = std::max<std::size_t>(min_lag, 1);
    while (h <= n / 2 && acov(h) > 0.0)
    {
        ++h;
    }
    double best = 0.0;
    for (; h <= n / 2; ++h)
    {
        best = std::max(best, acov(h) / r0);
    }
    return std::min(best, 1.0);
}

double oscillation_index(std::span<const double> series, double sample_dt, double mean_delay)
{
    if (!(sample_dt > 0.0))
    {
        throw std::invalid_argument("sample_dt must be positive");
    }
    return oscillation_index(series, static_cast<std::size_t>(std::ceil(0.5 * mean_delay / sample_dt)));
}

ReplicationSummary ReplicationSummary::from_stats(const SampleStats& s, std::uint64_t replication)
{
    ReplicationSummary out;
    out.replication = replication;
    out.events = s.events;
    out.values["mtcc"] = s.time_avg_total_count;
    out.values["mean_wait"] = s.mean_wait;
    out.values["mean_travel"] = s.mean_travel;
    out.values["mean_time_to_service"] = s.mean_time_to_service;
    out.values["imbalance_sup"] = s.imbalance_sup;
    out.values["chi_emergent"] = s.chi_emergent;
    return out;
}

Estimate estimate(std::vector<double> values)
{
    Estimate out;
    out.count = values.size();
    if (values.empty())
    {
        return out;
    }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values)
    {
        sum += v;
    }
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2)
    {
        return out;
    }
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values)
    {
        dev.push_back((v - out.mean) * (v - out.mean));
    }
    std::sort(dev.begin(), dev.end());
    double ss = 0.0;
    for (double d : dev)
    {
        ss += d;
    }
    const double n = static_cast<double>(values.size());
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    out.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * sd / std::sqrt(n);
    return out;
}

std::map<std::string, Estimate> aggregate(const std::vector<ReplicationSummary>& summaries)
{
    std::map<std::string, std::vector<double>> columns;
    for (const auto& s : summaries)
    {
        for (const auto& [k, v] : s.values)
        {
            columns[k].push_back(v);
        }
    }
    std::map<std::string, Estimate> out;
    for (auto& [k, v] : columns)
    {
        out[k] = estimate(std::move(v));
    }
    return out;
}

std::string format_number(double v)
{
    if (std::isinf(v))
    {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_rows(std::ostream& out, const std::vector<ResultRow>& rows, bool header)
{
    if (header)
    {
        out << kResultHeader << '\n';
    }
    for (const auto& r : rows)
    {
        out << r.scenario_id << ',' << r.policy << ',' << format_number(r.chi) << ',' << format_number(r.delay) << ','
            << format_number(r.rho) << ',' << r.metric << ',' << format_number(r.estimate.mean) << ','
            << format_number(r.estimate.half_width) << ',' << r.estimate.count << '\n';
    }
}

} // namespace remoteq
