#include "remoteq/stochastics.hpp"

#include <cmath>
#include <numeric>

namespace remoteq {

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base_seed, const StreamLabel& label)
{
    const std::uint64_t tag = (static_cast<std::uint64_t>(label.purpose) << 32) | label.station;
    return mix64(mix64(mix64(base_seed) ^ tag) ^ label.replication);
}

Rng derive_stream(std::uint64_t base_seed, const StreamLabel& label)
{
    return Rng(stream_seed(base_seed, label));
}

double Rng::standard_normal()
{
    // Marsaglia polar method.
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_normal_;
    }
    double u = 0.0;
    double v = 0.0;
    double q = 0.0;
    do
    {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_normal_ = v * f;
    has_spare_ = true;
    return u * f;
}

double sample(const DistDescriptor& dist, Rng& gen)
{
    switch (dist.kind)
    {
    case DistKind::exponential:
        return gen.exponential();
    case DistKind::deterministic:
        return 1.0;
    case DistKind::lognormal:
    {
        const double s2 = std::log1p(dist.variance);
        return std::exp(-0.5 * s2 + std::sqrt(s2) * gen.standard_normal());
    }
    case DistKind::hyperexponential:
    {
        double u = gen.uniform();
        std::size_t i = 0;
        for (; i + 1 < dist.probs.size(); ++i)
        {
            if (u < dist.probs[i])
            {
                break;
            }
            u -= dist.probs[i];
        }
        return dist.means[i] * gen.exponential();
    }
    }
    return 1.0;
}

double dist_mean(const DistDescriptor& dist)
{
    if (dist.kind == DistKind::hyperexponential)
    {
        double m = 0.0;
        for (std::size_t i = 0; i < dist.probs.size() && i < dist.means.size(); ++i)
        {
            m += dist.probs[i] * dist.means[i];
        }
        return m;
    }
    return 1.0;
}

double dist_variance(const DistDescriptor& dist)
{
    switch (dist.kind)
    {
    case DistKind::exponential: return 1.0;
    case DistKind::deterministic: return 0.0;
    case DistKind::lognormal: return dist.variance;
    case DistKind::hyperexponential:
    {
        double second = 0.0;
        for (std::size_t i = 0; i < dist.probs.size() && i < dist.means.size(); ++i)
        {
            second += 2.0 * dist.probs[i] * dist.means[i] * dist.means[i];
        }
        const double m = dist_mean(dist);
        return second - m * m;
    }
    }
    return 0.0;
}

std::string check_dist(const DistDescriptor& dist)
{
    switch (dist.kind)
    {
    case DistKind::exponential:
    case DistKind::deterministic:
        return {};
    case DistKind::lognormal:
        if (!(dist.variance >= 0.0) || !std::isfinite(dist.variance))
        {
            return "lognormal variance must be finite and nonnegative";
        }
        return {};
    case DistKind::hyperexponential:
    {
        if (dist.probs.empty() || dist.probs.size() != dist.means.size())
        {
            return "hyperexponential needs matching probs and means";
        }
        for (std::size_t i = 0; i < dist.probs.size(); ++i)
        {
            if (!(dist.probs[i] >= 0.0) || !(dist.means[i] > 0.0) || !std::isfinite(dist.means[i]))
            {
                return "hyperexponential branches need probs >= 0 and finite positive means";
            }
        }
        const double ptot = std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0);
        if (std::abs(ptot - 1.0) > 1e-12)
        {
            return "hyperexponential probs must sum to 1";
        }
        if (std::abs(dist_mean(dist) - 1.0) > 1e-9)
        {
            return "mean must be 1";
        }
        return {};
    }
    }
    return "unknown distribution";
}

} // namespace remoteq
