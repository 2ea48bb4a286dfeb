#pragma once

#include "remoteq/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace remoteq {

enum class StreamPurpose : std::uint8_t {
    interappearance = 1,
    service = 2, // per station; station index in StreamLabel::station
    routing_uniform = 3,
    origin_draw = 4,
    location_draw = 5,
    service_common = 6, // station-independent requirements
    monte_carlo = 7,    // planning integrals
};

struct StreamLabel
{
    StreamPurpose purpose = StreamPurpose::interappearance;
    std::uint32_t station = 0;
    std::uint64_t replication = 0;

    static StreamLabel interappearance(std::uint64_t rep) { return {StreamPurpose::interappearance, 0, rep}; }
    static StreamLabel service(std::uint32_t k, std::uint64_t rep) { return {StreamPurpose::service, k, rep}; }
    static StreamLabel routing(std::uint64_t rep) { return {StreamPurpose::routing_uniform, 0, rep}; }
    static StreamLabel origin(std::uint64_t rep) { return {StreamPurpose::origin_draw, 0, rep}; }
    static StreamLabel location(std::uint64_t rep) { return {StreamPurpose::location_draw, 0, rep}; }
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Seed of the stream labelled `label`:
//   mix64(mix64(mix64(base_seed) ^ (purpose << 32 | station)) ^ replication)
std::uint64_t stream_seed(std::uint64_t base_seed, const StreamLabel& label);

// Single-owner random stream. Uses std::mt19937_64 (whose output sequence is fixed by
// the standard) and explicit transforms, so draws are identical on every platform.
class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    // Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    double standard_normal();
    double exponential() { return -std::log(uniform_pos()); }
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

Rng derive_stream(std::uint64_t base_seed, const StreamLabel& label);

// Draw from the mean-1 law described by `dist`.
double sample(const DistDescriptor& dist, Rng& gen);

double dist_mean(const DistDescriptor& dist);
double dist_variance(const DistDescriptor& dist);

// Empty string when the descriptor is valid.
std::string check_dist(const DistDescriptor& dist);

} // namespace remoteq
