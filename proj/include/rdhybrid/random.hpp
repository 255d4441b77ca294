#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "rdhybrid/types.hpp"

namespace rdhybrid {

// Per-trajectory random stream. Streams for different replicas are derived
// from (seed, replica) through std::seed_seq so they are decorrelated.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    static Rng for_replica(std::uint64_t seed, std::uint64_t replica);

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_(engine_); }
    // Exponential waiting time; +inf for a zero rate.
    double exponential(double rate);
    std::size_t index(std::size_t n);
    Vec3 unit_vector();
    Vec3 gaussian_vec(double stddev) { return {stddev * normal(), stddev * normal(), stddev * normal()}; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rdhybrid
