#include "rdhybrid/random.hpp"

#include <algorithm>
#include <cmath>

namespace rdhybrid {

Rng::Rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
}

Rng Rng::for_replica(std::uint64_t seed, std::uint64_t replica) {
    Rng r(0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                      0x9e3779b9u};
    r.engine_.seed(seq);
    return r;
}

double Rng::exponential(double rate) {
    if (!(rate > 0.0)) return kInf;
    return -std::log(uniform()) / rate;
}

std::size_t Rng::index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
}

Vec3 Rng::unit_vector() {
    const double w = 2.0 * uniform() - 1.0;
    const double phi = 2.0 * kPi * uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    return {s * std::cos(phi), s * std::sin(phi), w};
}

}  // namespace rdhybrid
