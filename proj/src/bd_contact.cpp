#include "rdhybrid/bd_contact.hpp"

#include <algorithm>
#include <cmath>

#include "rdhybrid/special.hpp"

namespace rdhybrid {

double contact_reaction_probability(const PairParams& p, double r_old, double r_new, double dt) {
    if (!(p.k_a > 0.0) || !(dt > 0.0)) return 0.0;
    const double x = std::max(0.0, r_old - p.sigma);
    const double y = std::max(0.0, r_new - p.sigma);
    const double v = 2.0 * p.D * dt;
    // r * density obeys a half-line problem with Robin constant c + 1/sigma;
    // a purely reflecting sphere keeps the 1/sigma part.
    const double l_ref = 1.0 / p.sigma;
    const double l_full = l_ref + p.k_a / (4.0 * kPi * p.sigma * p.sigma * p.D);
    const double touch = std::exp(-2.0 * x * y / v);
    if (touch == 0.0) return 0.0;
    const double s = std::sqrt(2.0 * v);
    const auto image = [&](double l) { return l * std::sqrt(2.0 * kPi * v) * touch * erfcx((x + y + l * v) / s); };
    const double j_ref = image(l_ref);
    const double denom = 1.0 + touch - j_ref;
    if (!(denom > 0.0)) return 0.0;
    return std::clamp((image(l_full) - j_ref) / denom, 0.0, 1.0);
}

ContactStep contact_step(const PairParams& p, const Vec3& r_old, const Vec3& r_proposed, double dt, Rng& rng) {
    Vec3 r = r_proposed;
    double d = norm(r);
    if (d < p.sigma) {
        const double reflected = 2.0 * p.sigma - d;
        r = d > 0.0 ? r * (reflected / d) : Vec3{reflected, 0.0, 0.0};
        d = reflected;
    }
    if (p.k_a > 0.0 && rng.uniform() < contact_reaction_probability(p, norm(r_old), d, dt)) return {true, r_old};
    return {false, r};
}

}  // namespace rdhybrid
