#include "rdhybrid/pair_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "rdhybrid/special.hpp"

namespace rdhybrid {

namespace {

double lambda_of(const PairParams& p) { return (1.0 + p.k_a / (4.0 * kPi * p.sigma * p.D)) / p.sigma; }

double heat_kernel(double x, double Dt) { return std::exp(-x * x / (4.0 * Dt)) / std::sqrt(4.0 * kPi * Dt); }

}  // namespace

double pair_survival(const PairParams& p, double r0, double t) {
    if (!(t > 0.0) || !(p.k_a > 0.0)) return 1.0;
    const double Dt = p.D * t;
    const double s = std::sqrt(4.0 * Dt);
    const double u = (r0 - p.sigma) / s;
    const double beta = p.k_a / (p.k_a + 4.0 * kPi * p.sigma * p.D);
    const double reacted =
        p.sigma / r0 * beta * (std::erfc(u) - std::exp(-u * u) * erfcx(u + lambda_of(p) * std::sqrt(Dt)));
    return std::clamp(1.0 - reacted, 0.0, 1.0);
}

double pair_radial_density(const PairParams& p, double r0, double r, double t) {
    const double Dt = p.D * t;
    const double s = std::sqrt(4.0 * Dt);
    const double lam = lambda_of(p);
    const double y = r + r0 - 2.0 * p.sigma;
    const double H = std::exp(-y * y / (s * s)) * erfcx(y / s + lam * std::sqrt(Dt));
    return r / r0 * (heat_kernel(r - r0, Dt) + heat_kernel(y, Dt) - lam * H);
}

double pair_radial_antiderivative(const PairParams& p, double r0, double r, double t) {
    const double Dt = p.D * t;
    const double s = std::sqrt(4.0 * Dt);
    const double lam = lambda_of(p);
    const double y = r + r0 - 2.0 * p.sigma;
    const double H = std::exp(-y * y / (s * s)) * erfcx(y / s + lam * std::sqrt(Dt));
    const double a = -2.0 * Dt * heat_kernel(r - r0, Dt) + 0.5 * r0 * std::erf((r - r0) / s) +
                     2.0 * Dt * heat_kernel(y, Dt) + (0.5 * (r0 - 2.0 * p.sigma) + 1.0 / lam) * std::erf(y / s) +
                     (1.0 / lam - r) * H;
    return a / r0;
}

double invert_reaction_cdf(const PairParams& p, double r0, double dt, double target) {
    double lo = 0.0;
    double hi = dt;
    const double tol = 1e-10 * dt;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 - pair_survival(p, r0, mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

PairEvent sample_pair_event(const PairParams& p, double r0, double dt, Rng& rng) {
    if (!(dt > 0.0) || !(p.k_a > 0.0)) return {};
    const double u = rng.uniform();
    if (u >= 1.0 - pair_survival(p, r0, dt)) return {};
    return {true, invert_reaction_cdf(p, r0, dt, u)};
}

double sample_separation(const PairParams& p, double r0, double t, Rng& rng) {
    if (!(t > 0.0)) return r0;
    const double s = std::sqrt(4.0 * p.D * t);
    const double base = pair_radial_antiderivative(p, r0, p.sigma, t);
    const double total = pair_radial_antiderivative(p, r0, r0 + 12.0 * s, t) - base;
    const double target = rng.uniform() * total;
    double lo = p.sigma;
    double hi = r0 + 12.0 * s;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (pair_radial_antiderivative(p, r0, mid, t) - base < target) lo = mid;
        else hi = mid;
    }
    return std::max(p.sigma, 0.5 * (lo + hi));
}

Vec3 sample_direction(const Vec3& r0_dir, double kappa, Rng& rng) {
    if (!(kappa > 1e-8)) return rng.unit_vector();
    const double u = rng.uniform();
    double w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
    w = std::clamp(w, -1.0, 1.0);
    // Orthonormal frame around r0_dir.
    const Vec3 helper = std::abs(r0_dir.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    Vec3 e1 = cross(r0_dir, helper);
    e1 *= 1.0 / norm(e1);
    const Vec3 e2 = cross(r0_dir, e1);
    const double phi = 2.0 * kPi * rng.uniform();
    const double st = std::sqrt(std::max(0.0, 1.0 - w * w));
    return w * r0_dir + st * std::cos(phi) * e1 + st * std::sin(phi) * e2;
}

Vec3 propagate_relative(const PairParams& p, const Vec3& r0, double t, Rng& rng) {
    const double d0 = norm(r0);
    const double r = sample_separation(p, d0, t, rng);
    const Vec3 dir = sample_direction(r0 * (1.0 / d0), d0 * r / (2.0 * p.D * t), rng);
    return r * dir;
}

}  // namespace rdhybrid
