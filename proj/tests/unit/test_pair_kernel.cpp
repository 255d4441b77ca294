#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rdhybrid/bd_contact.hpp"
#include "rdhybrid/oracles.hpp"
#include "rdhybrid/pair_kernel.hpp"
#include "rdhybrid/rates.hpp"

using namespace rdhybrid;

TEST_SUITE("pair_kernel") {

TEST_CASE("contact survival is the r0 = sigma case") {
    const PairParams p{0.005, 2.0, 1.0};
    for (double t : {1e-8, 1e-6, 1e-4, 1e-2, 1.0})
        CHECK(pair_survival(p, p.sigma, t) == doctest::Approx(contact_survival(p.k_a, p.D, p.sigma, t)).epsilon(1e-10));
}

TEST_CASE("survival away from contact agrees with the radial PDE") {
    const PairParams p{0.005, 2.0, 1.0};
    const std::vector<double> times{1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    for (double r0 : {1.2 * p.sigma, 2.0 * p.sigma, 4.0 * p.sigma}) {
        const auto pde = pde_survival(r0, p.sigma, p.k_a, p.D, times);
        for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(pair_survival(p, r0, times[i]) - pde[i]) < 1e-3);
    }
}

TEST_CASE("radial density integrates to the survival probability") {
    const PairParams p{0.005, 2.0, 0.3};
    for (double t : {1e-7, 1e-5, 1e-3}) {
        for (double r0 : {p.sigma, 1.5 * p.sigma}) {
            const double total = pair_radial_antiderivative(p, r0, 1e3, t) - pair_radial_antiderivative(p, r0, p.sigma, t);
            CHECK(total == doctest::Approx(pair_survival(p, r0, t)).epsilon(1e-6));
            // Trapezoid check of the density against the antiderivative on a sub-interval.
            const double a = p.sigma, b = r0 + 3.0 * std::sqrt(2.0 * p.D * t);
            double sum = 0.0;
            const int n = 20000;
            for (int k = 0; k <= n; ++k) {
                const double r = a + (b - a) * k / n;
                sum += (k == 0 || k == n ? 0.5 : 1.0) * pair_radial_density(p, r0, r, t);
            }
            sum *= (b - a) / n;
            const double exact = pair_radial_antiderivative(p, r0, b, t) - pair_radial_antiderivative(p, r0, a, t);
            CHECK(sum == doctest::Approx(exact).epsilon(1e-3));
        }
    }
}

TEST_CASE("sampled reactions follow 1 - S") {
    const PairParams p{0.005, 2.0, 1.0};
    const double r0 = 1.3 * p.sigma, dt = 1e-5;
    Rng rng(11);
    const int n = 40000;
    std::vector<double> u;
    for (int i = 0; i < n; ++i) {
        const PairEvent e = sample_pair_event(p, r0, dt, rng);
        if (e.reacted) {
            CHECK_MESSAGE((e.t >= 0.0 && e.t <= dt), "reaction time outside the window");
            u.push_back((1.0 - pair_survival(p, r0, e.t)) / (1.0 - pair_survival(p, r0, dt)));
        }
    }
    const double q = 1.0 - pair_survival(p, r0, dt);
    const double se = std::sqrt(q * (1.0 - q) / n);
    CHECK(std::abs(static_cast<double>(u.size()) / n - q) < 4.0 * se);
    std::sort(u.begin(), u.end());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        d = std::max({d, std::abs(u[i] - double(i) / u.size()), std::abs(double(i + 1) / u.size() - u[i])});
    CHECK(d < 1.95 / std::sqrt(static_cast<double>(u.size())));
}

TEST_CASE("inverse reaction CDF hits its target") {
    const PairParams p{0.005, 2.0, 1.0};
    const double r0 = p.sigma, dt = 1e-4;
    const double q = 1.0 - pair_survival(p, r0, dt);
    for (double target : {0.1 * q, 0.5 * q, 0.99 * q}) {
        const double t = invert_reaction_cdf(p, r0, dt, target);
        CHECK(1.0 - pair_survival(p, r0, t) == doctest::Approx(target).epsilon(1e-6));
    }
}

TEST_CASE("surviving separations match the PDE mean") {
    const PairParams p{0.005, 2.0, 1.0};
    const double r0 = 1.5 * p.sigma, t = 2e-5;
    Rng rng(12);
    const int n = 40000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = sample_separation(p, r0, t, rng);
        CHECK_MESSAGE(r >= p.sigma, "separation inside the contact sphere");
        sum += r;
        sum2 += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    const std::vector<double> times{t};
    const double er = pde_expectation([](double r) { return r; }, r0, p.sigma, p.k_a, p.D, times)[0];
    const double s = pde_survival(r0, p.sigma, p.k_a, p.D, times)[0];
    CHECK(std::abs(mean - er / s) < 4.0 * se + 1e-6);
}

TEST_CASE("relative propagation never enters the contact sphere") {
    const PairParams p{0.005, 2.0, 1.0};
    Rng rng(13);
    Vec3 r{p.sigma, 0.0, 0.0};
    for (int i = 0; i < 10000; ++i) {
        r = propagate_relative(p, r, 1e-6, rng);
        CHECK_MESSAGE(norm(r) >= p.sigma * (1.0 - 1e-12), "overlap");
        if (norm(r) > 10.0 * p.sigma) r = r * (p.sigma / norm(r));
    }
}

TEST_CASE("direction sampling concentrates with kappa") {
    Rng rng(14);
    const Vec3 axis{0.0, 0.0, 1.0};
    double flat = 0.0, peaked = 0.0;
    for (int i = 0; i < 20000; ++i) {
        flat += dot(sample_direction(axis, 1e-9, rng), axis);
        peaked += dot(sample_direction(axis, 50.0, rng), axis);
    }
    CHECK(std::abs(flat / 20000) < 0.03);
    // Mean cosine of the von Mises-Fisher law: coth(k) - 1/k.
    CHECK(peaked / 20000 == doctest::Approx(1.0 / std::tanh(50.0) - 1.0 / 50.0).epsilon(2e-3));
}

TEST_CASE("contact step reflects and never overlaps") {
    const PairParams p{0.005, 2.0, 0.0};
    Rng rng(15);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 old{p.sigma * 1.01, 0.0, 0.0};
        const Vec3 prop = old + rng.gaussian_vec(0.5 * p.sigma);
        const ContactStep s = contact_step(p, old, prop, 1e-6, rng);
        CHECK_FALSE(s.reacted);
        CHECK(norm(s.r) >= p.sigma * (1.0 - 1e-12));
    }
    CHECK(contact_reaction_probability({0.005, 2.0, 0.0}, 0.005, 0.005, 1e-6) == 0.0);
    const double pr = contact_reaction_probability({0.005, 2.0, 1.0}, 0.005, 0.005, 1e-6);
    CHECK((pr > 0.0 && pr < 1.0));
}

}
