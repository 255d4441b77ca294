#include <doctest.h>

#include <cmath>

#include "rdhybrid/rates.hpp"

using namespace rdhybrid;

TEST_SUITE("rates") {

TEST_CASE("G3 vanishes at the critical mesh size") {
    for (double sigma : {1e-4, 1e-2, 1.0}) {
        const double h = h_star(sigma);
        CHECK(std::abs(g3(h, sigma)) <= 1e-12 * (1.0 / (4.0 * kPi * sigma)));
        CHECK(h == doctest::Approx(2.0 * kC3 / 3.0 * kPi * sigma).epsilon(1e-14));
    }
}

TEST_CASE("meso rate at h* is the bare rate per voxel volume") {
    const double sigma = 0.005, D = 2.0;
    for (double k_a : {0.01, 1.0, 100.0}) {
        const double h = h_star(sigma);
        CHECK(meso_rate(k_a, D, sigma, h) == doctest::Approx(k_a / (h * h * h)).epsilon(1e-12));
    }
}

TEST_CASE("large-h meso rate approaches the Collins-Kimball rate") {
    const double sigma = 0.005, D = 2.0, k_a = 1.0;
    const double h = 1e5;
    const double V = h * h * h;
    CHECK(meso_rate(k_a, D, sigma, h) == doctest::Approx(collins_kimball(k_a, D, sigma, V)).epsilon(1e-4));
    const double ck = 4.0 * kPi * sigma * D * k_a / (4.0 * kPi * sigma * D + k_a);
    CHECK(collins_kimball(k_a, D, sigma, 2.0) == doctest::Approx(ck / 2.0).epsilon(1e-14));
}

TEST_CASE("W below epsilon is equivalent to the meso rate band above h*") {
    const double sigma = 0.005, D = 2.0, eps = 0.025;
    int inside = 0, outside = 0;
    for (double k_a = 1e-3; k_a <= 1e3; k_a *= 1.7) {
        for (double h = 1.01 * h_star(sigma); h < 1.0; h *= 1.3) {
            const double W = resolution_error_W(k_a, D, sigma, h).W;
            const double bare = k_a / (h * h * h);
            const double k = meso_rate(k_a, D, sigma, h);
            const bool band = bare / (1.0 + eps) < k && k <= bare;
            CHECK((W < eps) == band);
            (W < eps ? inside : outside)++;
        }
    }
    CHECK(inside > 10);
    CHECK(outside > 10);
}

TEST_CASE("W grows with k_a at fixed h") {
    const double sigma = 0.0025, D = 2.0, h = 0.05;
    double last = -1.0;
    for (double k_a = 0.001; k_a <= 1.0; k_a *= 1.5) {
        const double W = resolution_error_W(k_a, D, sigma, h).W;
        CHECK(W > last);
        last = W;
    }
    CHECK(resolution_error_W(1.0, D, sigma, h_star(sigma)).W == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(resolution_error_W(1.0, D, sigma, 0.5 * h_star(sigma)).below_optimal);
}

TEST_CASE("meso rate fails below the critical size when the denominator vanishes") {
    const double sigma = 0.005, D = 2.0;
    CHECK_THROWS_AS(meso_rate(1.0, D, sigma, 0.005), NonPositiveDenominator);
    CHECK(meso_rate(1e-4, D, sigma, 0.005) > 0.0);
    CHECK(below_optimal(0.005, sigma));
    CHECK_FALSE(below_optimal(0.05, sigma));
}

TEST_CASE("mean diffusion and reaction times match between scales at h*") {
    const double sigma = 0.005, D = 2.0, k_a = 1.0, V = 1.0;
    const double h = h_star(sigma);
    const MeanTimes t = mean_times(k_a, D, sigma, h, V);
    CHECK(t.tau_diff_meso == doctest::Approx(t.tau_diff_micro).epsilon(1e-3));
    CHECK(t.tau_react_meso == doctest::Approx(t.tau_react_micro).epsilon(1e-9));
    CHECK(t.tau_react_micro == doctest::Approx(V / k_a).epsilon(1e-12));
}

TEST_CASE("residency time and jump rate") {
    CHECK(t_m(0.05 * 0.05 * 0.05, 2.0, 6.0) == doctest::Approx(36.0 * 0.0025 / 12.0).epsilon(1e-12));
    CHECK(jump_rate(2.0, 0.1) == doctest::Approx(200.0));
}

TEST_CASE("contact survival limits") {
    const double sigma = 0.005, D = 2.0, k_a = 1.0;
    CHECK(contact_survival(k_a, D, sigma, 0.0) == doctest::Approx(1.0));
    CHECK(contact_survival(0.0, D, sigma, 1.0) == doctest::Approx(1.0));
    const double limit = 1.0 - k_a / (4.0 * kPi * sigma * D + k_a);
    CHECK(contact_survival(k_a, D, sigma, 1e8) == doctest::Approx(limit).epsilon(1e-4));
    double last = 1.0;
    for (double t = 1e-9; t < 1e3; t *= 3.0) {
        const double s = contact_survival(k_a, D, sigma, t);
        CHECK(s <= last + 1e-15);
        CHECK(std::isfinite(s));
        last = s;
    }
}

}
