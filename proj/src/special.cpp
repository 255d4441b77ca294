#include "rdhybrid/special.hpp"

#include <cmath>

namespace rdhybrid {

double erfcx(double x) {
    if (x < 10.0) return std::exp(x * x) * std::erfc(x);
    // Asymptotic series; the 12th term is below 1e-17 relative for x >= 10.
    const double inv2x2 = 1.0 / (2.0 * x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2x2;
        sum += term;
    }
    return sum / (x * std::sqrt(3.14159265358979323846));
}

}  // namespace rdhybrid

namespace rdhybrid {

double normal_upper_quantile(double p) {
    double lo = -40.0;
    double hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace rdhybrid
