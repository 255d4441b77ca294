#pragma once

namespace rdhybrid {

// Scaled complementary error function exp(x^2) * erfc(x), stable for large x.
double erfcx(double x);

// z with P(Z > z) = p for a standard normal Z.
double normal_upper_quantile(double p);

}  // namespace rdhybrid
