#pragma once

namespace dualstop {

double normal_pdf(double x);

/// Standard normal CDF, accurate to double precision in both tails.
double normal_cdf(double x);

/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

}  // namespace dualstop
