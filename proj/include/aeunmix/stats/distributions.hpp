#pragma once

namespace aeunmix::stats {

// Regularised lower/upper incomplete gamma P(a, x), Q(a, x); a > 0, x >= 0.
double gamma_p(double a, double x);
double gamma_q(double a, double x);
// Regularised incomplete beta I_x(a, b); a, b > 0, x in [0, 1].
double beta_inc(double a, double b, double x);

// Survival functions P(X > x). Non-positive degrees of freedom or a negative
// x (chi2, F) throw std::domain_error.
double chi2_sf(double x, double df);
double t_sf(double x, double df);
double f_sf(double x, double d1, double d2);

}  // namespace aeunmix::stats
