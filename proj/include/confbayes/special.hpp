#pragma once

// Special functions backing the conjugate predictive distributions.

namespace confbayes::special {

// log Γ(x) for x > 0 (Lanczos, g = 7, relative error ~1e-15).
double log_gamma(double x);

// log B(a, b); symmetric in its arguments bit-for-bit.
double log_beta(double a, double b);

// log C(n, k); symmetric in k <-> n - k bit-for-bit.
double log_choose(int n, int k);

// Regularized incomplete beta I_x(a, b), Lentz continued fraction.
double incomplete_beta(double a, double b, double x);

// CDF of the standard Student-t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

// Inverse of student_t_cdf; |cdf(result) - p| below 1e-12 for p in (1e-300, 1).
double student_t_quantile(double p, double dof);

// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);

}  // namespace confbayes::special
