#pragma once

#include "nfad/matrix.hpp"

namespace nfad {

// log N(z; 0, I) = -d/2 log(2 pi) - ||z||^2 / 2
double std_normal_logpdf(const Vec& z);
Vec std_normal_logpdf_rows(const Mat& Z);

// Regularized incomplete gamma P(a,x) (lower) and Q(a,x) = 1 - P (upper).
// Series expansion for x < a + 1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double chi2_cdf(double x, int d);
double chi2_sf(double x, int d);

// Threshold q with P(||Z||^2 >= q) = p_tail for Z ~ N(0, I_d).
// Bisection on the survival function, absolute tolerance 1e-10.
// p_tail must lie in (0, 1]; p_tail = 1 gives exactly 0.
double chi2_tail_quantile(double p_tail, int d);

}  // namespace nfad
