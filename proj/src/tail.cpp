#include <cmath>

#include "nfad/special.hpp"
#include "nfad/tail.hpp"

namespace nfad {

namespace {

// Solve chi2_sf(t, d) = target for t >= lo, where chi2_sf(lo, d) >= target.
double truncated_radius_sq(double target, double lo, int d) {
  double hi = std::max(lo, 1.0);
  while (chi2_sf(hi, d) > target) hi *= 2.0;
  double a = lo, b = hi;
  for (int it = 0; it < 200 && b - a > 1e-12 * (1.0 + b); ++it) {
    const double mid = 0.5 * (a + b);
    if (chi2_sf(mid, d) > target)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

Mat sample_rejection(int n, int d, double q, Rng& rng) {
  Mat Z(n, d);
  Vec z(d);
  for (int i = 0; i < n; ++i) {
    for (;;) {
      for (int j = 0; j < d; ++j) z(j) = rng.normal();
      if (z.squaredNorm() >= q) break;
    }
    Z.row(i) = z.transpose();
  }
  return Z;
}

Mat sample_radial(int n, int d, double p_tail, double q, Rng& rng) {
  Mat Z(n, d);
  Vec z(d);
  for (int i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < d; ++j) z(j) = rng.normal();
      norm2 = z.squaredNorm();
    } while (norm2 == 0.0);
    // P(||Z||^2 >= t | shell) = sf(t)/p_tail, so invert sf at p_tail*(1-u)
    const double u = rng.uniform();
    const double t = truncated_radius_sq(p_tail * (1.0 - u), q, d);
    Z.row(i) = (std::sqrt(t / norm2) * z).transpose();
  }
  return Z;
}

}  // namespace

Mat sample_tail_latents(int n, int d, double p_tail, Rng& rng,
                        TailMethod method) {
  require(n >= 0, "tail latents: n must be >= 0");
  require(d >= 1, "tail latents: d must be >= 1");
  require(p_tail > 0.0 && p_tail <= 1.0, "tail latents: p_tail must be in (0, 1]");
  if (n == 0) return Mat(0, d);
  if (p_tail == 1.0) return sample_std_normal(n, d, rng);

  const double q = chi2_tail_quantile(p_tail, d);
  if (method == TailMethod::auto_select)
    method = p_tail >= 1e-3 ? TailMethod::rejection : TailMethod::radial;
  return method == TailMethod::rejection ? sample_rejection(n, d, q, rng)
                                         : sample_radial(n, d, p_tail, q, rng);
}

Mat gen_surrogates(const FlowStack& flow, int n, double p_tail, Rng& rng,
                   TailMethod method) {
  Mat Z = sample_tail_latents(n, flow.dim(), p_tail, rng, method);
  return flow.transport(Z);
}

}  // namespace nfad
