#include "nfad/rqs.hpp"

#include <cmath>

namespace nfad {

namespace {
// softplus shift making the derivative exactly 1 at raw = 0
const double kDerivShift = std::log(std::exp(1.0) - 1.0);
}  // namespace

void rqs_build_knots(const double* raw, int K, double B, double* xs,
                     double* ys, double* ds, double* sw, double* sh) {
  auto softmax = [K](const double* in, double* out) {
    double mx = in[0];
    for (int i = 1; i < K; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (int i = 0; i < K; ++i) {
      out[i] = std::exp(in[i] - mx);
      sum += out[i];
    }
    for (int i = 0; i < K; ++i) out[i] /= sum;
  };
  softmax(raw, sw);
  softmax(raw + K, sh);

  // Endpoints pinned to +-B; interior knots from the cumulative softmax.
  xs[0] = -B;
  ys[0] = -B;
  for (int k = 1; k < K; ++k) {
    xs[k] = xs[k - 1] + 2.0 * B * sw[k - 1];
    ys[k] = ys[k - 1] + 2.0 * B * sh[k - 1];
  }
  xs[K] = B;
  ys[K] = B;
  for (int k = 0; k < K; ++k) {
    if (!(xs[k + 1] - xs[k] > 1e-9) || !(ys[k + 1] - ys[k] > 1e-9))
      throw std::runtime_error("rqs: degenerate bin (conditioner output too extreme)");
  }

  ds[0] = 1.0;
  ds[K] = 1.0;
  for (int j = 1; j < K; ++j) {
    const double r = raw[2 * K + (j - 1)] + kDerivShift;
    ds[j] = std::max(r, 0.0) + std::log1p(std::exp(-std::abs(r)));
    if (!(ds[j] > 0.0))
      throw std::logic_error("rqs: non-positive knot derivative");
  }
}

int rqs_find_bin(double v, const double* knots, int K) {
  int lo = 0, hi = K;  // knots[lo] <= v < knots[hi]
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (knots[mid] <= v)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

RqsElem rqs_eval(double xi, const double* xs, const double* ys,
                 const double* ds, int k) {
  const double w = xs[k + 1] - xs[k];
  const double h = ys[k + 1] - ys[k];
  const double d0 = ds[k];
  const double d1 = ds[k + 1];
  const double s = h / w;
  const double q = xi * (1.0 - xi);

  const double A = s * xi + d0 * (1.0 - xi);
  const double Dn = s + (d0 + d1 - 2.0 * s) * q;
  const double M = d1 * xi * xi + 2.0 * s * q + d0 * (1.0 - xi) * (1.0 - xi);

  RqsElem e;
  e.xi = xi;
  e.w = w;
  e.h = h;
  e.y = ys[k] + h * xi * A / Dn;
  e.ld = 2.0 * std::log(s) + std::log(M) - 2.0 * std::log(Dn);

  // core partials at independent variables (xi, s, d0, d1, h, yk)
  const double dA_dxi = s - d0;
  const double dD_dxi = (d0 + d1 - 2.0 * s) * (1.0 - 2.0 * xi);
  const double dD_ds = 1.0 - 2.0 * q;
  const double D2 = Dn * Dn;
  const double Gxi = h * ((A + xi * dA_dxi) * Dn - xi * A * dD_dxi) / D2;
  const double Gs = h * (xi * xi * Dn - xi * A * dD_ds) / D2;
  const double Gd0 = h * (xi * (1.0 - xi) * Dn - xi * A * q) / D2;
  const double Gd1 = h * (-xi * A * q) / D2;
  const double Gh = xi * A / Dn;

  const double dM_dxi =
      2.0 * d1 * xi + 2.0 * s * (1.0 - 2.0 * xi) - 2.0 * d0 * (1.0 - xi);
  const double Lxi = dM_dxi / M - 2.0 * dD_dxi / Dn;
  const double Ls = 2.0 / s + 2.0 * q / M - 2.0 * dD_ds / Dn;
  const double Ld0 = (1.0 - xi) * (1.0 - xi) / M - 2.0 * q / Dn;
  const double Ld1 = xi * xi / M - 2.0 * q / Dn;

  e.gxi = Gxi;
  e.lxi = Lxi;
  e.ls = Ls;

  // chain xi = (z - xk)/w, s = h/w
  const double dxi_dw = -xi / w;
  const double ds_dw = -s / w;
  const double ds_dh = 1.0 / w;

  e.dy_dz = Gxi / w;
  e.dy_dxk = -Gxi / w;
  e.dy_dw = Gxi * dxi_dw + Gs * ds_dw;
  e.dy_dyk = 1.0;
  e.dy_dh = Gh + Gs * ds_dh;
  e.dy_dd0 = Gd0;
  e.dy_dd1 = Gd1;

  e.dld_dz = Lxi / w;
  e.dld_dxk = -Lxi / w;
  e.dld_dw = Lxi * dxi_dw + Ls * ds_dw;
  e.dld_dh = Ls * ds_dh;
  e.dld_dd0 = Ld0;
  e.dld_dd1 = Ld1;
  return e;
}

double rqs_invert(double y, const double* xs, const double* ys,
                  const double* ds, int k) {
  const double w = xs[k + 1] - xs[k];
  const double h = ys[k + 1] - ys[k];
  const double d0 = ds[k];
  const double d1 = ds[k + 1];
  const double s = h / w;
  const double dy = y - ys[k];
  const double dd = d0 + d1 - 2.0 * s;

  // Quadratic a xi^2 + b xi + c = 0 in the stable 2c / (-b - sqrt(disc))
  // form; degenerates gracefully to the linear case when a -> 0.
  const double a = dy * dd + h * (s - d0);
  const double b = h * d0 - dy * dd;
  const double c = -s * dy;
  const double disc = b * b - 4.0 * a * c;
  if (!(disc >= 0.0))
    throw std::logic_error("rqs: negative discriminant in inverse");
  double xi = 2.0 * c / (-b - std::sqrt(disc));
  if (xi < 0.0) xi = 0.0;
  if (xi > 1.0) xi = 1.0;
  return xi;
}

}  // namespace nfad
