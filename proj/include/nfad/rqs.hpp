#pragma once

#include "nfad/matrix.hpp"

namespace nfad {

// Elementwise monotone rational-quadratic spline (Gregory-Delbourgo form)
// on K bins over [-B, B], exposed separately so its values and hand-derived
// partials can be checked against finite differences in isolation.
//
// Raw parameter block per transformed dim (3K - 1 values):
//   [0, K)       bin widths,  softmax scaled to total 2B
//   [K, 2K)      bin heights, softmax scaled to total 2B
//   [2K, 3K-1)   interior knot derivatives, softplus(raw + log(e - 1))
// so an all-zero block gives uniform bins with unit derivatives: the
// identity map. Boundary derivatives are pinned to 1 to match the identity
// continuation outside [-B, B].

// Knot tables: xs, ys have K+1 entries, ds has K+1 (ds[0] = ds[K] = 1).
// sw, sh are the cached softmax weights (K each) for the backward pass.
void rqs_build_knots(const double* raw, int K, double B, double* xs,
                     double* ys, double* ds, double* sw, double* sh);

// Largest k in [0, K-1] with knots[k] <= v (v strictly inside (-B, B)).
int rqs_find_bin(double v, const double* knots, int K);

// Spline value, forward log-derivative and all partials at local coordinate
// xi = (z - xs[k]) / w inside bin k. Partials are with respect to the seven
// quantities (z, xk, w, yk, h, d0, d1); the inverse pass reuses them through
// implicit differentiation.
struct RqsElem {
  double y;   // spline output
  double ld;  // log of dy/dz (positive slope, so no abs needed)
  double dy_dz, dy_dxk, dy_dw, dy_dyk, dy_dh, dy_dd0, dy_dd1;
  double dld_dz, dld_dxk, dld_dw, dld_dh, dld_dd0, dld_dd1;
  // intermediates the inverse backward needs
  double xi, w, h, gxi, lxi, ls;  // gxi = d eta / d xi; lxi/ls = d ld / d xi, d ld / d s
};
RqsElem rqs_eval(double xi, const double* xs, const double* ys,
                 const double* ds, int k);

// Solve the in-bin quadratic for xi given an output value y in bin k.
double rqs_invert(double y, const double* xs, const double* ys,
                  const double* ds, int k);

}  // namespace nfad
