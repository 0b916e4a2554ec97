#pragma once

#include <functional>

#include "nfad/matrix.hpp"

namespace nfad {

// Central-difference Jacobian J(i,j) = d f_i / d z_j. Used as the
// independent oracle against analytic log-determinants and gradients.
Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& z,
                         double h = 1e-6);

// Central-difference derivative of a scalar function of one coordinate,
// twiddled in place (used to check gradients of network parameters).
double finite_diff_at(const std::function<double()>& eval, double* coord,
                      double h);

}  // namespace nfad
