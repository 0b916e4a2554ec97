#include "nfad/finite_diff.hpp"

namespace nfad {

Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& z,
                         double h) {
  require(h > 0.0, "finite_diff_jacobian: h must be positive");
  require_finite(z, "finite_diff_jacobian");
  const int d = static_cast<int>(z.size());
  Vec zp = z, zm = z;
  Mat J;
  for (int j = 0; j < d; ++j) {
    zp(j) = z(j) + h;
    zm(j) = z(j) - h;
    const Vec fp = fn(zp);
    const Vec fm = fn(zm);
    require_finite(fp, "finite_diff_jacobian: fn output");
    require(fp.size() == fm.size(), "finite_diff_jacobian: fn output size varies");
    if (J.size() == 0) J.resize(fp.size(), d);
    J.col(j) = (fp - fm) / (2.0 * h);
    zp(j) = z(j);
    zm(j) = z(j);
  }
  return J;
}

double finite_diff_at(const std::function<double()>& eval, double* coord,
                      double h) {
  const double save = *coord;
  *coord = save + h;
  const double fp = eval();
  *coord = save - h;
  const double fm = eval();
  *coord = save;
  return (fp - fm) / (2.0 * h);
}

}  // namespace nfad
