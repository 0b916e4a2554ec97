#include "nfad/losses.hpp"

#include <cmath>

namespace nfad {

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bce_with_logits(const Mat& logits, const Vec& targets, Mat* dlogits) {
  require(logits.cols() == 1, "bce_with_logits: logits must be n x 1");
  require(logits.rows() == targets.size(),
          "bce_with_logits: size mismatch between logits and targets");
  require(logits.rows() > 0, "bce_with_logits: empty batch");
  require_finite(logits, "bce_with_logits");
  const double n = static_cast<double>(logits.rows());
  double loss = 0.0;
  if (dlogits) dlogits->resize(logits.rows(), 1);
  for (long i = 0; i < logits.rows(); ++i) {
    const double l = logits(i, 0);
    const double y = targets(i);
    require(y >= 0.0 && y <= 1.0, "bce_with_logits: targets must be in [0,1]");
    // max(l,0) - l*y + log(1 + exp(-|l|))
    loss += std::max(l, 0.0) - l * y + std::log1p(std::exp(-std::abs(l)));
    if (dlogits) (*dlogits)(i, 0) = (stable_sigmoid(l) - y) / n;
  }
  return loss / n;
}

}  // namespace nfad
