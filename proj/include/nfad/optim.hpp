#pragma once

#include <vector>

#include "nfad/net.hpp"

namespace nfad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Decoupled decay; 0 gives plain Adam. Applied multiplicatively to the
  // parameter before the Adam update, not mixed into the gradient.
  double weight_decay = 0.0;

  void validate() const;
};

// AdamW over a fixed list of parameter blocks. Step order:
//   p <- p * (1 - lr * wd)
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
class AdamW {
 public:
  AdamW(std::vector<ParamRef> params, const AdamConfig& cfg);

  // Throws on non-finite gradients (training aborts rather than poisoning
  // parameters).
  void step();
  long t() const { return t_; }

 private:
  std::vector<ParamRef> params_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Vec> m_, v_;
};

}  // namespace nfad
