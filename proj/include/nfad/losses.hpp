#pragma once

#include "nfad/matrix.hpp"

namespace nfad {

double stable_softplus(double x);  // log(1 + e^x) without overflow
double stable_sigmoid(double x);

// Fused sigmoid + binary cross-entropy on raw logits (n x 1), mean over rows.
// Stays finite for arbitrarily large |logit|; never computes log(sigmoid(x))
// as two steps. If dlogits is non-null it receives d(mean loss)/d(logits).
double bce_with_logits(const Mat& logits, const Vec& targets, Mat* dlogits);

}  // namespace nfad
