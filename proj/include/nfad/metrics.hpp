#pragma once

#include <vector>

#include "nfad/dataset.hpp"
#include "nfad/matrix.hpp"

namespace nfad {

// Probability that a uniformly chosen normal sample scores higher than a
// uniformly chosen anomaly, ties counted 1/2. Computed by rank summation
// with averaged tie ranks. Throws if either class is absent.
double roc_auc(const Vec& scores, const std::vector<Label>& labels);

}  // namespace nfad
