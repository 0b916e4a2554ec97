#pragma once

#include <map>
#include <string>
#include <vector>

#include "nfad/matrix.hpp"
#include "nfad/rng.hpp"

namespace nfad {

enum class Label { normal, anomaly };

struct LabeledDataset {
  Mat X;
  std::vector<Label> y;
  std::vector<std::string> feature_names;  // may be empty (unnamed)

  long n() const { return X.rows(); }
  int dim() const { return static_cast<int>(X.cols()); }
  long count(Label which) const;
  Mat rows_with(Label which) const;
};

// Two interleaved half-circles plus isotropic noise:
//   moon A (normal):  (cos t, sin t)
//   moon B (anomaly): (1 - cos t, 0.5 - sin t)
// with t ~ U[0, pi]. ceil(n/2) points on A, floor(n/2) on B.
LabeledDataset make_moons(int n, double noise_sigma, Rng& rng);
// The noise-free parametric points, exposed for direct checking.
Vec moon_a_point(double t);
Vec moon_b_point(double t);

// Isotropic Gaussian cluster carrying a single label.
LabeledDataset make_blob(int n, const Vec& center, double sigma, Label label,
                         Rng& rng);

// Row-wise concatenation; dims must match, feature names from `a` win.
LabeledDataset concat_datasets(const LabeledDataset& a,
                               const LabeledDataset& b);

// Header + numeric feature columns + string label column.
// Errors name the offending row (1-based, excluding the header) and column.
LabeledDataset ingest_csv(const std::string& path,
                          const std::string& label_column,
                          const std::map<std::string, Label>& label_map);
const std::map<std::string, Label>& default_label_map();  // normal/anomaly

void write_dataset_csv(const std::string& path, const LabeledDataset& ds);

// Per-feature affine map to zero mean, unit (population) variance.
// Fit on normal training data only so anomalies leak no statistics.
struct Standardizer {
  Vec mean, std;

  int dim() const { return static_cast<int>(mean.size()); }
  void fit(const Mat& X);  // rejects near-constant features by name/index
  Mat transform(const Mat& X) const;
  Mat inverse_transform(const Mat& X) const;
};

struct SplitResult {
  LabeledDataset train, test;
};

// Plain shuffled split; train gets floor(train_fraction * n) rows.
SplitResult split(const LabeledDataset& ds, double train_fraction, Rng& rng);

// Keeps every normal row (original order) and k anomalies drawn without
// replacement, also in original row order.
LabeledDataset subsample_anomalies(const LabeledDataset& ds, long k, Rng& rng);

}  // namespace nfad
