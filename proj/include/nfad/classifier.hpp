#pragma once

#include <string>
#include <vector>

#include "nfad/flows.hpp"
#include "nfad/net.hpp"
#include "nfad/optim.hpp"
#include "nfad/rng.hpp"

namespace nfad {

// Binary detector scored as P(normal | x): a small relu MLP with widths
// d -> 3d -> 2d -> 1 producing a logit; score = sigmoid(logit), so higher
// means more normal and 1 - score ranks anomalies.
class MlpClassifier {
 public:
  explicit MlpClassifier(int dim);

  int dim() const { return dim_; }
  void init_params(Rng& rng) { net_.glorot_init(rng); }
  Vec logits(const Mat& X) const;
  Vec score(const Mat& X) const;

  DiffNet& net() { return net_; }
  const DiffNet& net() const { return net_; }

 private:
  int dim_ = 0;
  DiffNet net_;
};

// Per-term weights of the three-part objective
//   w_normal * mean -log g(X+) + w_anomaly * mean -log(1 - g(X-))
//                              + w_surrogate * mean -log(1 - g(X~)).
struct ClfWeights {
  double normal = 1.0;
  double anomaly = 1.0;
  double surrogate = 1.0;
};

struct ClfTrainConfig {
  int epochs = 10;
  int batch = 100;               // normals per step
  int surrogates_per_batch = 100;
  double tail_p = 0.05;          // latent tail mass for fresh surrogates
  bool balanced = true;          // per-batch count-proportional anomaly split
  ClfWeights weights;            // used verbatim when balanced = false
  double val_fraction = 0.1;     // held-out share for the overfitting monitor
  AdamConfig opt = {1e-3, 0.9, 0.999, 1e-8, 0.01};

  void validate() const;
};

struct ClfEpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when no held-out split
};

struct ClfTrainTrace {
  std::vector<ClfEpochStats> epochs;
  void write_csv(const std::string& path) const;
};

// Weighted objective over the three groups; an empty group's term is
// dropped. Xm are real anomalies, Xs surrogate ones.
double clf_loss(const MlpClassifier& clf, const Mat& Xp, const Mat& Xm,
                const Mat& Xs, const ClfWeights& w);

// Same value via the training path; accumulates parameter gradients.
double clf_loss_grad(MlpClassifier& clf, const Mat& Xp, const Mat& Xm,
                     const Mat& Xs, const ClfWeights& w);

// zero grads, backprop the weighted objective, one optimizer step.
double clf_step(MlpClassifier& clf, AdamW& opt, const Mat& Xp, const Mat& Xm,
                const Mat& Xs, const ClfWeights& w);

// Trains on normals Xn vs real anomalies Xa (may be empty) plus surrogates
// drawn fresh each step from the flow's latent tail. flow may be null for
// the plain two-class baseline, in which case surrogates_per_batch must be
// 0 and Xa must be nonempty.
ClfTrainTrace train_classifier(MlpClassifier& clf, const Mat& Xn,
                               const Mat& Xa, const FlowStack* flow,
                               const ClfTrainConfig& cfg, Rng& rng);

}  // namespace nfad
