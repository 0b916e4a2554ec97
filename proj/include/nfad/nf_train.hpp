#pragma once

#include <string>
#include <vector>

#include "nfad/flows.hpp"
#include "nfad/optim.hpp"
#include "nfad/rng.hpp"

namespace nfad {

// Density-model training: minimize the negative log-likelihood of the data
// plus a ramped penalty on the squared log-determinant of the forward map,
// which discourages volume distortion and keeps the learned map smooth.
struct NfTrainConfig {
  int epochs = 200;
  int batch = 100;
  double lambda_max = 1.0;   // final penalty weight
  double lambda_ramp = 0.3;  // fraction of total steps spent ramping up
  int reg_samples = 0;       // latents per step for the penalty; 0 = batch size
  AdamConfig opt;            // lr 1e-3, no weight decay by default

  void validate() const;
};

struct NfEpochStats {
  int epoch = 0;
  double nll = 0.0;     // mean negative log-likelihood over the epoch
  double l_j = 0.0;     // mean squared forward logdet over sampled latents
  double lambda = 0.0;  // penalty weight at the epoch's last step
};

struct NfTrainTrace {
  std::vector<NfEpochStats> epochs;
  void write_csv(const std::string& path) const;
};

// Penalty weight at a given step: lambda_max * min(1, step / ramp_steps)
// with ramp_steps = lambda_ramp * total_steps (weight is lambda_max from
// the start when the ramp is empty).
double lambda_at(long step, long total_steps, const NfTrainConfig& cfg);

// Mean NLL under the flow (no caches touched).
double nll_loss(const FlowStack& flow, const Mat& X);

// Same value via the training path; accumulates parameter gradients.
double nll_loss_grad(FlowStack& flow, const Mat& X);

// Mean squared forward logdet over the given latents (no caches touched).
double jac_reg_at(const FlowStack& flow, const Mat& Z);

// Same value via the training path; accumulates gradients of scale * value.
double jac_reg_grad(FlowStack& flow, const Mat& Z, double scale);

NfTrainTrace train_flow(FlowStack& flow, const Mat& X,
                        const NfTrainConfig& cfg, Rng& rng);

}  // namespace nfad
