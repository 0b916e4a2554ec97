#pragma once

// Shared trained-model fixtures. Training a small moons flow takes about a
// second, so suites that only need "some reasonable trained flow" reuse one
// per (seed, lambda) instead of retraining in every test case.

#include <map>
#include <memory>
#include <tuple>

#include "nfad/dataset.hpp"
#include "nfad/flows.hpp"
#include "nfad/nf_train.hpp"
#include "nfad/pipeline.hpp"
#include "nfad/rng.hpp"

namespace fixtures {

struct TrainedMoons {
  nfad::Standardizer scaler;
  nfad::Mat Xn;    // standardized training normals
  nfad::Mat Xtn;   // standardized held-out normals
  nfad::Mat Xta;   // standardized held-out anomalies
  std::shared_ptr<nfad::FlowStack> flow;
  double final_nll = 0.0;
  double final_lj = 0.0;
};

// n-sample moons, 70/30 split, flow trained on the standardized training
// normals with the library's stream conventions. Cached per argument tuple.
inline const TrainedMoons& trained_moons(int seed, double lambda_max,
                                         int epochs, int n = 600) {
  using Key = std::tuple<int, long, int, int>;
  static std::map<Key, TrainedMoons> cache;
  Key key{seed, std::lround(lambda_max * 1000), epochs, n};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  TrainedMoons fx;
  nfad::Rng data_rng(static_cast<std::uint64_t>(seed), nfad::streams::data);
  nfad::LabeledDataset ds = nfad::make_moons(n, 0.1, data_rng);
  nfad::Rng split_rng(static_cast<std::uint64_t>(seed), nfad::streams::split);
  nfad::SplitResult sp = nfad::split(ds, 0.7, split_rng);
  fx.scaler.fit(sp.train.rows_with(nfad::Label::normal));
  fx.Xn = fx.scaler.transform(sp.train.rows_with(nfad::Label::normal));
  fx.Xtn = fx.scaler.transform(sp.test.rows_with(nfad::Label::normal));
  fx.Xta = fx.scaler.transform(sp.test.rows_with(nfad::Label::anomaly));

  nfad::Rng init_rng(static_cast<std::uint64_t>(seed),
                     nfad::streams::flow_init);
  fx.flow = std::make_shared<nfad::FlowStack>(
      nfad::build_flow(nfad::FlowArch{}, 2, init_rng));
  nfad::NfTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lambda_max = lambda_max;
  nfad::Rng train_rng(static_cast<std::uint64_t>(seed),
                      nfad::streams::flow_train);
  nfad::NfTrainTrace trace = nfad::train_flow(*fx.flow, fx.Xn, cfg, train_rng);
  fx.final_nll = trace.epochs.back().nll;
  fx.final_lj = trace.epochs.back().l_j;
  return cache.emplace(key, std::move(fx)).first->second;
}

}  // namespace fixtures
