#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nfad/classifier.hpp"
#include "nfad/dataset.hpp"
#include "nfad/density_grid.hpp"
#include "nfad/flows.hpp"
#include "nfad/nf_train.hpp"
#include "nfad/tail.hpp"

namespace nfad {

struct DatasetConfig {
  std::string kind = "moons";  // "moons" | "csv"
  int n = 2000;
  double noise = 0.1;
  std::string csv;             // feature file when kind = "csv"
  std::string label_column = "label";
  std::map<std::string, Label> label_map = default_label_map();
  double train_fraction = 0.7;
  long anomaly_count = -1;     // -1 keeps all training anomalies
};

struct TailConfig {
  double p = 0.05;
  std::string method = "auto";  // "auto" | "rejection" | "radial"
  int count = 1000;             // draws for the sample-surrogates command

  TailMethod parsed_method() const;
};

struct GridConfig {
  GridSpec spec;
  std::string side = "target";  // "target" | "base"

  GridSide parsed_side() const;
};

struct ExperimentConfig {
  std::vector<long> anomaly_counts = {0, 5, 20, 100};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

// One structured config file drives every command; flags override fields.
// Outputs land in `out` under fixed names; flow_model / clf_model default
// to the paths train-flow / train-clf write.
struct RunConfig {
  std::uint64_t seed = 1;
  bool seed_explicit = false;  // experiment runs insist on an explicit seed
  std::string out = "run_out";
  DatasetConfig dataset;
  FlowArch flow;
  NfTrainConfig nf_train;
  TailConfig tail;
  ClfTrainConfig clf;
  GridConfig grid;
  ExperimentConfig experiment;
  std::string flow_model;  // empty = <out>/flow.nfad
  std::string clf_model;   // empty = <out>/clf.nfad

  std::string flow_model_path() const;
  std::string clf_model_path() const;

  // Structural parse (types, unknown keys); appends problems to errors.
  static RunConfig from_json(const nlohmann::json& j,
                             std::vector<std::string>& errors);
  // Parse + range validation; throws one error listing every violation.
  static RunConfig from_file(const std::string& path);

  // Value-range checks; appends one entry per violated key.
  void check(std::vector<std::string>& errors) const;
  void check_or_throw() const;

  // Fully expanded snapshot with defaults filled in, stable key order.
  nlohmann::json to_json() const;
  // Hash of the snapshot minus output locations and the experiment block;
  // experiment rows use it to detect stale results on resume.
  std::uint32_t fingerprint() const;
};

}  // namespace nfad
