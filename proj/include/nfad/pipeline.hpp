#pragma once

#include <cstdint>
#include <string>

#include "nfad/dataset.hpp"
#include "nfad/run_config.hpp"

namespace nfad {

// Every stage derives its randomness from (config seed, fixed stream id),
// so commands are pure functions of config + input files and stages stay
// reproducible independently of one another.
namespace streams {
inline constexpr std::uint64_t data = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t flow_init = 3;
inline constexpr std::uint64_t flow_train = 4;
inline constexpr std::uint64_t subsample = 5;
inline constexpr std::uint64_t clf_init = 6;
inline constexpr std::uint64_t clf_train = 7;
inline constexpr std::uint64_t eval = 8;
inline constexpr std::uint64_t surrogates = 9;
}  // namespace streams

struct PreparedData {
  LabeledDataset train, test;  // raw coordinates
  Standardizer scaler;         // fit on the raw training normals
};

// Generate or ingest, split, optionally subsample training anomalies,
// fit the standardizer.
PreparedData prepare_data(const RunConfig& cfg);

// Command bodies; errors surface as exceptions. Output files land under
// cfg.out with fixed names (data.csv, flow.nfad, flow_trace.csv,
// surrogates.csv, clf.nfad, clf_trace.csv, scores.csv, metrics.csv,
// grid.csv, grid.pgm, config_used.json, rows/).
void cmd_gen_data(const RunConfig& cfg);
void cmd_train_flow(const RunConfig& cfg);
void cmd_sample_surrogates(const RunConfig& cfg);
void cmd_train_clf(const RunConfig& cfg);
void cmd_score(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_density_grid(const RunConfig& cfg);
void cmd_experiment(const RunConfig& cfg);

}  // namespace nfad
