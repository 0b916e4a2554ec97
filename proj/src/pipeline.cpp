#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "nfad/classifier.hpp"
#include "nfad/density_grid.hpp"
#include "nfad/format.hpp"
#include "nfad/metrics.hpp"
#include "nfad/model_io.hpp"
#include "nfad/nf_train.hpp"
#include "nfad/pipeline.hpp"
#include "nfad/tail.hpp"

namespace nfad {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_out(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  std::ofstream out(cfg.out + "/config_used.json");
  if (!out)
    throw std::runtime_error("cannot open for writing: " + cfg.out +
                             "/config_used.json");
  out << cfg.to_json().dump(2) << '\n';
}

LabeledDataset load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.kind == "moons") {
    Rng rng(cfg.seed, streams::data);
    return make_moons(cfg.dataset.n, cfg.dataset.noise, rng);
  }
  return ingest_csv(cfg.dataset.csv, cfg.dataset.label_column,
                    cfg.dataset.label_map);
}

void write_features_csv(const std::string& path, const Mat& X,
                        const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (long j = 0; j < X.cols(); ++j) {
    out << (names.empty() ? "x" + std::to_string(j)
                          : names[static_cast<std::size_t>(j)]);
    out << (j + 1 == X.cols() ? '\n' : ',');
  }
  for (long i = 0; i < X.rows(); ++i)
    for (long j = 0; j < X.cols(); ++j) {
      out << g17(X(i, j));
      out << (j + 1 == X.cols() ? '\n' : ',');
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct MetricsRow {
  std::string run_id;
  long n_anomalies = 0;
  std::string seed;  // text so aggregate rows can leave it blank
  double auc = 0.0;
};

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "run_id,n_anomalies,seed,auc\n";
  for (const auto& r : rows)
    out << r.run_id << ',' << r.n_anomalies << ',' << r.seed << ','
        << g17(r.auc) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Trains on the standardized training set and returns the held-out AUC.
// Xa_std may have zero rows (one-class); flow may be null (no surrogates).
struct CellOutcome {
  MlpClassifier clf;
  ClfTrainTrace trace;
};

CellOutcome run_cell(int dim, const Mat& Xn_std, const Mat& Xa_std,
                     const FlowStack* flow, const RunConfig& cfg,
                     std::uint64_t seed) {
  CellOutcome out{MlpClassifier(dim), {}};
  Rng init_rng(seed, streams::clf_init);
  out.clf.init_params(init_rng);
  ClfTrainConfig ccfg = cfg.clf;
  ccfg.tail_p = cfg.tail.p;
  if (flow == nullptr) ccfg.surrogates_per_batch = 0;
  Rng train_rng(seed, streams::clf_train);
  out.trace = train_classifier(out.clf, Xn_std, Xa_std, flow, ccfg, train_rng);
  return out;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  LabeledDataset full = load_dataset(cfg);
  Rng split_rng(cfg.seed, streams::split);
  SplitResult parts = split(full, cfg.dataset.train_fraction, split_rng);

  PreparedData out;
  out.test = std::move(parts.test);
  if (cfg.dataset.anomaly_count >= 0) {
    Rng sub_rng(cfg.seed, streams::subsample);
    out.train =
        subsample_anomalies(parts.train, cfg.dataset.anomaly_count, sub_rng);
  } else {
    out.train = std::move(parts.train);
  }
  require(out.train.count(Label::normal) > 0,
          "prepared data: no normal samples in the training split");
  out.scaler.fit(out.train.rows_with(Label::normal));
  return out;
}

void cmd_gen_data(const RunConfig& cfg) {
  ensure_out(cfg);
  LabeledDataset ds = load_dataset(cfg);
  write_dataset_csv(cfg.out + "/data.csv", ds);
}

void cmd_train_flow(const RunConfig& cfg) {
  ensure_out(cfg);
  PreparedData data = prepare_data(cfg);
  const int d = data.train.dim();
  Mat Xn = data.scaler.transform(data.train.rows_with(Label::normal));

  Rng init_rng(cfg.seed, streams::flow_init);
  FlowStack flow = build_flow(cfg.flow, d, init_rng);
  Rng train_rng(cfg.seed, streams::flow_train);
  NfTrainTrace trace = train_flow(flow, Xn, cfg.nf_train, train_rng);
  trace.write_csv(cfg.out + "/flow_trace.csv");
  save_flow(cfg.flow_model_path(), flow, data.scaler);
}

void cmd_sample_surrogates(const RunConfig& cfg) {
  ensure_out(cfg);
  FlowModel model = load_flow(cfg.flow_model_path());
  Rng rng(cfg.seed, streams::surrogates);
  Mat Z_std = gen_surrogates(model.flow, cfg.tail.count, cfg.tail.p, rng,
                             cfg.tail.parsed_method());
  write_features_csv(cfg.out + "/surrogates.csv",
                     model.scaler.inverse_transform(Z_std), {});
}

void cmd_train_clf(const RunConfig& cfg) {
  ensure_out(cfg);
  PreparedData data = prepare_data(cfg);
  const int d = data.train.dim();

  const bool use_flow = cfg.clf.surrogates_per_batch > 0;
  FlowModel model{FlowStack(1), {}};
  if (use_flow) {
    model = load_flow(cfg.flow_model_path());
    require(model.flow.dim() == d, "train-clf: flow dim does not match data");
  }
  // surrogates and data must share one standardized space, so the flow's
  // own standardizer wins when a flow is in play
  const Standardizer& scaler = use_flow ? model.scaler : data.scaler;
  Mat Xn = scaler.transform(data.train.rows_with(Label::normal));
  Mat Xa = scaler.transform(data.train.rows_with(Label::anomaly));

  CellOutcome cell = run_cell(d, Xn, Xa, use_flow ? &model.flow : nullptr,
                              cfg, cfg.seed);
  cell.trace.write_csv(cfg.out + "/clf_trace.csv");
  save_classifier(cfg.clf_model_path(), cell.clf, scaler);
}

void cmd_score(const RunConfig& cfg) {
  ensure_out(cfg);
  ClfModel model = load_classifier(cfg.clf_model_path());
  PreparedData data = prepare_data(cfg);
  require(model.clf.dim() == data.test.dim(),
          "score: classifier dim does not match data");
  Vec s = model.clf.score(model.scaler.transform(data.test.X));

  std::ofstream out(cfg.out + "/scores.csv");
  if (!out)
    throw std::runtime_error("cannot open for writing: " + cfg.out +
                             "/scores.csv");
  out << "id,score\n";
  for (long i = 0; i < s.size(); ++i) out << i << ',' << g17(s(i)) << '\n';
  if (!out) throw std::runtime_error("write failed: " + cfg.out + "/scores.csv");
}

void cmd_evaluate(const RunConfig& cfg) {
  ensure_out(cfg);
  ClfModel model = load_classifier(cfg.clf_model_path());
  PreparedData data = prepare_data(cfg);
  require(model.clf.dim() == data.test.dim(),
          "evaluate: classifier dim does not match data");
  Vec s = model.clf.score(model.scaler.transform(data.test.X));
  const double auc = roc_auc(s, data.test.y);

  MetricsRow row;
  row.n_anomalies = data.train.count(Label::anomaly);
  row.run_id = "c" + std::to_string(row.n_anomalies) + "_s" +
               std::to_string(cfg.seed);
  row.seed = std::to_string(cfg.seed);
  row.auc = auc;
  write_metrics_csv(cfg.out + "/metrics.csv", {row});
  std::cout << "auc=" << g17(auc) << '\n';
}

void cmd_density_grid(const RunConfig& cfg) {
  ensure_out(cfg);
  FlowModel model = load_flow(cfg.flow_model_path());
  DensityGrid grid = density_grid(model.flow, model.scaler, cfg.grid.spec,
                                  cfg.grid.parsed_side());
  write_grid_csv(cfg.out + "/grid.csv", grid);
  write_grid_pgm(cfg.out + "/grid.pgm", grid);
}

void cmd_experiment(const RunConfig& cfg) {
  require(cfg.seed_explicit,
          "experiment: an explicit seed is required in the config");
  ensure_out(cfg);
  fs::create_directories(cfg.out + "/rows");

  struct Cell {
    long count = 0;
    std::uint64_t seed = 0;
    double auc = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
  };
  std::vector<Cell> cells;

  for (std::uint64_t s : cfg.experiment.seeds) {
    RunConfig scfg = cfg;
    scfg.seed = s;
    const std::uint32_t fp = scfg.fingerprint();

    // resume: cells whose row files validate are not recomputed
    std::vector<long> todo;
    for (long count : cfg.experiment.anomaly_counts) {
      const std::string row_path = cfg.out + "/rows/row_c" +
                                   std::to_string(count) + "_s" +
                                   std::to_string(s) + ".json";
      bool done = false;
      if (fs::exists(row_path)) {
        try {
          std::ifstream in(row_path);
          json r;
          in >> r;
          if (r.at("fingerprint").get<std::uint32_t>() == fp &&
              r.at("count").get<long>() == count &&
              r.at("seed").get<std::uint64_t>() == s &&
              r.at("status").get<std::string>() == "ok") {
            Cell c;
            c.count = count;
            c.seed = s;
            c.auc = r.at("auc").get<double>();
            c.ok = true;
            cells.push_back(c);
            done = true;
          }
        } catch (const std::exception&) {
          // unreadable or stale row: recompute
        }
      }
      if (!done) todo.push_back(count);
    }
    if (todo.empty()) continue;

    // the flow only sees normal data, so one flow serves every count
    PreparedData data = prepare_data(scfg);
    const int d = data.train.dim();
    Mat Xn = data.scaler.transform(data.train.rows_with(Label::normal));
    Mat Xa_all = data.scaler.transform(data.train.rows_with(Label::anomaly));

    FlowStack flow(std::max(d, 1));
    std::string flow_error;
    try {
      Rng init_rng(s, streams::flow_init);
      flow = build_flow(scfg.flow, d, init_rng);
      Rng train_rng(s, streams::flow_train);
      train_flow(flow, Xn, scfg.nf_train, train_rng);
    } catch (const std::exception& e) {
      flow_error = e.what();
    }

    // one shuffle, nested prefixes: count 5 anomalies are a subset of 20's
    std::vector<long> aorder(static_cast<std::size_t>(Xa_all.rows()));
    std::iota(aorder.begin(), aorder.end(), 0);
    Rng sub_rng(s, streams::subsample);
    sub_rng.shuffle(aorder);

    for (long count : todo) {
      Cell c;
      c.count = count;
      c.seed = s;
      try {
        if (!flow_error.empty())
          throw std::runtime_error("flow training failed: " + flow_error);
        if (count > Xa_all.rows())
          throw std::runtime_error(
              "requested " + std::to_string(count) + " anomalies, only " +
              std::to_string(Xa_all.rows()) + " available in the training split");
        Mat Xa(count, d);
        for (long i = 0; i < count; ++i)
          Xa.row(i) = Xa_all.row(aorder[static_cast<std::size_t>(i)]);

        CellOutcome cell = run_cell(d, Xn, Xa, &flow, scfg, s);
        Vec sc = cell.clf.score(data.scaler.transform(data.test.X));
        c.auc = roc_auc(sc, data.test.y);
        c.ok = true;
      } catch (const std::exception& e) {
        c.error = e.what();
        std::cerr << "experiment cell count=" << count << " seed=" << s
                  << " failed: " << e.what() << '\n';
      }
      cells.push_back(c);

      json r;
      r["fingerprint"] = fp;
      r["count"] = c.count;
      r["seed"] = c.seed;
      r["status"] = c.ok ? "ok" : "failed";
      r["auc"] = c.auc;
      if (!c.ok) r["error"] = c.error;
      const std::string row_path = cfg.out + "/rows/row_c" +
                                   std::to_string(count) + "_s" +
                                   std::to_string(s) + ".json";
      std::ofstream out(row_path);
      out << r.dump(2) << '\n';
    }
  }

  std::vector<MetricsRow> rows;
  for (long count : cfg.experiment.anomaly_counts) {
    for (std::uint64_t s : cfg.experiment.seeds) {
      for (const Cell& c : cells)
        if (c.count == count && c.seed == s) {
          MetricsRow r;
          r.run_id = "c" + std::to_string(count) + "_s" + std::to_string(s);
          r.n_anomalies = count;
          r.seed = std::to_string(s);
          r.auc = c.auc;
          rows.push_back(r);
        }
    }
    std::vector<double> aucs;
    for (const Cell& c : cells)
      if (c.count == count && c.ok) aucs.push_back(c.auc);
    MetricsRow mean_row, std_row;
    mean_row.run_id = "mean_c" + std::to_string(count);
    std_row.run_id = "std_c" + std::to_string(count);
    mean_row.n_anomalies = std_row.n_anomalies = count;
    mean_row.seed = std_row.seed = "-1";
    if (aucs.empty()) {
      mean_row.auc = std_row.auc = std::numeric_limits<double>::quiet_NaN();
    } else {
      mean_row.auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) /
                     static_cast<double>(aucs.size());
      std_row.auc = sample_std(aucs, mean_row.auc);
    }
    rows.push_back(mean_row);
    rows.push_back(std_row);
  }
  write_metrics_csv(cfg.out + "/metrics.csv", rows);
}

}  // namespace nfad
