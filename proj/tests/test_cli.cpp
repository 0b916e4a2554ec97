#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "nfad/model_io.hpp"
#include "nfad/special.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using testutil::run_cli;

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv parse_csv(const fs::path& path) {
  Csv out;
  auto lines = testutil::lines_of(testutil::slurp(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : lines[i]) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(cur);
    if (i == 0)
      out.header = fields;
    else
      out.rows.push_back(fields);
  }
  return out;
}

double cell_auc(const Csv& csv, const std::string& run_id) {
  for (const auto& r : csv.rows)
    if (r.at(0) == run_id) return std::stod(r.at(3));
  FAIL("missing metrics row " << run_id);
  return 0.0;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("a subcommand is required") {
  auto dir = testutil::temp_dir("cli_nosub");
  auto r = run_cli(testutil::cli_path(), "", dir);
  CHECK(r.exit_code != 0);
}

TEST_CASE("value violations are reported together on one line") {
  auto dir = testutil::temp_dir("cli_badcfg");
  testutil::spit(dir / "bad.json", R"({
    "nf_train": {"epochs": 0},
    "tail": {"p": 0.0},
    "clf": {"batch": 0}
  })");
  auto r = run_cli(testutil::cli_path(),
                   "train-flow --config " + (dir / "bad.json").string(), dir);
  CHECK(r.exit_code == 1);
  auto err_lines = testutil::lines_of(r.err);
  REQUIRE(err_lines.size() == 1);
  const std::string& line = err_lines[0];
  CHECK(line.find("error:") == 0);
  CHECK(line.find("invalid config (3 problems)") != std::string::npos);
  CHECK(line.find("nf_train.epochs") != std::string::npos);
  CHECK(line.find("tail.p") != std::string::npos);
  CHECK(line.find("clf.batch") != std::string::npos);
}

TEST_CASE("unknown keys are caught before value checks") {
  auto dir = testutil::temp_dir("cli_typocfg");
  testutil::spit(dir / "typo.json", R"({
    "typo_key": 1,
    "nf_train": {"epochs": 0}
  })");
  auto r = run_cli(testutil::cli_path(),
                   "train-flow --config " + (dir / "typo.json").string(), dir);
  CHECK(r.exit_code == 1);
  auto err_lines = testutil::lines_of(r.err);
  REQUIRE(err_lines.size() == 1);
  CHECK(err_lines[0].find("typo_key") != std::string::npos);
}

TEST_CASE("unreadable and malformed config files fail cleanly") {
  auto dir = testutil::temp_dir("cli_nocfg");
  auto r = run_cli(testutil::cli_path(), "gen-data --config /nonexistent.json",
                   dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  testutil::spit(dir / "junk.json", "{ not json");
  r = run_cli(testutil::cli_path(),
              "gen-data --config " + (dir / "junk.json").string(), dir);
  CHECK(r.exit_code == 1);
}

TEST_CASE("full pipeline smoke run at a small budget") {
  auto dir = testutil::temp_dir("cli_smoke");
  fs::path out = dir / "run";
  testutil::spit(dir / "cfg.json", R"({
    "seed": 5,
    "out": ")" + out.string() + R"(",
    "dataset": {"n": 300},
    "nf_train": {"epochs": 4},
    "clf": {"epochs": 3},
    "tail": {"count": 200},
    "grid": {"nx": 40, "ny": 40}
  })");
  std::string cfg = " --config " + (dir / "cfg.json").string();

  for (const char* cmd : {"gen-data", "train-flow", "sample-surrogates",
                          "train-clf", "score", "evaluate", "density-grid"}) {
    auto r = run_cli(testutil::cli_path(), std::string(cmd) + cfg, dir);
    REQUIRE_MESSAGE(r.exit_code == 0, cmd << " failed: " << r.err);
  }

  for (const char* name :
       {"data.csv", "flow.nfad", "flow_trace.csv", "surrogates.csv",
        "clf.nfad", "clf_trace.csv", "scores.csv", "metrics.csv", "grid.csv",
        "grid.pgm", "config_used.json"})
    CHECK_MESSAGE(fs::exists(out / name), name << " missing");

  // data: 300 points + header; scores: 90 held-out rows + header
  CHECK(testutil::lines_of(testutil::slurp(out / "data.csv")).size() == 301);
  Csv scores = parse_csv(out / "scores.csv");
  CHECK(scores.header == std::vector<std::string>{"id", "score"});
  CHECK(scores.rows.size() == 90);
  for (const auto& row : scores.rows) {
    double s = std::stod(row.at(1));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }

  Csv metrics = parse_csv(out / "metrics.csv");
  CHECK(metrics.header ==
        std::vector<std::string>{"run_id", "n_anomalies", "seed", "auc"});
  REQUIRE(metrics.rows.size() == 1);
  double auc = std::stod(metrics.rows[0].at(3));
  CHECK(auc >= 0.0);
  CHECK(auc <= 1.0);

  CHECK(testutil::lines_of(testutil::slurp(out / "grid.csv")).size() ==
        40 * 40 + 1);

  // rerunning a stage reproduces its outputs byte for byte
  std::string flow_bytes = testutil::slurp(out / "flow.nfad");
  std::string metrics_bytes = testutil::slurp(out / "metrics.csv");
  std::string grid_bytes = testutil::slurp(out / "grid.csv");
  REQUIRE(run_cli(testutil::cli_path(), "train-flow" + cfg, dir).exit_code ==
          0);
  REQUIRE(run_cli(testutil::cli_path(), "evaluate" + cfg, dir).exit_code == 0);
  REQUIRE(run_cli(testutil::cli_path(), "density-grid" + cfg, dir).exit_code ==
          0);
  CHECK(testutil::slurp(out / "flow.nfad") == flow_bytes);
  CHECK(testutil::slurp(out / "metrics.csv") == metrics_bytes);
  CHECK(testutil::slurp(out / "grid.csv") == grid_bytes);
}

TEST_CASE("seed flag feeds the pipeline") {
  auto dir = testutil::temp_dir("cli_seed");
  fs::path a = dir / "a", b = dir / "b", c = dir / "c";
  std::string base = "gen-data --dataset moons";
  REQUIRE(run_cli(testutil::cli_path(),
                  base + " --seed 5 --out " + a.string(), dir)
              .exit_code == 0);
  REQUIRE(run_cli(testutil::cli_path(),
                  base + " --seed 6 --out " + b.string(), dir)
              .exit_code == 0);
  REQUIRE(run_cli(testutil::cli_path(),
                  base + " --seed 5 --out " + c.string(), dir)
              .exit_code == 0);
  CHECK(testutil::slurp(a / "data.csv") != testutil::slurp(b / "data.csv"));
  CHECK(testutil::slurp(a / "data.csv") == testutil::slurp(c / "data.csv"));
}

TEST_CASE("surrogates of an identity flow respect the latent shell") {
  auto dir = testutil::temp_dir("cli_idsurr");
  fs::path out = dir / "run";
  testutil::spit(dir / "cfg.json", R"({
    "seed": 3,
    "out": ")" + out.string() + R"(",
    "dataset": {"n": 200},
    "flow": {"layers": 0},
    "nf_train": {"epochs": 1},
    "tail": {"p": 0.05, "count": 500}
  })");
  std::string cfg = " --config " + (dir / "cfg.json").string();
  REQUIRE(run_cli(testutil::cli_path(), "train-flow" + cfg, dir).exit_code ==
          0);
  REQUIRE(run_cli(testutil::cli_path(), "sample-surrogates" + cfg, dir)
              .exit_code == 0);

  // surrogate rows are raw-coordinate; undo the stored standardizer and the
  // latents must all sit beyond the tail threshold
  nfad::FlowModel model = nfad::load_flow((out / "flow.nfad").string());
  Csv surr = parse_csv(out / "surrogates.csv");
  REQUIRE(surr.rows.size() == 500);
  double q = nfad::chi2_tail_quantile(0.05, 2);
  for (const auto& row : surr.rows) {
    nfad::Mat x(1, 2);
    x << std::stod(row.at(0)), std::stod(row.at(1));
    CHECK(model.scaler.transform(x).row(0).squaredNorm() >= q - 1e-9);
  }
}

TEST_CASE("experiment grid writes cells, aggregates and resumes") {
  auto dir = testutil::temp_dir("cli_exp");
  fs::path out = dir / "run";
  testutil::spit(dir / "cfg.json", R"({
    "seed": 1,
    "out": ")" + out.string() + R"(",
    "dataset": {"n": 200},
    "nf_train": {"epochs": 3},
    "clf": {"epochs": 2},
    "experiment": {"anomaly_counts": [0, 2], "seeds": [1, 2]}
  })");
  std::string cfg = " --config " + (dir / "cfg.json").string();
  auto r = run_cli(testutil::cli_path(), "experiment" + cfg, dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);

  Csv metrics = parse_csv(out / "metrics.csv");
  REQUIRE(metrics.rows.size() == 8);  // 4 cells + mean/std per count
  double c0s1 = cell_auc(metrics, "c0_s1");
  double c0s2 = cell_auc(metrics, "c0_s2");
  double mean_c0 = cell_auc(metrics, "mean_c0");
  CHECK(mean_c0 == doctest::Approx((c0s1 + c0s2) / 2.0).epsilon(1e-12));
  CHECK(cell_auc(metrics, "std_c0") >= 0.0);

  // cached rows win over retraining: plant a fake auc and rerun
  fs::path row = out / "rows" / "row_c0_s1.json";
  REQUIRE(fs::exists(row));
  std::string body = testutil::slurp(row);
  auto pos = body.find("\"auc\"");
  REQUIRE(pos != std::string::npos);
  auto colon = body.find(':', pos);
  auto comma = body.find_first_of(",}", colon);
  std::string planted = body.substr(0, colon + 1) + "0.123456" +
                        body.substr(comma);
  testutil::spit(row, planted);
  REQUIRE(run_cli(testutil::cli_path(), "experiment" + cfg, dir).exit_code ==
          0);
  metrics = parse_csv(out / "metrics.csv");
  CHECK(cell_auc(metrics, "c0_s1") == doctest::Approx(0.123456));

  // removing the row forces that one cell to retrain
  fs::remove(row);
  REQUIRE(run_cli(testutil::cli_path(), "experiment" + cfg, dir).exit_code ==
          0);
  metrics = parse_csv(out / "metrics.csv");
  CHECK(cell_auc(metrics, "c0_s1") == doctest::Approx(c0s1).epsilon(1e-15));
}

TEST_CASE("experiment insists on an explicit seed") {
  auto dir = testutil::temp_dir("cli_exp_seed");
  testutil::spit(dir / "cfg.json", R"({
    "out": ")" + (dir / "run").string() + R"(",
    "dataset": {"n": 200}
  })");
  auto r = run_cli(testutil::cli_path(),
                   "experiment --config " + (dir / "cfg.json").string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("downstream stages fail loudly without their inputs") {
  auto dir = testutil::temp_dir("cli_missing");
  fs::path out = dir / "run";
  std::string args = " --seed 2 --out " + out.string();
  auto r = run_cli(testutil::cli_path(), "score" + args, dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);
  r = run_cli(testutil::cli_path(), "sample-surrogates" + args, dir);
  CHECK(r.exit_code == 1);
}

TEST_SUITE_END();
