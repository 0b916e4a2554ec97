#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nfad/dataset.hpp"
#include "nfad/density_grid.hpp"
#include "nfad/flows.hpp"
#include "nfad/metrics.hpp"
#include "nfad/rng.hpp"
#include "nfad/special.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace nfad;

TEST_SUITE_BEGIN("dataeval");

TEST_CASE("moon parametrization hits the textbook points") {
  const double pi = std::acos(-1.0);
  CHECK(moon_a_point(0.0)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moon_a_point(0.0)[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(moon_a_point(pi / 2)[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(moon_a_point(pi / 2)[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(moon_b_point(0.0)[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(moon_b_point(0.0)[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(moon_b_point(pi / 2)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(moon_b_point(pi / 2)[1] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("moons splits counts ceil/floor and stays on the arcs") {
  Rng rng(1);
  LabeledDataset ds = make_moons(7, 0.0, rng);
  CHECK(ds.n() == 7);
  CHECK(ds.count(Label::normal) == 4);
  CHECK(ds.count(Label::anomaly) == 3);
  for (long i = 0; i < ds.n(); ++i) {
    double x = ds.X(i, 0), y = ds.X(i, 1);
    if (ds.y[static_cast<std::size_t>(i)] == Label::normal) {
      CHECK(x * x + y * y == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y >= -1e-12);
    } else {
      CHECK((x - 1.0) * (x - 1.0) + (y - 0.5) * (y - 0.5) ==
            doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y <= 0.5 + 1e-12);
    }
  }
}

TEST_CASE("moons noise stays near the arcs and reproduces per seed") {
  Rng a(2), b(2);
  LabeledDataset d1 = make_moons(100, 0.1, a);
  LabeledDataset d2 = make_moons(100, 0.1, b);
  CHECK((d1.X - d2.X).cwiseAbs().maxCoeff() == 0.0);
  for (long i = 0; i < d1.n(); ++i) {
    double x = d1.X(i, 0), y = d1.X(i, 1);
    double r = d1.y[static_cast<std::size_t>(i)] == Label::normal
                   ? std::abs(std::sqrt(x * x + y * y) - 1.0)
                   : std::abs(std::hypot(x - 1.0, y - 0.5) - 1.0);
    CHECK(r < 0.8);  // 8 sigma
  }
}

TEST_CASE("blob centers where asked") {
  Rng rng(3);
  Vec c(2);
  c << -1.5, 2.0;
  LabeledDataset blob = make_blob(2000, c, 0.5, Label::anomaly, rng);
  CHECK(blob.count(Label::anomaly) == 2000);
  CHECK(blob.count(Label::normal) == 0);
  for (int j = 0; j < 2; ++j) {
    double se = 0.5 / std::sqrt(2000.0);
    CHECK(std::abs(blob.X.col(j).mean() - c[j]) < 5.0 * se);
  }
}

TEST_CASE("concat stacks rows and rejects dim mismatches") {
  Rng rng(4);
  LabeledDataset a = make_moons(10, 0.1, rng);
  Vec c(2);
  c << 0.0, 0.0;
  LabeledDataset b = make_blob(5, c, 1.0, Label::anomaly, rng);
  LabeledDataset ab = concat_datasets(a, b);
  CHECK(ab.n() == 15);
  CHECK((ab.X.topRows(10) - a.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ab.y[14] == Label::anomaly);
  LabeledDataset wide;
  wide.X = Mat::Zero(2, 3);
  wide.y = {Label::normal, Label::normal};
  CHECK_THROWS(concat_datasets(a, wide));
}

TEST_CASE("csv round trip preserves every bit") {
  auto dir = testutil::temp_dir("dataeval_csv");
  Rng rng(5);
  LabeledDataset ds = make_moons(50, 0.1, rng);
  std::string path = (dir / "round.csv").string();
  write_dataset_csv(path, ds);
  LabeledDataset back = ingest_csv(path, "label", default_label_map());
  REQUIRE(back.n() == ds.n());
  CHECK((back.X - ds.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.y == ds.y);
  CHECK(back.feature_names == std::vector<std::string>{"x0", "x1"});
}

TEST_CASE("ingest errors name the offending spot") {
  auto dir = testutil::temp_dir("dataeval_bad");
  auto expect_throw_with = [&](const std::string& body,
                               const std::string& needle) {
    std::string path = (dir / "bad.csv").string();
    testutil::spit(path, body);
    try {
      ingest_csv(path, "label", default_label_map());
      FAIL("expected a parse error for: " << needle);
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_throw_with("x0,x1,label\n1,2,normal\n1,abc,anomaly\n", "x1");
  expect_throw_with("x0,x1,label\n1,2,normal\n1,abc,anomaly\n", "row 2");
  expect_throw_with("x0,x1,label\n1,2,weird\n", "weird");
  expect_throw_with("x0,x1,label\n1,2\n", "row 1");
  expect_throw_with("x0,x1,nolabel\n1,2,normal\n", "label");
  expect_throw_with("x0,x1,label\n", "no data");
  std::string empty_path = (dir / "empty.csv").string();
  testutil::spit(empty_path, "");
  CHECK_THROWS(ingest_csv(empty_path, "label", default_label_map()));
}

TEST_CASE("ingest honors a custom label vocabulary") {
  auto dir = testutil::temp_dir("dataeval_map");
  std::string path = (dir / "map.csv").string();
  testutil::spit(path, "a,b,verdict\n0,1,ok\n2,3,bad\n4,5,ok\n");
  std::map<std::string, Label> map{{"ok", Label::normal},
                                   {"bad", Label::anomaly}};
  LabeledDataset ds = ingest_csv(path, "verdict", map);
  CHECK(ds.n() == 3);
  CHECK(ds.count(Label::normal) == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.X(1, 1) == 3.0);
}

TEST_CASE("standardizer uses population moments") {
  Mat X(4, 2);
  X << 1.0, 10.0, 3.0, 10.0, 5.0, 14.0, 7.0, 18.0;
  Standardizer sc;
  sc.fit(X);
  CHECK(sc.mean[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(sc.mean[1] == doctest::Approx(13.0).epsilon(1e-14));
  CHECK(sc.std[0] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  CHECK(sc.std[1] == doctest::Approx(std::sqrt(11.0)).epsilon(1e-14));
  Mat T = sc.transform(X);
  CHECK(std::abs(T.col(0).mean()) < 1e-14);
  CHECK(std::abs(T.col(0).squaredNorm() / 4.0 - 1.0) < 1e-12);
  CHECK((sc.inverse_transform(T) - X).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardizer refuses near-constant features") {
  Mat X(3, 2);
  X << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
  Standardizer sc;
  try {
    sc.fit(X);
    FAIL("expected a constant-feature error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("split sizes, disjointness and determinism") {
  Rng rng(6);
  LabeledDataset ds = make_moons(10, 0.1, rng);
  Rng s1(6, 1), s2(6, 1);
  SplitResult a = split(ds, 0.7, s1);
  SplitResult b = split(ds, 0.7, s2);
  CHECK(a.train.n() == 7);
  CHECK(a.test.n() == 3);
  CHECK((a.train.X - b.train.X).cwiseAbs().maxCoeff() == 0.0);
  // every original row appears exactly once across the two halves
  std::vector<std::pair<double, double>> rows;
  for (long i = 0; i < a.train.n(); ++i)
    rows.emplace_back(a.train.X(i, 0), a.train.X(i, 1));
  for (long i = 0; i < a.test.n(); ++i)
    rows.emplace_back(a.test.X(i, 0), a.test.X(i, 1));
  std::vector<std::pair<double, double>> orig;
  for (long i = 0; i < ds.n(); ++i) orig.emplace_back(ds.X(i, 0), ds.X(i, 1));
  std::sort(rows.begin(), rows.end());
  std::sort(orig.begin(), orig.end());
  CHECK(rows == orig);
  CHECK_THROWS(split(ds, -0.1, s1));
  CHECK_THROWS(split(ds, 1.5, s1));
}

TEST_CASE("anomaly subsampling keeps order and counts") {
  Rng rng(7);
  LabeledDataset ds = make_moons(20, 0.1, rng);  // 10 normal then 10 anomaly
  Rng sub(7, 1);
  LabeledDataset k3 = subsample_anomalies(ds, 3, sub);
  CHECK(k3.count(Label::normal) == 10);
  CHECK(k3.count(Label::anomaly) == 3);
  // normals keep their original order
  CHECK((k3.X.topRows(10) - ds.X.topRows(10)).cwiseAbs().maxCoeff() == 0.0);
  // chosen anomalies appear in original relative order
  std::vector<long> positions;
  for (long i = 10; i < k3.n(); ++i) {
    for (long j = 10; j < ds.n(); ++j)
      if ((k3.X.row(i) - ds.X.row(j)).cwiseAbs().maxCoeff() == 0.0)
        positions.push_back(j);
  }
  REQUIRE(positions.size() == 3);
  CHECK(std::is_sorted(positions.begin(), positions.end()));
  Rng sub2(7, 2);
  LabeledDataset k0 = subsample_anomalies(ds, 0, sub2);
  CHECK(k0.n() == 10);
  try {
    subsample_anomalies(ds, 11, sub2);
    FAIL("expected a count error");
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("11") != std::string::npos);
    CHECK(msg.find("10") != std::string::npos);
  }
}

TEST_CASE("roc auc equals the pair-counting oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    int nn = 1 + rng.uniform_int(20), na = 1 + rng.uniform_int(20);
    Vec scores(nn + na);
    std::vector<Label> labels;
    for (int i = 0; i < nn + na; ++i) {
      // small integer alphabet so ties actually happen
      scores[i] = rng.uniform_int(6);
      labels.push_back(i < nn ? Label::normal : Label::anomaly);
    }
    CHECK(roc_auc(scores, labels) == oracle::pair_auc(scores, labels));
  }
}

TEST_CASE("roc auc endpoints and edge cases") {
  Vec s(4);
  s << 4.0, 3.0, 2.0, 1.0;
  std::vector<Label> lab{Label::normal, Label::normal, Label::anomaly,
                         Label::anomaly};
  CHECK(roc_auc(s, lab) == 1.0);
  Vec inv(4);
  inv << 1.0, 2.0, 3.0, 4.0;
  CHECK(roc_auc(inv, lab) == 0.0);
  Vec tied = Vec::Constant(4, 7.0);
  CHECK(roc_auc(tied, lab) == 0.5);
  std::vector<Label> one_class(4, Label::normal);
  CHECK_THROWS(roc_auc(s, one_class));
}

TEST_CASE("grid spec validation and cell geometry") {
  GridSpec spec;
  CHECK(spec.dx() == doctest::Approx(0.08).epsilon(1e-14));
  GridSpec bad = spec;
  bad.nx = 0;
  CHECK_THROWS(bad.validate());
  bad = spec;
  bad.x1 = bad.x0;
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(spec.validate());
}

namespace {

Standardizer unit_scaler() {
  Mat X(2, 2);
  X << -1.0, -1.0, 1.0, 1.0;
  Standardizer sc;
  sc.fit(X);  // mean 0, population std 1 per feature
  return sc;
}

}  // namespace

TEST_CASE("density grid of the identity flow is the base density") {
  FlowStack id(2);
  Standardizer sc = unit_scaler();
  GridSpec spec;
  spec.nx = 50;
  spec.ny = 40;
  DensityGrid grid = density_grid(id, sc, spec, GridSide::target);
  REQUIRE(grid.logp.rows() == 40);
  REQUIRE(grid.logp.cols() == 50);
  for (int iy : {0, 17, 39})
    for (int ix : {0, 23, 49}) {
      Vec z(2);
      z << spec.x0 + (ix + 0.5) * spec.dx(), spec.y0 + (iy + 0.5) * spec.dy();
      CHECK(grid.logp(iy, ix) ==
            doctest::Approx(std_normal_logpdf(z)).epsilon(1e-12));
    }
  DensityGrid base = density_grid(id, sc, spec, GridSide::base);
  CHECK((base.logp - grid.logp).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("density grid folds the standardizer into raw coordinates") {
  FlowStack id(2);
  Mat X(2, 2);  // mean (2, 0), population std (2, 1)
  X << 0.0, -1.0, 4.0, 1.0;
  Standardizer sc;
  sc.fit(X);
  GridSpec spec;
  spec.nx = 20;
  spec.ny = 20;
  DensityGrid grid = density_grid(id, sc, spec, GridSide::target);
  Vec z(2);
  double cx = spec.x0 + 10.5 * spec.dx(), cy = spec.y0 + 4.5 * spec.dy();
  z << (cx - 2.0) / 2.0, cy;
  CHECK(grid.logp(4, 10) ==
        doctest::Approx(std_normal_logpdf(z) - std::log(2.0)).epsilon(1e-12));
  // raw-space mass still integrates to one
  double mass = grid.logp.array().exp().sum() * spec.dx() * spec.dy();
  CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("highest-density cells of the standard normal hug the origin") {
  FlowStack id(2);
  Standardizer sc = unit_scaler();
  GridSpec spec;  // 200 x 200 over [-8, 8]^2
  DensityGrid grid = density_grid(id, sc, spec, GridSide::target);
  std::vector<std::pair<double, std::pair<int, int>>> cells;
  for (int iy = 0; iy < spec.ny; ++iy)
    for (int ix = 0; ix < spec.nx; ++ix)
      cells.push_back({grid.logp(iy, ix), {ix, iy}});
  std::sort(cells.begin(), cells.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < 400; ++i) {  // top 1%
    double x = spec.x0 + (cells[i].second.first + 0.5) * spec.dx();
    double y = spec.y0 + (cells[i].second.second + 0.5) * spec.dy();
    CHECK(std::abs(x) < 1.0);
    CHECK(std::abs(y) < 1.0);
  }
}

TEST_CASE("grid csv layout and values") {
  auto dir = testutil::temp_dir("dataeval_grid");
  DensityGrid grid;
  grid.spec = GridSpec{0.0, 1.0, 10.0, 12.0, 2, 2};
  grid.logp = Mat(2, 2);
  grid.logp << -1.0, -2.0, -3.0, -4.0;
  std::string path = (dir / "grid.csv").string();
  write_grid_csv(path, grid);
  auto lines = testutil::lines_of(testutil::slurp(path));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "x,y,logp");
  CHECK(lines[1] == "0.25,10.5,-1");  // lowest y band first
  CHECK(lines[2] == "0.75,10.5,-2");
  CHECK(lines[3] == "0.25,11.5,-3");
  CHECK(lines[4] == "0.75,11.5,-4");
}

TEST_CASE("grid pgm mapping, orientation and clamping") {
  auto dir = testutil::temp_dir("dataeval_pgm");
  DensityGrid grid;
  grid.spec = GridSpec{0.0, 1.0, 0.0, 1.0, 2, 2};
  grid.logp = Mat(2, 2);
  grid.logp << 0.0, -20.0, -80.0, -40.0;  // row 0 = low y
  std::string path = (dir / "grid.pgm").string();
  write_grid_pgm(path, grid);
  auto lines = testutil::lines_of(testutil::slurp(path));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "P2");
  CHECK(lines[1] == "2 2");
  CHECK(lines[2] == "255");
  CHECK(lines[3] == "0 0");      // high-y band first: clamped black
  CHECK(lines[4] == "255 128");  // vmax white, half-window mid-gray
  grid.logp.setConstant(-5.0);
  write_grid_pgm(path, grid);
  lines = testutil::lines_of(testutil::slurp(path));
  CHECK(lines[3] == "255 255");  // flat grid renders white
  CHECK(lines[4] == "255 255");
}

TEST_SUITE_END();
