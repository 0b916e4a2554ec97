#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nfad/dataset.hpp"
#include "nfad/format.hpp"

namespace nfad {

long LabeledDataset::count(Label which) const {
  return static_cast<long>(std::count(y.begin(), y.end(), which));
}

Mat LabeledDataset::rows_with(Label which) const {
  Mat out(count(which), X.cols());
  long r = 0;
  for (long i = 0; i < n(); ++i)
    if (y[static_cast<std::size_t>(i)] == which) out.row(r++) = X.row(i);
  return out;
}

Vec moon_a_point(double t) {
  Vec p(2);
  p << std::cos(t), std::sin(t);
  return p;
}

Vec moon_b_point(double t) {
  Vec p(2);
  p << 1.0 - std::cos(t), 0.5 - std::sin(t);
  return p;
}

LabeledDataset make_moons(int n, double noise_sigma, Rng& rng) {
  require(n >= 2, "make_moons: need at least 2 points");
  require(noise_sigma >= 0.0, "make_moons: noise must be >= 0");
  const double pi = 3.14159265358979323846;
  const int na = (n + 1) / 2;  // moon A, normal
  LabeledDataset ds;
  ds.X.resize(n, 2);
  ds.y.reserve(static_cast<std::size_t>(n));
  ds.feature_names = {"x0", "x1"};
  for (int i = 0; i < n; ++i) {
    const bool on_a = i < na;
    Vec p = on_a ? moon_a_point(pi * rng.uniform())
                 : moon_b_point(pi * rng.uniform());
    p(0) += noise_sigma * rng.normal();
    p(1) += noise_sigma * rng.normal();
    ds.X.row(i) = p.transpose();
    ds.y.push_back(on_a ? Label::normal : Label::anomaly);
  }
  return ds;
}

LabeledDataset make_blob(int n, const Vec& center, double sigma, Label label,
                         Rng& rng) {
  require(n >= 1, "make_blob: need at least 1 point");
  require(sigma >= 0.0, "make_blob: sigma must be >= 0");
  require(center.size() >= 1, "make_blob: empty center");
  LabeledDataset ds;
  const int d = static_cast<int>(center.size());
  ds.X.resize(n, d);
  ds.y.assign(static_cast<std::size_t>(n), label);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      ds.X(i, j) = center(j) + sigma * rng.normal();
  return ds;
}

LabeledDataset concat_datasets(const LabeledDataset& a,
                               const LabeledDataset& b) {
  require(a.dim() == b.dim(), "concat: dim mismatch");
  LabeledDataset out;
  out.X.resize(a.n() + b.n(), a.dim());
  out.X.topRows(a.n()) = a.X;
  out.X.bottomRows(b.n()) = b.X;
  out.y = a.y;
  out.y.insert(out.y.end(), b.y.begin(), b.y.end());
  out.feature_names =
      a.feature_names.empty() ? b.feature_names : a.feature_names;
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_cell(const std::string& cell, long row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw std::runtime_error("csv row " + std::to_string(row) + ", column '" +
                             col + "': cannot parse '" + cell +
                             "' as a number");
  return v;
}

}  // namespace

const std::map<std::string, Label>& default_label_map() {
  static const std::map<std::string, Label> m = {
      {"normal", Label::normal}, {"anomaly", Label::anomaly}};
  return m;
}

LabeledDataset ingest_csv(const std::string& path,
                          const std::string& label_column,
                          const std::map<std::string, Label>& label_map) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty csv file: " + path);
  const auto header = split_line(strip_cr(line));
  long label_idx = -1;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column)
      label_idx = static_cast<long>(j);
    else
      names.push_back(header[j]);
  }
  if (label_idx < 0)
    throw std::runtime_error("label column '" + label_column +
                             "' not found in " + path);
  const long d = static_cast<long>(names.size());
  require(d >= 1, "csv has no feature columns");

  std::vector<double> values;
  std::vector<Label> labels;
  long row = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const auto cells = split_line(line);
    if (static_cast<long>(cells.size()) != static_cast<long>(header.size()))
      throw std::runtime_error("csv row " + std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    long jn = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<long>(j) == label_idx) {
        auto it = label_map.find(cells[j]);
        if (it == label_map.end())
          throw std::runtime_error("csv row " + std::to_string(row) +
                                   ": label value '" + cells[j] +
                                   "' not in the label map");
        labels.push_back(it->second);
      } else {
        values.push_back(
            parse_cell(cells[j], row, names[static_cast<std::size_t>(jn)]));
        ++jn;
      }
    }
  }
  if (row == 0) throw std::runtime_error("csv has no data rows: " + path);

  LabeledDataset ds;
  ds.X.resize(row, d);
  for (long i = 0; i < row; ++i)
    for (long j = 0; j < d; ++j)
      ds.X(i, j) = values[static_cast<std::size_t>(i * d + j)];
  ds.y = std::move(labels);
  ds.feature_names = names;
  return ds;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& ds) {
  require(ds.n() == static_cast<long>(ds.y.size()),
          "dataset: label count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (int j = 0; j < ds.dim(); ++j) {
    const std::string name = ds.feature_names.empty()
                                 ? "x" + std::to_string(j)
                                 : ds.feature_names[static_cast<std::size_t>(j)];
    out << name << ',';
  }
  out << "label\n";
  for (long i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << g17(ds.X(i, j)) << ',';
    out << (ds.y[static_cast<std::size_t>(i)] == Label::normal ? "normal"
                                                               : "anomaly")
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void Standardizer::fit(const Mat& X) {
  require(X.rows() >= 1, "standardizer: empty fit data");
  require_finite(X, "standardizer fit data");
  const double n = static_cast<double>(X.rows());
  mean = X.colwise().mean().transpose();
  std.resize(X.cols());
  for (long j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - mean(j)).square().sum() / n;
    std(j) = std::sqrt(var);
    if (std(j) <= 1e-12)
      throw std::runtime_error("standardizer: feature " + std::to_string(j) +
                               " is (near) constant on the fit data");
  }
}

Mat Standardizer::transform(const Mat& X) const {
  require(X.cols() == dim(), "standardizer: dim mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         std.transpose().array();
}

Mat Standardizer::inverse_transform(const Mat& X) const {
  require(X.cols() == dim(), "standardizer: dim mismatch");
  return (X.array().rowwise() * std.transpose().array()).matrix().rowwise() +
         mean.transpose();
}

SplitResult split(const LabeledDataset& ds, double train_fraction, Rng& rng) {
  require(train_fraction >= 0.0 && train_fraction <= 1.0,
          "split: train_fraction must be in [0, 1]");
  require(ds.n() == static_cast<long>(ds.y.size()),
          "dataset: label count mismatch");
  std::vector<long> order(static_cast<std::size_t>(ds.n()));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const long ntr = static_cast<long>(train_fraction * static_cast<double>(ds.n()));

  SplitResult out;
  auto take = [&](long from, long count, LabeledDataset& dst) {
    dst.X.resize(count, ds.dim());
    dst.y.resize(static_cast<std::size_t>(count));
    dst.feature_names = ds.feature_names;
    for (long i = 0; i < count; ++i) {
      const long src = order[static_cast<std::size_t>(from + i)];
      dst.X.row(i) = ds.X.row(src);
      dst.y[static_cast<std::size_t>(i)] = ds.y[static_cast<std::size_t>(src)];
    }
  };
  take(0, ntr, out.train);
  take(ntr, ds.n() - ntr, out.test);
  return out;
}

LabeledDataset subsample_anomalies(const LabeledDataset& ds, long k, Rng& rng) {
  require(k >= 0, "subsample: k must be >= 0");
  std::vector<long> anom;
  for (long i = 0; i < ds.n(); ++i)
    if (ds.y[static_cast<std::size_t>(i)] == Label::anomaly) anom.push_back(i);
  if (k > static_cast<long>(anom.size()))
    throw std::invalid_argument(
        "subsample: requested " + std::to_string(k) + " anomalies, only " +
        std::to_string(anom.size()) + " available");
  rng.shuffle(anom);
  anom.resize(static_cast<std::size_t>(k));
  std::sort(anom.begin(), anom.end());

  std::vector<long> keep;
  std::size_t next = 0;
  for (long i = 0; i < ds.n(); ++i) {
    if (ds.y[static_cast<std::size_t>(i)] == Label::normal)
      keep.push_back(i);
    else if (next < anom.size() && anom[next] == i) {
      keep.push_back(i);
      ++next;
    }
  }
  LabeledDataset out;
  out.X.resize(static_cast<long>(keep.size()), ds.dim());
  out.y.resize(keep.size());
  out.feature_names = ds.feature_names;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.X.row(static_cast<long>(i)) = ds.X.row(keep[i]);
    out.y[i] = ds.y[static_cast<std::size_t>(keep[i])];
  }
  return out;
}

}  // namespace nfad
