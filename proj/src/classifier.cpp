#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "nfad/classifier.hpp"
#include "nfad/format.hpp"
#include "nfad/losses.hpp"
#include "nfad/tail.hpp"

namespace nfad {

MlpClassifier::MlpClassifier(int dim) : dim_(dim) {
  require(dim >= 1, "classifier: dim must be positive");
  net_ = DiffNet({dim, 3 * dim, 2 * dim, 1}, Activation::relu);
}

Vec MlpClassifier::logits(const Mat& X) const {
  require(X.cols() == dim_, "classifier: dim mismatch");
  return net_.infer(X).col(0);
}

Vec MlpClassifier::score(const Mat& X) const {
  Vec l = logits(X);
  Vec out(l.size());
  for (long i = 0; i < l.size(); ++i) out(i) = stable_sigmoid(l(i));
  return out;
}

void ClfTrainConfig::validate() const {
  require(epochs >= 1, "clf train: epochs must be >= 1");
  require(batch >= 1, "clf train: batch must be >= 1");
  require(surrogates_per_batch >= 0,
          "clf train: surrogates_per_batch must be >= 0");
  require(tail_p > 0.0 && tail_p <= 1.0, "clf train: tail_p must be in (0, 1]");
  require(weights.normal > 0.0 && weights.anomaly > 0.0 &&
              weights.surrogate > 0.0,
          "clf train: class weights must be positive");
  require(val_fraction >= 0.0 && val_fraction < 1.0,
          "clf train: val_fraction must be in [0, 1)");
  opt.validate();
}

void ClfTrainTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << g17(e.train_loss) << ',' << g17(e.val_loss)
        << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Stack groups into one batch; per-row targets and weights carry the
// group structure (weight w_g / n_g per row of group g).
struct Stacked {
  Mat X;
  Vec target, wrow;
};

Stacked stack_groups(const Mat& Xp, const Mat& Xm, const Mat& Xs,
                     const ClfWeights& w) {
  const long np = Xp.rows(), nm = Xm.rows(), ns = Xs.rows();
  require(np > 0, "clf loss: need at least one normal sample");
  long d = Xp.cols();
  require(nm == 0 || Xm.cols() == d, "clf loss: anomaly dim mismatch");
  require(ns == 0 || Xs.cols() == d, "clf loss: surrogate dim mismatch");
  Stacked st;
  st.X.resize(np + nm + ns, d);
  st.X.topRows(np) = Xp;
  if (nm > 0) st.X.middleRows(np, nm) = Xm;
  if (ns > 0) st.X.bottomRows(ns) = Xs;
  st.target.resize(np + nm + ns);
  st.wrow.resize(np + nm + ns);
  st.target.head(np).setOnes();
  st.wrow.head(np).setConstant(w.normal / static_cast<double>(np));
  if (nm > 0) {
    st.target.segment(np, nm).setZero();
    st.wrow.segment(np, nm).setConstant(w.anomaly / static_cast<double>(nm));
  }
  if (ns > 0) {
    st.target.tail(ns).setZero();
    st.wrow.tail(ns).setConstant(w.surrogate / static_cast<double>(ns));
  }
  return st;
}

double weighted_bce(const Vec& logits, const Vec& target, const Vec& wrow,
                    Vec* dlogits) {
  double loss = 0.0;
  if (dlogits) dlogits->resize(logits.size());
  for (long i = 0; i < logits.size(); ++i) {
    const double l = logits(i);
    loss += wrow(i) *
            (std::max(l, 0.0) - l * target(i) + std::log1p(std::exp(-std::abs(l))));
    if (dlogits) (*dlogits)(i) = wrow(i) * (stable_sigmoid(l) - target(i));
  }
  if (!std::isfinite(loss))
    throw std::runtime_error("clf loss: non-finite value");
  return loss;
}

ClfWeights balanced_weights(long nm, long ns) {
  ClfWeights w;
  w.normal = 1.0;
  const double denom = static_cast<double>(nm + ns);
  w.anomaly = nm > 0 ? static_cast<double>(nm) / denom : 1.0;
  w.surrogate = ns > 0 ? static_cast<double>(ns) / denom : 1.0;
  return w;
}

// Cycles through a shuffled index set, reshuffling on wrap-around.
class CyclicBatcher {
 public:
  CyclicBatcher(long n, Rng& rng) : idx_(static_cast<std::size_t>(n)), rng_(rng) {
    std::iota(idx_.begin(), idx_.end(), 0);
    rng_.shuffle(idx_);
  }
  void next(long k, std::vector<long>& out) {
    out.clear();
    for (long i = 0; i < k; ++i) {
      if (pos_ == idx_.size()) {
        rng_.shuffle(idx_);
        pos_ = 0;
      }
      out.push_back(idx_[pos_++]);
    }
  }

 private:
  std::vector<long> idx_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

Mat take_rows(const Mat& X, const std::vector<long>& rows) {
  Mat out(static_cast<long>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<long>(i)) = X.row(rows[i]);
  return out;
}

}  // namespace

double clf_loss(const MlpClassifier& clf, const Mat& Xp, const Mat& Xm,
                const Mat& Xs, const ClfWeights& w) {
  Stacked st = stack_groups(Xp, Xm, Xs, w);
  Vec l = clf.logits(st.X);
  return weighted_bce(l, st.target, st.wrow, nullptr);
}

double clf_loss_grad(MlpClassifier& clf, const Mat& Xp, const Mat& Xm,
                     const Mat& Xs, const ClfWeights& w) {
  Stacked st = stack_groups(Xp, Xm, Xs, w);
  Mat logits = clf.net().forward(st.X);
  Vec dlogits;
  const double loss = weighted_bce(logits.col(0), st.target, st.wrow, &dlogits);
  Mat dY(dlogits.size(), 1);
  dY.col(0) = dlogits;
  clf.net().backward(dY);
  return loss;
}

double clf_step(MlpClassifier& clf, AdamW& opt, const Mat& Xp, const Mat& Xm,
                const Mat& Xs, const ClfWeights& w) {
  clf.net().zero_grad();
  const double loss = clf_loss_grad(clf, Xp, Xm, Xs, w);
  opt.step();
  return loss;
}

ClfTrainTrace train_classifier(MlpClassifier& clf, const Mat& Xn,
                               const Mat& Xa, const FlowStack* flow,
                               const ClfTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const long n = Xn.rows();
  const long na = Xa.rows();
  require(n >= 1, "clf train: empty normal set");
  require(Xn.cols() == clf.dim(), "clf train: normal data dim mismatch");
  require(na == 0 || Xa.cols() == clf.dim(),
          "clf train: anomaly data dim mismatch");
  require_finite(Xn, "clf train normals");
  if (na > 0) require_finite(Xa, "clf train anomalies");
  const bool use_surr = cfg.surrogates_per_batch > 0;
  if (use_surr)
    require(flow != nullptr, "clf train: surrogates need a flow");
  if (flow != nullptr)
    require(flow->dim() == clf.dim(), "clf train: flow dim mismatch");
  require(na > 0 || use_surr,
          "clf train: need real anomalies or surrogates to train against");

  // held-out split for the per-epoch loss monitor
  std::vector<long> norder(static_cast<std::size_t>(n));
  std::iota(norder.begin(), norder.end(), 0);
  rng.shuffle(norder);
  const long nval = static_cast<long>(cfg.val_fraction * static_cast<double>(n));
  require(n - nval >= 1, "clf train: val split leaves no training normals");
  std::vector<long> val_n(norder.begin(), norder.begin() + nval);
  std::vector<long> tr_n(norder.begin() + nval, norder.end());
  Mat Xn_tr = take_rows(Xn, tr_n);
  Mat Xn_val = take_rows(Xn, val_n);

  Mat Xa_tr(0, clf.dim()), Xa_val(0, clf.dim());
  if (na > 0) {
    std::vector<long> aorder(static_cast<std::size_t>(na));
    std::iota(aorder.begin(), aorder.end(), 0);
    rng.shuffle(aorder);
    const long nava = static_cast<long>(cfg.val_fraction * static_cast<double>(na));
    Xa_val = take_rows(Xa, std::vector<long>(aorder.begin(), aorder.begin() + nava));
    Xa_tr = take_rows(Xa, std::vector<long>(aorder.begin() + nava, aorder.end()));
  }

  Mat Xs_val(0, clf.dim());
  if (nval > 0 && use_surr)
    Xs_val = gen_surrogates(*flow, cfg.surrogates_per_batch, cfg.tail_p, rng);

  AdamW opt(clf.net().params(), cfg.opt);
  const long ntr = Xn_tr.rows();
  const long natr = Xa_tr.rows();
  std::vector<long> order(static_cast<std::size_t>(ntr));
  std::iota(order.begin(), order.end(), 0);
  CyclicBatcher abatch(natr, rng);
  std::vector<long> arows;

  ClfTrainTrace trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    long steps = 0;
    for (long start = 0; start < ntr; start += cfg.batch) {
      const long nb = std::min<long>(cfg.batch, ntr - start);
      Mat Xp(nb, clf.dim());
      for (long i = 0; i < nb; ++i)
        Xp.row(i) = Xn_tr.row(order[static_cast<std::size_t>(start + i)]);

      Mat Xm(0, clf.dim());
      if (natr > 0) {
        abatch.next(std::min<long>(cfg.batch, natr), arows);
        Xm = take_rows(Xa_tr, arows);
      }
      Mat Xs(0, clf.dim());
      if (use_surr)
        Xs = gen_surrogates(*flow, cfg.surrogates_per_batch, cfg.tail_p, rng);

      const ClfWeights w =
          cfg.balanced ? balanced_weights(Xm.rows(), Xs.rows()) : cfg.weights;
      loss_sum += clf_step(clf, opt, Xp, Xm, Xs, w);
      ++steps;
    }

    ClfEpochStats s;
    s.epoch = epoch;
    s.train_loss = loss_sum / static_cast<double>(steps);
    if (nval > 0) {
      const ClfWeights wv = cfg.balanced
                                ? balanced_weights(Xa_val.rows(), Xs_val.rows())
                                : cfg.weights;
      s.val_loss = clf_loss(clf, Xn_val, Xa_val, Xs_val, wv);
    } else {
      s.val_loss = std::numeric_limits<double>::quiet_NaN();
    }
    trace.epochs.push_back(s);
  }
  return trace;
}

}  // namespace nfad
