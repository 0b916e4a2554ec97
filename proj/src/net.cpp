#include "nfad/net.hpp"

#include <cmath>

#include "nfad/rng.hpp"

namespace nfad {

namespace {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mat apply_act(Activation a, const Mat& pre) {
  switch (a) {
    case Activation::identity:
      return pre;
    case Activation::relu:
      return pre.cwiseMax(0.0);
    case Activation::tanh:
      return pre.array().tanh().matrix();
    case Activation::softplus:
      return pre.unaryExpr([](double x) { return softplus(x); });
  }
  throw std::logic_error("apply_act: bad activation");
}

// Derivative as a function of the pre-activation. ReLU uses the exact
// subgradient with value 0 at the kink.
Mat act_grad(Activation a, const Mat& pre) {
  switch (a) {
    case Activation::identity:
      return Mat::Ones(pre.rows(), pre.cols());
    case Activation::relu:
      return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::tanh: {
      Mat t = pre.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix();
    }
    case Activation::softplus:
      return pre.unaryExpr([](double x) { return sigmoid(x); });
  }
  throw std::logic_error("act_grad: bad activation");
}

}  // namespace

double activation_apply(Activation a, double x) {
  switch (a) {
    case Activation::identity:
      return x;
    case Activation::relu:
      return std::max(x, 0.0);
    case Activation::tanh:
      return std::tanh(x);
    case Activation::softplus:
      return softplus(x);
  }
  throw std::logic_error("activation_apply: bad activation");
}

DiffNet::DiffNet(const std::vector<int>& widths, Activation hidden) {
  require(widths.size() >= 2, "DiffNet: need at least input and output width");
  for (int w : widths) require(w >= 1, "DiffNet: widths must be positive");
  layers.reserve(widths.size() - 1);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    DenseLayer l;
    l.W = Mat::Zero(widths[i + 1], widths[i]);
    l.b = Vec::Zero(widths[i + 1]);
    l.gW = Mat::Zero(widths[i + 1], widths[i]);
    l.gb = Vec::Zero(widths[i + 1]);
    l.act = (i + 2 == widths.size()) ? Activation::identity : hidden;
    layers.push_back(std::move(l));
  }
}

int DiffNet::in_dim() const {
  require(!layers.empty(), "DiffNet: empty net");
  return static_cast<int>(layers.front().W.cols());
}

int DiffNet::out_dim() const {
  require(!layers.empty(), "DiffNet: empty net");
  return static_cast<int>(layers.back().W.rows());
}

Mat DiffNet::forward(const Mat& X) {
  require(X.cols() == in_dim(), "DiffNet::forward: input width mismatch");
  require_finite(X, "DiffNet::forward");
  Mat cur = X;
  for (auto& l : layers) {
    l.in = cur;
    l.pre = cur * l.W.transpose();
    l.pre.rowwise() += l.b.transpose();
    cur = apply_act(l.act, l.pre);
  }
  cached_ = true;
  return cur;
}

Mat DiffNet::infer(const Mat& X) const {
  require(X.cols() == in_dim(), "DiffNet::infer: input width mismatch");
  require_finite(X, "DiffNet::infer");
  Mat cur = X;
  for (const auto& l : layers) {
    Mat pre = cur * l.W.transpose();
    pre.rowwise() += l.b.transpose();
    cur = apply_act(l.act, pre);
  }
  return cur;
}

Mat DiffNet::backward(const Mat& dY) {
  if (!cached_) throw std::logic_error("DiffNet::backward: no cached forward pass");
  require(dY.rows() == layers.back().pre.rows() && dY.cols() == out_dim(),
          "DiffNet::backward: upstream gradient shape mismatch");
  Mat d = dY;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    Mat dpre = d.cwiseProduct(act_grad(it->act, it->pre));
    it->gW += dpre.transpose() * it->in;
    it->gb += dpre.colwise().sum().transpose();
    d = dpre * it->W;
  }
  return d;
}

void DiffNet::zero_grad() {
  for (auto& l : layers) {
    l.gW.setZero();
    l.gb.setZero();
  }
}

std::vector<ParamRef> DiffNet::params() {
  std::vector<ParamRef> out;
  out.reserve(layers.size() * 2);
  for (auto& l : layers) {
    out.push_back({l.W.data(), l.gW.data(), static_cast<long>(l.W.size())});
    out.push_back({l.b.data(), l.gb.data(), static_cast<long>(l.b.size())});
  }
  return out;
}

void DiffNet::glorot_init(Rng& rng) {
  for (auto& l : layers) {
    const double a =
        std::sqrt(6.0 / static_cast<double>(l.W.rows() + l.W.cols()));
    for (long i = 0; i < l.W.rows(); ++i)
      for (long j = 0; j < l.W.cols(); ++j)
        l.W(i, j) = a * (2.0 * rng.uniform() - 1.0);
    l.b.setZero();
  }
}

void DiffNet::zero_last_layer() {
  require(!layers.empty(), "DiffNet: empty net");
  layers.back().W.setZero();
  layers.back().b.setZero();
}

}  // namespace nfad
