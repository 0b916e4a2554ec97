#include <algorithm>
#include <memory>

#include <nlohmann/json.hpp>

#include "nfad/flows.hpp"
#include "nfad/special.hpp"

namespace nfad {

Permutation::Permutation(const std::vector<int>& perm) : perm_(perm) {
  const int d = static_cast<int>(perm.size());
  require(d > 0, "permutation: empty");
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  inv_.assign(static_cast<std::size_t>(d), 0);
  for (int j = 0; j < d; ++j) {
    const int p = perm[static_cast<std::size_t>(j)];
    require(p >= 0 && p < d, "permutation: index out of range");
    require(!seen[static_cast<std::size_t>(p)], "permutation: repeated index");
    seen[static_cast<std::size_t>(p)] = true;
    inv_[static_cast<std::size_t>(p)] = j;
  }
}

void Permutation::forward(const Mat& Z, Mat& X, Vec& ld) {
  eval_forward(Z, X, ld);
}

void Permutation::inverse(const Mat& X, Mat& Z, Vec& ld_inv) {
  eval_inverse(X, Z, ld_inv);
}

void Permutation::eval_forward(const Mat& Z, Mat& X, Vec& ld) const {
  require(Z.cols() == dim(), "permutation: dim mismatch");
  X.resize(Z.rows(), Z.cols());
  for (int j = 0; j < dim(); ++j)
    X.col(j) = Z.col(perm_[static_cast<std::size_t>(j)]);
  ld = Vec::Zero(Z.rows());
}

void Permutation::eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const {
  require(X.cols() == dim(), "permutation: dim mismatch");
  Z.resize(X.rows(), X.cols());
  for (int j = 0; j < dim(); ++j)
    Z.col(j) = X.col(inv_[static_cast<std::size_t>(j)]);
  ld_inv = Vec::Zero(X.rows());
}

Mat Permutation::backward_forward(const Mat& dX, const Vec&) {
  Mat dZ(dX.rows(), dX.cols());
  for (int j = 0; j < dim(); ++j)
    dZ.col(perm_[static_cast<std::size_t>(j)]) = dX.col(j);
  return dZ;
}

Mat Permutation::backward_inverse(const Mat& dZ, const Vec&) {
  Mat dX(dZ.rows(), dZ.cols());
  for (int j = 0; j < dim(); ++j)
    dX.col(inv_[static_cast<std::size_t>(j)]) = dZ.col(j);
  return dX;
}

nlohmann::json Permutation::describe() const {
  return nlohmann::json{{"kind", "permutation"}, {"perm", perm_}};
}

FlowStack::FlowStack(int dim) : dim_(dim) {
  require(dim >= 1, "flow stack: dim must be positive");
}

void FlowStack::add(std::unique_ptr<FlowLayer> layer) {
  require(layer != nullptr, "flow stack: null layer");
  require(layer->dim() == dim_, "flow stack: layer dim mismatch");
  layers_.push_back(std::move(layer));
}

Mat FlowStack::forward(const Mat& Z, Vec& ld) {
  require(Z.cols() == dim_, "flow stack: dim mismatch");
  Mat h = Z;
  ld = Vec::Zero(Z.rows());
  for (auto& layer : layers_) {
    Mat next;
    Vec step;
    layer->forward(h, next, step);
    h = std::move(next);
    ld += step;
  }
  return h;
}

Mat FlowStack::inverse(const Mat& X, Vec& ld_inv) {
  require(X.cols() == dim_, "flow stack: dim mismatch");
  Mat h = X;
  ld_inv = Vec::Zero(X.rows());
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    Mat next;
    Vec step;
    (*it)->inverse(h, next, step);
    h = std::move(next);
    ld_inv += step;
  }
  return h;
}

Mat FlowStack::eval_forward(const Mat& Z, Vec& ld) const {
  require(Z.cols() == dim_, "flow stack: dim mismatch");
  Mat h = Z;
  ld = Vec::Zero(Z.rows());
  for (const auto& layer : layers_) {
    Mat next;
    Vec step;
    layer->eval_forward(h, next, step);
    h = std::move(next);
    ld += step;
  }
  return h;
}

Mat FlowStack::eval_inverse(const Mat& X, Vec& ld_inv) const {
  require(X.cols() == dim_, "flow stack: dim mismatch");
  Mat h = X;
  ld_inv = Vec::Zero(X.rows());
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    Mat next;
    Vec step;
    (*it)->eval_inverse(h, next, step);
    h = std::move(next);
    ld_inv += step;
  }
  return h;
}

Vec FlowStack::log_prob(const Mat& X) const {
  Vec ld_inv;
  Mat Z = eval_inverse(X, ld_inv);
  return std_normal_logpdf_rows(Z) + ld_inv;
}

Mat FlowStack::transport(const Mat& Z) const {
  Vec ld;
  return eval_forward(Z, ld);
}

void FlowStack::backward_forward(const Mat& dX, const Vec& dld) {
  Mat g = dX;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward_forward(g, dld);
}

void FlowStack::backward_inverse(const Mat& dZ, const Vec& dld_inv) {
  Mat g = dZ;
  for (auto& layer : layers_) g = layer->backward_inverse(g, dld_inv);
}

std::vector<ParamRef> FlowStack::params() {
  std::vector<ParamRef> out;
  for (auto& layer : layers_) {
    auto p = layer->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void FlowStack::zero_grad() {
  for (auto& layer : layers_) layer->zero_grad();
}

void FlowStack::init_params(Rng& rng) {
  for (auto& layer : layers_) layer->init_params(rng);
}

void FlowArch::validate() const {
  require(kind == "rqs" || kind == "affine",
          "flow arch: kind must be \"rqs\" or \"affine\"");
  require(layers >= 0, "flow arch: layers must be >= 0");
  require(!hidden.empty(), "flow arch: need at least one hidden width");
  for (int w : hidden) require(w > 0, "flow arch: hidden widths must be positive");
  require(bins >= 2 && bins <= 64, "flow arch: bins must be in [2, 64]");
  require(bound > 0.0, "flow arch: bound must be positive");
  require(scale_clamp > 0.0, "flow arch: scale_clamp must be positive");
}

FlowStack build_flow(const FlowArch& arch, int dim, Rng& init_rng) {
  arch.validate();
  require(dim >= 1, "build_flow: dim must be positive");
  FlowStack stack(dim);
  if (arch.layers == 0) return stack;
  require(dim >= 2, "build_flow: coupling layers need dim >= 2");
  for (int l = 0; l < arch.layers; ++l) {
    std::vector<bool> mask(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d)
      mask[static_cast<std::size_t>(d)] = (d % 2) == (l % 2);
    if (arch.kind == "affine")
      stack.add(std::make_unique<AffineCoupling>(mask, arch.hidden,
                                                 arch.scale_clamp));
    else
      stack.add(std::make_unique<RqsCoupling>(mask, arch.hidden, arch.bins,
                                              arch.bound));
  }
  stack.init_params(init_rng);
  return stack;
}

}  // namespace nfad
