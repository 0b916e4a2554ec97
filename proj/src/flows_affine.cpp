#include <cmath>

#include <nlohmann/json.hpp>

#include "nfad/flows.hpp"

namespace nfad {

Masking Masking::from_mask(const std::vector<bool>& mask) {
  Masking m;
  m.mask = mask;
  for (std::size_t i = 0; i < mask.size(); ++i)
    (mask[i] ? m.passive : m.active).push_back(static_cast<int>(i));
  require(!m.passive.empty() && !m.active.empty(),
          "coupling mask needs at least one passive and one active dim");
  return m;
}

namespace {

Mat gather_cols(const Mat& X, const std::vector<int>& idx) {
  Mat out(X.rows(), static_cast<long>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = X.col(idx[j]);
  return out;
}

void scatter_cols(Mat& X, const std::vector<int>& idx, const Mat& cols) {
  for (std::size_t j = 0; j < idx.size(); ++j) X.col(idx[j]) = cols.col(j);
}

}  // namespace

AffineCoupling::AffineCoupling(const std::vector<bool>& mask,
                               const std::vector<int>& hidden,
                               double scale_clamp)
    : m_(Masking::from_mask(mask)), hidden_(hidden), clamp_(scale_clamp) {
  require(clamp_ > 0.0, "affine coupling: scale_clamp must be positive");
  std::vector<int> widths;
  widths.push_back(static_cast<int>(m_.passive.size()));
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * static_cast<int>(m_.active.size()));
  cond_ = DiffNet(widths, Activation::relu);
}

void AffineCoupling::init_params(Rng& rng) {
  cond_.glorot_init(rng);
  cond_.zero_last_layer();  // start as the identity map
}

void AffineCoupling::apply_forward(const Mat& Z, const Mat& raw, Mat& X,
                                   Vec& ld, Mat* cache_Za,
                                   Mat* cache_S) const {
  const long na = static_cast<long>(m_.active.size());
  Mat Za = gather_cols(Z, m_.active);
  Mat S = (clamp_ * (raw.leftCols(na) / clamp_).array().tanh()).matrix();
  Mat T = raw.rightCols(na);
  X = Z;
  Mat Xa = (Za.array() * S.array().exp() + T.array()).matrix();
  scatter_cols(X, m_.active, Xa);
  ld = S.rowwise().sum();
  if (cache_Za) *cache_Za = std::move(Za);
  if (cache_S) *cache_S = std::move(S);
}

void AffineCoupling::apply_inverse(const Mat& X, const Mat& raw, Mat& Z,
                                   Vec& ld_inv, Mat* cache_Za,
                                   Mat* cache_S) const {
  const long na = static_cast<long>(m_.active.size());
  Mat Xa = gather_cols(X, m_.active);
  Mat S = (clamp_ * (raw.leftCols(na) / clamp_).array().tanh()).matrix();
  Mat T = raw.rightCols(na);
  Z = X;
  Mat Za = ((Xa.array() - T.array()) * (-S.array()).exp()).matrix();
  scatter_cols(Z, m_.active, Za);
  ld_inv = -S.rowwise().sum();
  if (cache_Za) *cache_Za = std::move(Za);
  if (cache_S) *cache_S = std::move(S);
}

void AffineCoupling::forward(const Mat& Z, Mat& X, Vec& ld) {
  require(Z.cols() == dim(), "affine coupling: dim mismatch");
  require_finite(Z, "affine coupling forward");
  const Mat raw = cond_.forward(gather_cols(Z, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("affine coupling: non-finite conditioner output");
  apply_forward(Z, raw, X, ld, &Za_, &S_);
}

void AffineCoupling::inverse(const Mat& X, Mat& Z, Vec& ld_inv) {
  require(X.cols() == dim(), "affine coupling: dim mismatch");
  require_finite(X, "affine coupling inverse");
  const Mat raw = cond_.forward(gather_cols(X, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("affine coupling: non-finite conditioner output");
  apply_inverse(X, raw, Z, ld_inv, &Za_, &S_);
}

void AffineCoupling::eval_forward(const Mat& Z, Mat& X, Vec& ld) const {
  require(Z.cols() == dim(), "affine coupling: dim mismatch");
  require_finite(Z, "affine coupling forward");
  const Mat raw = cond_.infer(gather_cols(Z, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("affine coupling: non-finite conditioner output");
  apply_forward(Z, raw, X, ld, nullptr, nullptr);
}

void AffineCoupling::eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const {
  require(X.cols() == dim(), "affine coupling: dim mismatch");
  require_finite(X, "affine coupling inverse");
  const Mat raw = cond_.infer(gather_cols(X, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("affine coupling: non-finite conditioner output");
  apply_inverse(X, raw, Z, ld_inv, nullptr, nullptr);
}

Mat AffineCoupling::backward_forward(const Mat& dX, const Vec& dld) {
  const long na = static_cast<long>(m_.active.size());
  Mat dXa = gather_cols(dX, m_.active);
  Mat E = S_.array().exp().matrix();

  Mat dZa = dXa.cwiseProduct(E);
  // x_a = z_a e^s + t:  d/ds = z_a e^s;  logdet adds dld to every active dim
  Mat dS = dXa.cwiseProduct(Za_).cwiseProduct(E);
  dS.colwise() += dld;
  Mat dT = dXa;
  // s = clamp * tanh(s_raw / clamp)  =>  ds/ds_raw = 1 - (s/clamp)^2
  Mat dSraw =
      dS.cwiseProduct((1.0 - (S_ / clamp_).array().square()).matrix());

  Mat draw(dX.rows(), 2 * na);
  draw.leftCols(na) = dSraw;
  draw.rightCols(na) = dT;
  Mat dZp = cond_.backward(draw);

  Mat dZ = dX;
  scatter_cols(dZ, m_.active, dZa);
  Mat dZp_total = gather_cols(dX, m_.passive) + dZp;
  scatter_cols(dZ, m_.passive, dZp_total);
  return dZ;
}

Mat AffineCoupling::backward_inverse(const Mat& dZ, const Vec& dld_inv) {
  const long na = static_cast<long>(m_.active.size());
  Mat dZa = gather_cols(dZ, m_.active);
  Mat Einv = (-S_.array()).exp().matrix();

  Mat dXa = dZa.cwiseProduct(Einv);
  Mat dT = -dXa;
  // z_a = (x_a - t) e^{-s}:  d/ds = -z_a;  ld_inv = -sum s
  Mat dS = -dZa.cwiseProduct(Za_);
  dS.colwise() -= dld_inv;
  Mat dSraw =
      dS.cwiseProduct((1.0 - (S_ / clamp_).array().square()).matrix());

  Mat draw(dZ.rows(), 2 * na);
  draw.leftCols(na) = dSraw;
  draw.rightCols(na) = dT;
  Mat dXp = cond_.backward(draw);

  Mat dX = dZ;
  scatter_cols(dX, m_.active, dXa);
  Mat dXp_total = gather_cols(dZ, m_.passive) + dXp;
  scatter_cols(dX, m_.passive, dXp_total);
  return dX;
}

nlohmann::json AffineCoupling::describe() const {
  std::vector<int> mask_bits;
  for (bool b : m_.mask) mask_bits.push_back(b ? 1 : 0);
  return nlohmann::json{{"kind", "affine"},
                        {"mask", mask_bits},
                        {"hidden", hidden_},
                        {"scale_clamp", clamp_}};
}

}  // namespace nfad
