#include <cmath>

#include <nlohmann/json.hpp>

#include "nfad/flows.hpp"
#include "nfad/losses.hpp"
#include "nfad/rqs.hpp"

namespace nfad {

namespace {

Mat gather_cols(const Mat& X, const std::vector<int>& idx) {
  Mat out(X.rows(), static_cast<long>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = X.col(idx[j]);
  return out;
}

void scatter_cols(Mat& X, const std::vector<int>& idx, const Mat& cols) {
  for (std::size_t j = 0; j < idx.size(); ++j) X.col(idx[j]) = cols.col(j);
}

const double kDerivShift = std::log(std::exp(1.0) - 1.0);

// Per-element knot gradients folded back to the raw conditioner block.
// dxs/dys are indexed 0..K (endpoint entries are discarded: the +-B knots
// are constants), dd indexed 0..K with interior entries live.
void knot_grads_to_raw(const double* dxs, const double* dys, const double* dd,
                       const double* sw, const double* sh, const double* raw,
                       int K, double B, double* draw) {
  // interior knot k (1..K-1) = -B + 2B * sum_{j<k} sw[j]
  double suffix = 0.0;
  std::vector<double> dsw(K, 0.0), dsh(K, 0.0);
  for (int j = K - 1; j >= 1; --j) {
    suffix += dxs[j];
    dsw[j - 1] = 2.0 * B * suffix;
  }
  suffix = 0.0;
  for (int j = K - 1; j >= 1; --j) {
    suffix += dys[j];
    dsh[j - 1] = 2.0 * B * suffix;
  }
  // softmax backward: draw_i = s_i (g_i - sum_j s_j g_j)
  double dot = 0.0;
  for (int i = 0; i < K; ++i) dot += sw[i] * dsw[i];
  for (int i = 0; i < K; ++i) draw[i] += sw[i] * (dsw[i] - dot);
  dot = 0.0;
  for (int i = 0; i < K; ++i) dot += sh[i] * dsh[i];
  for (int i = 0; i < K; ++i) draw[K + i] += sh[i] * (dsh[i] - dot);
  // interior derivatives: d_j = softplus(raw + shift)
  for (int j = 1; j < K; ++j)
    draw[2 * K + (j - 1)] +=
        dd[j] * stable_sigmoid(raw[2 * K + (j - 1)] + kDerivShift);
}

}  // namespace

RqsCoupling::RqsCoupling(const std::vector<bool>& mask,
                         const std::vector<int>& hidden, int bins,
                         double bound)
    : m_(Masking::from_mask(mask)), hidden_(hidden), bins_(bins),
      bound_(bound) {
  require(bins_ >= 2 && bins_ <= 64, "rqs coupling: bins must be in [2, 64]");
  require(bound_ > 0.0, "rqs coupling: bound must be positive");
  std::vector<int> widths;
  widths.push_back(static_cast<int>(m_.passive.size()));
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(static_cast<int>(m_.active.size()) * (3 * bins_ - 1));
  cond_ = DiffNet(widths, Activation::relu);
}

void RqsCoupling::init_params(Rng& rng) {
  cond_.glorot_init(rng);
  cond_.zero_last_layer();  // uniform bins, unit derivatives: identity map
}

void RqsCoupling::forward(const Mat& Z, Mat& X, Vec& ld) {
  require(Z.cols() == dim(), "rqs coupling: dim mismatch");
  require_finite(Z, "rqs coupling forward");
  raw_ = cond_.forward(gather_cols(Z, m_.passive));
  if (!raw_.allFinite())
    throw std::runtime_error("rqs coupling: non-finite conditioner output");

  const long n = Z.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  const int kn = K + 1;
  Zact_ = gather_cols(Z, m_.active);
  Xi_.resize(n, na);
  bin_.assign(static_cast<std::size_t>(n * na), -1);
  knots_.resize(static_cast<std::size_t>(n * na * 3 * kn));

  X = Z;
  ld = Vec::Zero(n);
  Mat Xa(n, na);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      double* xs = knots_.data() + (i * na + j) * 3 * kn;
      double* ys = xs + kn;
      double* ds = ys + kn;
      double sw[64], sh[64];
      rqs_build_knots(raw_.row(i).data() + j * (3 * K - 1), K, bound_, xs, ys,
                      ds, sw, sh);
      const double z = Zact_(i, j);
      if (std::abs(z) >= bound_) {
        Xa(i, j) = z;  // identity tail, bin_ stays -1
        continue;
      }
      const int k = rqs_find_bin(z, xs, K);
      const double xi = (z - xs[k]) / (xs[k + 1] - xs[k]);
      RqsElem e = rqs_eval(xi, xs, ys, ds, k);
      Xa(i, j) = e.y;
      ld(i) += e.ld;
      Xi_(i, j) = xi;
      bin_[static_cast<std::size_t>(i * na + j)] = k;
    }
  }
  scatter_cols(X, m_.active, Xa);
  inverse_cached_ = false;
}

void RqsCoupling::inverse(const Mat& Xin, Mat& Z, Vec& ld_inv) {
  require(Xin.cols() == dim(), "rqs coupling: dim mismatch");
  require_finite(Xin, "rqs coupling inverse");
  raw_ = cond_.forward(gather_cols(Xin, m_.passive));
  if (!raw_.allFinite())
    throw std::runtime_error("rqs coupling: non-finite conditioner output");

  const long n = Xin.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  const int kn = K + 1;
  Mat Ya = gather_cols(Xin, m_.active);
  Xi_.resize(n, na);
  Zact_.resize(n, na);
  bin_.assign(static_cast<std::size_t>(n * na), -1);
  knots_.resize(static_cast<std::size_t>(n * na * 3 * kn));

  Z = Xin;
  ld_inv = Vec::Zero(n);
  Mat Za(n, na);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      double* xs = knots_.data() + (i * na + j) * 3 * kn;
      double* ys = xs + kn;
      double* ds = ys + kn;
      double sw[64], sh[64];
      rqs_build_knots(raw_.row(i).data() + j * (3 * K - 1), K, bound_, xs, ys,
                      ds, sw, sh);
      const double y = Ya(i, j);
      if (std::abs(y) >= bound_) {
        Za(i, j) = y;
        continue;
      }
      const int k = rqs_find_bin(y, ys, K);
      const double xi = rqs_invert(y, xs, ys, ds, k);
      RqsElem e = rqs_eval(xi, xs, ys, ds, k);
      Za(i, j) = xs[k] + (xs[k + 1] - xs[k]) * xi;
      ld_inv(i) -= e.ld;
      Xi_(i, j) = xi;
      Zact_(i, j) = Za(i, j);
      bin_[static_cast<std::size_t>(i * na + j)] = k;
    }
  }
  scatter_cols(Z, m_.active, Za);
  inverse_cached_ = true;
}

void RqsCoupling::eval_forward(const Mat& Z, Mat& X, Vec& ld) const {
  require(Z.cols() == dim(), "rqs coupling: dim mismatch");
  require_finite(Z, "rqs coupling forward");
  const Mat raw = cond_.infer(gather_cols(Z, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("rqs coupling: non-finite conditioner output");
  const long n = Z.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  Mat Za = gather_cols(Z, m_.active);
  X = Z;
  ld = Vec::Zero(n);
  Mat Xa(n, na);
  std::vector<double> kb(static_cast<std::size_t>(3 * (K + 1)));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      double* xs = kb.data();
      double* ys = xs + (K + 1);
      double* ds = ys + (K + 1);
      double sw[64], sh[64];
      rqs_build_knots(raw.row(i).data() + j * (3 * K - 1), K, bound_, xs, ys,
                      ds, sw, sh);
      const double z = Za(i, j);
      if (std::abs(z) >= bound_) {
        Xa(i, j) = z;
        continue;
      }
      const int k = rqs_find_bin(z, xs, K);
      const double xi = (z - xs[k]) / (xs[k + 1] - xs[k]);
      RqsElem e = rqs_eval(xi, xs, ys, ds, k);
      Xa(i, j) = e.y;
      ld(i) += e.ld;
    }
  }
  scatter_cols(X, m_.active, Xa);
}

void RqsCoupling::eval_inverse(const Mat& Xin, Mat& Z, Vec& ld_inv) const {
  require(Xin.cols() == dim(), "rqs coupling: dim mismatch");
  require_finite(Xin, "rqs coupling inverse");
  const Mat raw = cond_.infer(gather_cols(Xin, m_.passive));
  if (!raw.allFinite())
    throw std::runtime_error("rqs coupling: non-finite conditioner output");
  const long n = Xin.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  Mat Ya = gather_cols(Xin, m_.active);
  Z = Xin;
  ld_inv = Vec::Zero(n);
  Mat Za(n, na);
  std::vector<double> kb(static_cast<std::size_t>(3 * (K + 1)));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      double* xs = kb.data();
      double* ys = xs + (K + 1);
      double* ds = ys + (K + 1);
      double sw[64], sh[64];
      rqs_build_knots(raw.row(i).data() + j * (3 * K - 1), K, bound_, xs, ys,
                      ds, sw, sh);
      const double y = Ya(i, j);
      if (std::abs(y) >= bound_) {
        Za(i, j) = y;
        continue;
      }
      const int k = rqs_find_bin(y, ys, K);
      const double xi = rqs_invert(y, xs, ys, ds, k);
      RqsElem e = rqs_eval(xi, xs, ys, ds, k);
      Za(i, j) = xs[k] + (xs[k + 1] - xs[k]) * xi;
      ld_inv(i) -= e.ld;
    }
  }
  scatter_cols(Z, m_.active, Za);
}

Mat RqsCoupling::backward_forward(const Mat& dX, const Vec& dld) {
  if (inverse_cached_)
    throw std::logic_error("rqs backward_forward: cache holds an inverse pass");
  const long n = dX.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  const int kn = K + 1;
  Mat dXa = gather_cols(dX, m_.active);
  Mat dZa(n, na);
  Mat dRaw = Mat::Zero(n, na * (3 * K - 1));

  std::vector<double> dxs(static_cast<std::size_t>(kn)),
      dys(static_cast<std::size_t>(kn)), dd(static_cast<std::size_t>(kn));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      const int k = bin_[static_cast<std::size_t>(i * na + j)];
      if (k < 0) {
        dZa(i, j) = dXa(i, j);  // identity tail
        continue;
      }
      const double* xs = knots_.data() + (i * na + j) * 3 * kn;
      const double* ys = xs + kn;
      const double* ds = ys + kn;
      RqsElem e = rqs_eval(Xi_(i, j), xs, ys, ds, k);
      const double dy = dXa(i, j);
      const double dl = dld(i);

      dZa(i, j) = dy * e.dy_dz + dl * e.dld_dz;
      const double dxk = dy * e.dy_dxk + dl * e.dld_dxk;
      const double dw = dy * e.dy_dw + dl * e.dld_dw;
      const double dyk = dy * e.dy_dyk;
      const double dh = dy * e.dy_dh + dl * e.dld_dh;
      const double dd0 = dy * e.dy_dd0 + dl * e.dld_dd0;
      const double dd1 = dy * e.dy_dd1 + dl * e.dld_dd1;

      std::fill(dxs.begin(), dxs.end(), 0.0);
      std::fill(dys.begin(), dys.end(), 0.0);
      std::fill(dd.begin(), dd.end(), 0.0);
      dxs[static_cast<std::size_t>(k)] += dxk - dw;
      dxs[static_cast<std::size_t>(k + 1)] += dw;
      dys[static_cast<std::size_t>(k)] += dyk - dh;
      dys[static_cast<std::size_t>(k + 1)] += dh;
      dd[static_cast<std::size_t>(k)] += dd0;
      dd[static_cast<std::size_t>(k + 1)] += dd1;

      double sw[64], sh[64];
      // softmax weights are cheap to rebuild from the cached raw block
      std::vector<double> kb(static_cast<std::size_t>(3 * kn));
      rqs_build_knots(raw_.row(i).data() + j * (3 * K - 1), K, bound_,
                      kb.data(), kb.data() + kn, kb.data() + 2 * kn, sw, sh);
      knot_grads_to_raw(dxs.data(), dys.data(), dd.data(), sw, sh,
                        raw_.row(i).data() + j * (3 * K - 1), K, bound_,
                        dRaw.row(i).data() + j * (3 * K - 1));
    }
  }

  Mat dZp = cond_.backward(dRaw);
  Mat dZ = dX;
  scatter_cols(dZ, m_.active, dZa);
  Mat dZp_total = gather_cols(dX, m_.passive) + dZp;
  scatter_cols(dZ, m_.passive, dZp_total);
  return dZ;
}

Mat RqsCoupling::backward_inverse(const Mat& dZ, const Vec& dld_inv) {
  if (!inverse_cached_)
    throw std::logic_error("rqs backward_inverse: cache holds a forward pass");
  const long n = dZ.rows();
  const long na = static_cast<long>(m_.active.size());
  const int K = bins_;
  const int kn = K + 1;
  Mat dZa = gather_cols(dZ, m_.active);
  Mat dYa(n, na);
  Mat dRaw = Mat::Zero(n, na * (3 * K - 1));

  std::vector<double> dxs(static_cast<std::size_t>(kn)),
      dys(static_cast<std::size_t>(kn)), dd(static_cast<std::size_t>(kn));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < na; ++j) {
      const int k = bin_[static_cast<std::size_t>(i * na + j)];
      if (k < 0) {
        dYa(i, j) = dZa(i, j);
        continue;
      }
      const double* xs = knots_.data() + (i * na + j) * 3 * kn;
      const double* ys = xs + kn;
      const double* ds = ys + kn;
      RqsElem e = rqs_eval(Xi_(i, j), xs, ys, ds, k);
      const double dzu = dZa(i, j);
      const double dlu = -dld_inv(i);  // ld_inv = -ld(xi)

      // Implicit differentiation of eta(xi; p) = y at fixed bin:
      //   dxi/dy = 1/gxi, dxi/dp = -eta_p / gxi,
      // with z = xs[k] + w * xi and ld_inv = -ld(xi, p).
      const double gxi = e.gxi;
      const double w = e.w;
      // Recover fixed-xi partials from the chained ones computed by
      // rqs_eval: dy_dw = gxi * (-xi/w) + eta_w|xi, dy_dh = eta_h|xi, etc.
      const double eta_w = e.dy_dw - gxi * (-e.xi / w);
      const double eta_h = e.dy_dh;
      const double eta_d0 = e.dy_dd0;
      const double eta_d1 = e.dy_dd1;
      const double lam_w = e.dld_dw - e.lxi * (-e.xi / w);
      const double lam_h = e.dld_dh;
      const double lam_d0 = e.dld_dd0;
      const double lam_d1 = e.dld_dd1;

      // z-output sensitivities
      const double dz_dy = w / gxi;
      const double dz_dxk = 1.0;
      const double dz_dw = e.xi + w * (-eta_w / gxi);
      const double dz_dyk = -w / gxi;
      const double dz_dh = -w * eta_h / gxi;
      const double dz_dd0 = -w * eta_d0 / gxi;
      const double dz_dd1 = -w * eta_d1 / gxi;
      // ld sensitivities (of the forward ld at the recovered xi)
      const double dl_dy = e.lxi / gxi;
      const double dl_dw = lam_w + e.lxi * (-eta_w / gxi);
      const double dl_dyk = e.lxi * (-1.0 / gxi);
      const double dl_dh = lam_h + e.lxi * (-eta_h / gxi);
      const double dl_dd0 = lam_d0 + e.lxi * (-eta_d0 / gxi);
      const double dl_dd1 = lam_d1 + e.lxi * (-eta_d1 / gxi);

      dYa(i, j) = dzu * dz_dy + dlu * dl_dy;
      const double dxk = dzu * dz_dxk;
      const double dw = dzu * dz_dw + dlu * dl_dw;
      const double dyk = dzu * dz_dyk + dlu * dl_dyk;
      const double dh = dzu * dz_dh + dlu * dl_dh;
      const double dd0 = dzu * dz_dd0 + dlu * dl_dd0;
      const double dd1 = dzu * dz_dd1 + dlu * dl_dd1;

      std::fill(dxs.begin(), dxs.end(), 0.0);
      std::fill(dys.begin(), dys.end(), 0.0);
      std::fill(dd.begin(), dd.end(), 0.0);
      dxs[static_cast<std::size_t>(k)] += dxk - dw;
      dxs[static_cast<std::size_t>(k + 1)] += dw;
      dys[static_cast<std::size_t>(k)] += dyk - dh;
      dys[static_cast<std::size_t>(k + 1)] += dh;
      dd[static_cast<std::size_t>(k)] += dd0;
      dd[static_cast<std::size_t>(k + 1)] += dd1;

      double sw[64], sh[64];
      std::vector<double> kb(static_cast<std::size_t>(3 * kn));
      rqs_build_knots(raw_.row(i).data() + j * (3 * K - 1), K, bound_,
                      kb.data(), kb.data() + kn, kb.data() + 2 * kn, sw, sh);
      knot_grads_to_raw(dxs.data(), dys.data(), dd.data(), sw, sh,
                        raw_.row(i).data() + j * (3 * K - 1), K, bound_,
                        dRaw.row(i).data() + j * (3 * K - 1));
    }
  }

  Mat dXp = cond_.backward(dRaw);
  Mat dX = dZ;
  scatter_cols(dX, m_.active, dYa);
  Mat dXp_total = gather_cols(dZ, m_.passive) + dXp;
  scatter_cols(dX, m_.passive, dXp_total);
  return dX;
}

nlohmann::json RqsCoupling::describe() const {
  std::vector<int> mask_bits;
  for (bool b : m_.mask) mask_bits.push_back(b ? 1 : 0);
  return nlohmann::json{{"kind", "rqs"},
                        {"mask", mask_bits},
                        {"hidden", hidden_},
                        {"bins", bins_},
                        {"bound", bound_}};
}

}  // namespace nfad
