#include <algorithm>
#include <fstream>
#include <numeric>

#include "nfad/format.hpp"
#include "nfad/nf_train.hpp"
#include "nfad/special.hpp"

namespace nfad {

void NfTrainConfig::validate() const {
  require(epochs >= 1, "nf train: epochs must be >= 1");
  require(batch >= 1, "nf train: batch must be >= 1");
  require(lambda_max >= 0.0, "nf train: lambda_max must be >= 0");
  require(lambda_ramp >= 0.0 && lambda_ramp <= 1.0,
          "nf train: lambda_ramp must be in [0, 1]");
  require(reg_samples >= 0, "nf train: reg_samples must be >= 0");
  opt.validate();
}

void NfTrainTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,nll,l_j,lambda\n";
  for (const auto& e : epochs)
    out << e.epoch << ',' << g17(e.nll) << ',' << g17(e.l_j) << ','
        << g17(e.lambda) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

double lambda_at(long step, long total_steps, const NfTrainConfig& cfg) {
  if (cfg.lambda_max == 0.0) return 0.0;
  const double ramp_steps = cfg.lambda_ramp * static_cast<double>(total_steps);
  if (ramp_steps <= 0.0) return cfg.lambda_max;
  const double frac = static_cast<double>(step) / ramp_steps;
  return cfg.lambda_max * std::min(1.0, frac);
}

double nll_loss(const FlowStack& flow, const Mat& X) {
  return -flow.log_prob(X).mean();
}

double nll_loss_grad(FlowStack& flow, const Mat& X) {
  const long n = X.rows();
  require(n > 0, "nll grad: empty batch");
  Vec ld_inv;
  Mat Z = flow.inverse(X, ld_inv);
  const double loss = -(std_normal_logpdf_rows(Z) + ld_inv).mean();
  // d(-logN(z))/dz = z; every row's ld_inv enters with weight -1/n
  Mat dZ = Z / static_cast<double>(n);
  Vec dld_inv = Vec::Constant(n, -1.0 / static_cast<double>(n));
  flow.backward_inverse(dZ, dld_inv);
  return loss;
}

double jac_reg_at(const FlowStack& flow, const Mat& Z) {
  Vec ld;
  flow.eval_forward(Z, ld);
  return ld.squaredNorm() / static_cast<double>(Z.rows());
}

double jac_reg_grad(FlowStack& flow, const Mat& Z, double scale) {
  const long m = Z.rows();
  require(m > 0, "jacobian penalty: empty latent batch");
  Vec ld;
  flow.forward(Z, ld);
  const double value = ld.squaredNorm() / static_cast<double>(m);
  Vec dld = (2.0 * scale / static_cast<double>(m)) * ld;
  flow.backward_forward(Mat::Zero(m, flow.dim()), dld);
  return value;
}

NfTrainTrace train_flow(FlowStack& flow, const Mat& X,
                        const NfTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const long n = X.rows();
  require(n >= 1, "nf train: empty training set");
  require(X.cols() == flow.dim(), "nf train: data dim mismatch");
  require_finite(X, "nf train data");

  const long steps_per_epoch = (n + cfg.batch - 1) / cfg.batch;
  const long total_steps = steps_per_epoch * cfg.epochs;
  AdamW opt(flow.params(), cfg.opt);

  std::vector<long> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  NfTrainTrace trace;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double nll_sum = 0.0;
    double lj_sum = 0.0;
    double lambda = 0.0;
    for (long start = 0; start < n; start += cfg.batch) {
      const long nb = std::min<long>(cfg.batch, n - start);
      Mat Xb(nb, X.cols());
      for (long i = 0; i < nb; ++i)
        Xb.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);

      flow.zero_grad();
      const double nll = nll_loss_grad(flow, Xb);

      const long m = cfg.reg_samples > 0 ? cfg.reg_samples : nb;
      Mat Zm = sample_std_normal(static_cast<int>(m), flow.dim(), rng);
      lambda = lambda_at(step, total_steps, cfg);
      const double lj = lambda > 0.0 ? jac_reg_grad(flow, Zm, lambda)
                                     : jac_reg_at(flow, Zm);
      opt.step();

      nll_sum += nll * static_cast<double>(nb);
      lj_sum += lj;
      ++step;
    }
    NfEpochStats s;
    s.epoch = epoch;
    s.nll = nll_sum / static_cast<double>(n);
    s.l_j = lj_sum / static_cast<double>(steps_per_epoch);
    s.lambda = lambda;
    trace.epochs.push_back(s);
  }
  return trace;
}

}  // namespace nfad
