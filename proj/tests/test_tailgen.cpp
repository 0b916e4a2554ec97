#include <doctest.h>

#include <cmath>
#include <vector>

#include "nfad/rng.hpp"
#include "nfad/special.hpp"
#include "nfad/tail.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace nfad;

namespace {

std::vector<double> radii_sq(const Mat& Z) {
  std::vector<double> out(static_cast<std::size_t>(Z.rows()));
  for (long i = 0; i < Z.rows(); ++i)
    out[static_cast<std::size_t>(i)] = Z.row(i).squaredNorm();
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("tailgen");

TEST_CASE("every latent lands in the tail shell") {
  Rng rng(1);
  for (int d : {1, 2, 8}) {
    for (double p : {0.2, 0.05, 0.01}) {
      double q = chi2_tail_quantile(p, d);
      Mat Z = sample_tail_latents(5000, d, p, rng);
      REQUIRE(Z.rows() == 5000);
      REQUIRE(Z.cols() == d);
      for (double r2 : radii_sq(Z)) CHECK(r2 >= q);
    }
  }
  // radial path at a mass far too small for rejection
  double q = chi2_tail_quantile(1e-6, 2);
  Mat Z = sample_tail_latents(2000, 2, 1e-6, rng, TailMethod::radial);
  for (double r2 : radii_sq(Z)) CHECK(r2 >= q);
}

TEST_CASE("full tail mass reduces to plain normal sampling") {
  Rng a(3, 9), b(3, 9);
  Mat Z = sample_tail_latents(100, 3, 1.0, a);
  Mat W = sample_std_normal(100, 3, b);
  CHECK((Z - W).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rejection and radial sample the same law") {
  Rng r1(4), r2(5);
  Mat A = sample_tail_latents(20000, 2, 0.2, r1, TailMethod::rejection);
  Mat B = sample_tail_latents(20000, 2, 0.2, r2, TailMethod::radial);
  double d = oracle::ks_two_sample(radii_sq(A), radii_sq(B));
  CHECK(d < oracle::ks_crit_two(20000, 20000));
}

TEST_CASE("radius law matches the truncated chi-square cdf") {
  struct Case {
    int d;
    double p;
    TailMethod method;
  };
  for (Case c : {Case{2, 0.05, TailMethod::radial},
                 Case{2, 0.05, TailMethod::rejection},
                 Case{8, 0.1, TailMethod::radial},
                 Case{1, 0.2, TailMethod::radial}}) {
    Rng rng(static_cast<std::uint64_t>(100 + c.d));
    Mat Z = sample_tail_latents(20000, c.d, c.p, rng, c.method);
    auto cdf = [&](double t) {
      return 1.0 - oracle::chi2_sf_closed(t, c.d) / c.p;
    };
    CHECK(oracle::ks_statistic(radii_sq(Z), cdf) < oracle::ks_crit_one(20000));
  }
}

TEST_CASE("threshold calibration against raw normal draws") {
  Rng rng(6);
  const int n = 1000000;
  double q = chi2_tail_quantile(0.05, 2);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    double a = rng.normal(), b = rng.normal();
    if (a * a + b * b >= q) ++hits;
  }
  double se = std::sqrt(0.05 * 0.95 / n);
  CHECK(std::abs(static_cast<double>(hits) / n - 0.05) < 4.0 * se);
}

TEST_CASE("radial directions are isotropic") {
  Rng rng(7);
  const int n = 20000, d = 3;
  Mat Z = sample_tail_latents(n, d, 1e-3, rng, TailMethod::radial);
  Vec mean_dir = Vec::Zero(d);
  for (long i = 0; i < Z.rows(); ++i)
    mean_dir += Z.row(i).transpose() / Z.row(i).norm();
  mean_dir /= n;
  double se = std::sqrt(1.0 / (d * static_cast<double>(n)));
  for (int j = 0; j < d; ++j) CHECK(std::abs(mean_dir[j]) < 5.0 * se);
}

TEST_CASE("surrogates through the identity flow stay in the shell") {
  FlowStack id(2);
  Rng rng(8);
  Mat Xs = gen_surrogates(id, 3000, 0.05, rng);
  double q = chi2_tail_quantile(0.05, 2);
  for (double r2 : radii_sq(Xs)) CHECK(r2 >= q);
}

TEST_CASE("surrogates live below held-out normals in model density") {
  for (int seed : {1, 2, 3, 4, 5}) {
    const fixtures::TrainedMoons& fx = fixtures::trained_moons(seed, 1.0, 40);
    Rng rng(static_cast<std::uint64_t>(seed), streams::surrogates);
    Mat Xs = gen_surrogates(*fx.flow, 500, 0.05, rng);
    double lp_surr = fx.flow->log_prob(Xs).mean();
    double lp_norm = fx.flow->log_prob(fx.Xtn).mean();
    CHECK(lp_surr < lp_norm);
  }
}

TEST_CASE("invalid tail masses are rejected") {
  Rng rng(9);
  CHECK_THROWS(sample_tail_latents(10, 2, 0.0, rng));
  CHECK_THROWS(sample_tail_latents(10, 2, -0.5, rng));
  CHECK_THROWS(sample_tail_latents(10, 2, 1.5, rng));
}

TEST_SUITE_END();
