#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "nfad/net.hpp"

namespace nfad {

// Bijective layer z <-> x with tractable log |det J|.
//
// forward/inverse cache intermediates for the matching backward_* call;
// the cache is overwritten by the next forward/inverse on the same layer,
// so each backward must run before the layer is used again. eval_* are
// cache-free and safe on a frozen (const) layer.
//
// Log-determinants are per-row and refer to the forward direction z -> x;
// inverse passes report the negated value. Upstream logdet sensitivities
// (dld) are per-row scalars: the loss depends on each layer's contribution
// only through their sum, so one vector serves every layer.
class FlowLayer {
 public:
  virtual ~FlowLayer() = default;
  virtual int dim() const = 0;

  virtual void forward(const Mat& Z, Mat& X, Vec& ld) = 0;
  virtual void inverse(const Mat& X, Mat& Z, Vec& ld_inv) = 0;
  virtual void eval_forward(const Mat& Z, Mat& X, Vec& ld) const = 0;
  virtual void eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const = 0;

  // Return gradient w.r.t. the layer input; accumulate parameter grads.
  virtual Mat backward_forward(const Mat& dX, const Vec& dld) = 0;
  virtual Mat backward_inverse(const Mat& dZ, const Vec& dld_inv) = 0;

  virtual std::vector<ParamRef> params() = 0;
  virtual void zero_grad() = 0;
  virtual void init_params(Rng& rng) = 0;
  virtual nlohmann::json describe() const = 0;
};

// Splits dims by a binary mask: mask[i] = true marks dim i passive
// (copied through, feeds the conditioner), false marks it active
// (transformed elementwise).
struct Masking {
  std::vector<int> passive, active;
  std::vector<bool> mask;
  static Masking from_mask(const std::vector<bool>& mask);
};

// x_a = z_a * exp(s) + t with (s_raw, t) = conditioner(z_passive) and
// s = clamp * tanh(s_raw / clamp), so per-dim log-scales stay in
// (-clamp, clamp). log |det J| = sum_a s. Zero-initialized conditioner
// output gives the exact identity map.
class AffineCoupling : public FlowLayer {
 public:
  AffineCoupling(const std::vector<bool>& mask, const std::vector<int>& hidden,
                 double scale_clamp = 3.0);

  int dim() const override { return static_cast<int>(m_.mask.size()); }
  void forward(const Mat& Z, Mat& X, Vec& ld) override;
  void inverse(const Mat& X, Mat& Z, Vec& ld_inv) override;
  void eval_forward(const Mat& Z, Mat& X, Vec& ld) const override;
  void eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const override;
  Mat backward_forward(const Mat& dX, const Vec& dld) override;
  Mat backward_inverse(const Mat& dZ, const Vec& dld_inv) override;
  std::vector<ParamRef> params() override { return cond_.params(); }
  void zero_grad() override { cond_.zero_grad(); }
  void init_params(Rng& rng) override;
  nlohmann::json describe() const override;

  DiffNet& conditioner() { return cond_; }

 private:
  void apply_forward(const Mat& Z, const Mat& raw, Mat& X, Vec& ld,
                     Mat* cache_Za, Mat* cache_S) const;
  void apply_inverse(const Mat& X, const Mat& raw, Mat& Z, Vec& ld_inv,
                     Mat* cache_Za, Mat* cache_S) const;

  Masking m_;
  std::vector<int> hidden_;
  double clamp_;
  DiffNet cond_;
  Mat Za_, S_;  // cache: active outputs-side values and clamped log-scales
};

// Monotone rational-quadratic spline on [-bound, bound] per active dim,
// identity outside; conditioner emits 3*bins - 1 raw values per active dim
// (bin widths, bin heights, interior knot derivatives). See rqs.hpp.
class RqsCoupling : public FlowLayer {
 public:
  RqsCoupling(const std::vector<bool>& mask, const std::vector<int>& hidden,
              int bins = 8, double bound = 4.0);

  int dim() const override { return static_cast<int>(m_.mask.size()); }
  void forward(const Mat& Z, Mat& X, Vec& ld) override;
  void inverse(const Mat& X, Mat& Z, Vec& ld_inv) override;
  void eval_forward(const Mat& Z, Mat& X, Vec& ld) const override;
  void eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const override;
  Mat backward_forward(const Mat& dX, const Vec& dld) override;
  Mat backward_inverse(const Mat& dZ, const Vec& dld_inv) override;
  std::vector<ParamRef> params() override { return cond_.params(); }
  void zero_grad() override { cond_.zero_grad(); }
  void init_params(Rng& rng) override;
  nlohmann::json describe() const override;

  DiffNet& conditioner() { return cond_; }
  int bins() const { return bins_; }
  double bound() const { return bound_; }

 private:
  Masking m_;
  std::vector<int> hidden_;
  int bins_;
  double bound_;
  DiffNet cond_;
  // caches (train path): raw conditioner output, per-element bin index
  // (-1 = outside, identity), spline coordinate xi, knot tables
  Mat raw_, Xi_, Zact_;
  std::vector<int> bin_;
  std::vector<double> knots_;  // per (row, active dim): xs|ys|ds, 3*(bins+1)
  bool inverse_cached_ = false;
};

// Fixed permutation x_j = z_{perm[j]}; log |det| = 0.
class Permutation : public FlowLayer {
 public:
  explicit Permutation(const std::vector<int>& perm);

  int dim() const override { return static_cast<int>(perm_.size()); }
  void forward(const Mat& Z, Mat& X, Vec& ld) override;
  void inverse(const Mat& X, Mat& Z, Vec& ld_inv) override;
  void eval_forward(const Mat& Z, Mat& X, Vec& ld) const override;
  void eval_inverse(const Mat& X, Mat& Z, Vec& ld_inv) const override;
  Mat backward_forward(const Mat& dX, const Vec& dld) override;
  Mat backward_inverse(const Mat& dZ, const Vec& dld_inv) override;
  std::vector<ParamRef> params() override { return {}; }
  void zero_grad() override {}
  void init_params(Rng&) override {}
  nlohmann::json describe() const override;

 private:
  std::vector<int> perm_, inv_;
};

// Ordered composition x = f_n(...f_1(z)). An empty stack is the identity.
class FlowStack {
 public:
  explicit FlowStack(int dim);
  FlowStack(FlowStack&&) = default;
  FlowStack& operator=(FlowStack&&) = default;

  void add(std::unique_ptr<FlowLayer> layer);
  int dim() const { return dim_; }
  std::size_t size() const { return layers_.size(); }
  FlowLayer& layer(std::size_t i) { return *layers_[i]; }
  const FlowLayer& layer(std::size_t i) const { return *layers_[i]; }

  Mat forward(const Mat& Z, Vec& ld);
  Mat inverse(const Mat& X, Vec& ld_inv);
  Mat eval_forward(const Mat& Z, Vec& ld) const;
  Mat eval_inverse(const Mat& X, Vec& ld_inv) const;

  // Change of variables: log p(x) = log N(f^{-1}(x)) + log |det J_{f^{-1}}|.
  Vec log_prob(const Mat& X) const;
  // Push latents through the trained map (ld discarded).
  Mat transport(const Mat& Z) const;

  // Reverse passes; dld applies to every layer's logdet contribution.
  void backward_forward(const Mat& dX, const Vec& dld);
  void backward_inverse(const Mat& dZ, const Vec& dld_inv);

  std::vector<ParamRef> params();
  void zero_grad();
  void init_params(Rng& rng);

 private:
  int dim_ = 0;
  std::vector<std::unique_ptr<FlowLayer>> layers_;
};

struct FlowArch {
  std::string kind = "rqs";  // "rqs" | "affine"
  int layers = 6;
  std::vector<int> hidden = {64, 64};
  int bins = 8;
  double bound = 4.0;
  double scale_clamp = 3.0;

  void validate() const;
};

// Coupling stack with alternating masks: layer 0 keeps even dims passive,
// layer 1 odd dims, and so on ((1,0), (0,1), ... in 2-D). layers = 0 gives
// the identity stack; couplings require dim >= 2.
FlowStack build_flow(const FlowArch& arch, int dim, Rng& init_rng);

}  // namespace nfad
