#pragma once

#include <vector>

#include "nfad/matrix.hpp"
#include "nfad/rng.hpp"

namespace nfad {

class Rng;

enum class Activation { identity, relu, tanh, softplus };

// View into one parameter block and its gradient accumulator. Pointers stay
// valid for the lifetime of the owning net (blocks are never resized).
struct ParamRef {
  double* value;
  double* grad;
  long size;
};

struct DenseLayer {
  Mat W;  // out x in
  Vec b;
  Activation act;
  Mat gW;
  Vec gb;
  // forward cache for backward()
  Mat in, pre;
};

// Small fully connected net with exact reverse-mode gradients.
// forward() caches activations; backward() consumes the cache and
// accumulates into gW/gb (call zero_grad() between optimizer steps).
class DiffNet {
 public:
  DiffNet() = default;
  // widths = {in, hidden..., out}; hidden layers use `hidden`, final layer
  // is linear (identity activation).
  DiffNet(const std::vector<int>& widths, Activation hidden);

  Mat forward(const Mat& X);
  Mat infer(const Mat& X) const;  // no cache, usable on a frozen net
  // dY is d(loss)/d(output); returns d(loss)/d(input).
  Mat backward(const Mat& dY);

  void zero_grad();
  std::vector<ParamRef> params();  // per layer: W then b

  // Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)), zero biases.
  void glorot_init(Rng& rng);
  // Zeroing the last layer makes the net output identically zero; coupling
  // layers rely on this to start as the identity map.
  void zero_last_layer();

  int in_dim() const;
  int out_dim() const;

  std::vector<DenseLayer> layers;

 private:
  bool cached_ = false;
};

double activation_apply(Activation a, double x);

}  // namespace nfad
