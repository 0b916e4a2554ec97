#include "nfad/optim.hpp"

#include <cmath>
#include <string>

namespace nfad {

void AdamConfig::validate() const {
  require(lr > 0.0, "optimizer: lr must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0, "optimizer: beta1 must be in [0,1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "optimizer: beta2 must be in [0,1)");
  require(eps > 0.0, "optimizer: eps must be positive");
  require(weight_decay >= 0.0, "optimizer: weight_decay must be >= 0");
}

AdamW::AdamW(std::vector<ParamRef> params, const AdamConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    require(p.size >= 0 && (p.size == 0 || (p.value && p.grad)),
            "optimizer: bad parameter block");
    m_.push_back(Vec::Zero(p.size));
    v_.push_back(Vec::Zero(p.size));
  }
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    Eigen::Map<Vec> val(p.value, p.size);
    Eigen::Map<const Vec> grad(p.grad, p.size);
    if (!grad.allFinite())
      throw std::runtime_error("optimizer: non-finite gradient in block " +
                               std::to_string(k));
    if (cfg_.weight_decay != 0.0) val *= (1.0 - cfg_.lr * cfg_.weight_decay);
    m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad;
    v_[k] = cfg_.beta2 * v_[k] +
            (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    val.array() -= cfg_.lr * (m_[k].array() / c1) /
                   ((v_[k].array() / c2).sqrt() + cfg_.eps);
    if (!val.allFinite())
      throw std::runtime_error("optimizer: non-finite parameter in block " +
                               std::to_string(k));
  }
}

}  // namespace nfad
