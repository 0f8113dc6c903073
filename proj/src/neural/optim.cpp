#include "cantus/neural/optim.hpp"

#include <cmath>

#include "cantus/error.hpp"

namespace cantus::nn {

void AdamWConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
}

AdamW::AdamW(ParamList params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  for (const auto& [name, p] : params_) {
    m_.push_back(Tensor::constant(Matrix::Zero(p.rows(), p.cols())));
    v_.push_back(Tensor::constant(Matrix::Zero(p.rows(), p.cols())));
  }
}

void AdamW::step() {
  for (const auto& [name, p] : params_) {
    if (p.has_grad() && !p.grad().allFinite()) {
      throw NumericalError("non-finite gradient for parameter '" + name + "'");
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor& p = params_[i].second;
    if (!p.has_grad()) continue;
    Matrix& w = p.mutable_value();
    Matrix& m = m_[i].mutable_value();
    Matrix& v = v_[i].mutable_value();
    const Matrix& g = p.grad();
    w *= 1.0 - cfg_.lr * cfg_.weight_decay;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    w.array() -= cfg_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.eps);
  }
}

void AdamW::zero_grad() const {
  for (const auto& [name, p] : params_) p.zero_grad();
}

ParamList AdamW::state() const {
  ParamList s;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    s.emplace_back("m/" + params_[i].first, m_[i]);
    s.emplace_back("v/" + params_[i].first, v_[i]);
  }
  return s;
}

}  // namespace cantus::nn
