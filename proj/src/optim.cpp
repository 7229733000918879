#include "mineica/optim.hpp"

#include <cmath>
#include <string>

namespace mineica {

Nadam::Nadam(std::vector<Tensor> params, NadamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0.0)) throw ContractError("Nadam: lr must be positive");
  if (!(config_.beta1 > 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 > 0.0 && config_.beta2 < 1.0)) {
    throw ContractError("Nadam: betas must lie in (0, 1)");
  }
  reset();
}

void Nadam::reset() {
  m_.clear();
  v_.clear();
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
    v_.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
  }
  t_ = 0;
}

void Nadam::step() {
  std::vector<Matrix> grads;
  grads.reserve(params_.size());
  for (const auto& p : params_) {
    if (p.grad().size() == 0) {
      grads.push_back(Matrix::Zero(p.value().rows(), p.value().cols()));
    } else {
      grads.push_back(p.grad());
    }
  }
  step(grads);
}

void Nadam::step(const std::vector<Matrix>& grads) {
  if (grads.size() != params_.size()) throw ShapeError("Nadam: gradient count mismatch");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].rows() != params_[k].value().rows() ||
        grads[k].cols() != params_[k].value().cols()) {
      throw ShapeError("Nadam: gradient " + std::to_string(k) + " has the wrong shape");
    }
    if (!grads[k].allFinite()) {
      throw NumericalError("Nadam: non-finite gradient for parameter " + std::to_string(k));
    }
  }

  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto g = grads[k].array();
    auto m = m_[k].array();
    auto v = v_[k].array();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    const auto lookahead = b1 * m / corr1 + (1.0 - b1) * g / corr1;
    params_[k].mutable_value().array() -=
        config_.lr * lookahead / ((v / corr2).sqrt() + config_.eps);
  }
}

double gradient_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.grad().size() != 0) sq += p.grad().squaredNorm();
  }
  return std::sqrt(sq);
}

}  // namespace mineica
