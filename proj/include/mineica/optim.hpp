#pragma once

#include "mineica/tensor.hpp"

#include <cstddef>
#include <vector>

namespace mineica {

struct NadamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with Nesterov look-ahead (Dozat). Per element, at step t:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   p <- p - lr (b1 m/(1-b1^t) + (1-b1) g/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
///
/// Owns moment buffers for a fixed parameter list; parameters are shared
/// handles and are updated in place.
class Nadam {
 public:
  explicit Nadam(std::vector<Tensor> params, NadamConfig config = {});

  /// Applies one update using each parameter's current grad(). A parameter
  /// never reached by backward counts as zero gradient. Throws
  /// NumericalError, leaving parameters and state untouched, if any
  /// gradient is non-finite.
  void step();
  /// Same, with explicit gradients aligned to parameters().
  void step(const std::vector<Matrix>& grads);

  /// Clears moments and the step counter.
  void reset();

  std::size_t steps() const { return t_; }
  const NadamConfig& config() const { return config_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  std::vector<Tensor> params_;
  NadamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t t_ = 0;
};

/// Euclidean norm of all gradients of `params` taken together.
double gradient_norm(const std::vector<Tensor>& params);

}  // namespace mineica
