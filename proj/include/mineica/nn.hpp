#pragma once

#include "mineica/tensor.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mineica {

enum class InitScheme {
  he_uniform,      // U(-sqrt(6/fan_in), +sqrt(6/fan_in)), for layers followed by relu
  xavier_uniform,  // U(-sqrt(6/(fan_in+fan_out)), ...), for linear outputs
  zeros,
};

double init_bound(InitScheme scheme, std::size_t fan_in, std::size_t fan_out);

/// rows x cols tensor drawn from `scheme` with fan_in = rows, fan_out = cols.
/// Deterministic in `seed`.
Tensor init_params(std::size_t rows, std::size_t cols, std::uint64_t seed, InitScheme scheme,
                   bool requires_grad = true);

/// Toggles requires_grad on a parameter set. Frozen parameters are left out
/// of the graph entirely, so they never receive gradients.
void set_trainable(std::vector<Tensor>& params, bool trainable);

/// Dense layer y = x W (+ b). W is in x out.
///
/// Copies share parameter storage (Tensor is a handle); use clone() for an
/// independent copy.
class LinearLayer {
 public:
  LinearLayer(std::size_t in, std::size_t out, bool with_bias, std::uint64_t seed,
              InitScheme scheme);
  LinearLayer(Tensor weights, std::optional<Tensor> bias);

  Tensor forward(const Tensor& x) const;

  std::size_t in_dim() const { return weights_.rows(); }
  std::size_t out_dim() const { return weights_.cols(); }
  const Tensor& weights() const { return weights_; }
  Tensor& weights() { return weights_; }
  const std::optional<Tensor>& bias() const { return bias_; }
  std::optional<Tensor>& bias() { return bias_; }
  std::vector<Tensor> parameters() const;

  LinearLayer clone() const;

 private:
  Tensor weights_;
  std::optional<Tensor> bias_;
};

/// Stack of biased linear layers with relu after every layer but the last.
class Mlp {
 public:
  /// dims = {in, h1, ..., out}; dims.size() - 1 layers. Hidden layers use
  /// He-uniform init, the output layer Xavier-uniform; biases start at zero.
  Mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);
  explicit Mlp(std::vector<LinearLayer> layers);

  Tensor forward(const Tensor& x) const;

  std::size_t depth() const { return layers_.size(); }
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  const std::vector<LinearLayer>& layers() const { return layers_; }
  std::vector<LinearLayer>& layers() { return layers_; }
  std::vector<Tensor> parameters() const;

  Mlp clone() const;

 private:
  std::vector<LinearLayer> layers_;
};

/// Batch statistics cached by the whitening op.
struct WhiteningStats {
  Matrix mean;              // 1 x M
  Eigen::VectorXd eigenvalues;   // of the regularized covariance, ascending
  Matrix eigenvectors;      // columns
  Matrix inverse_sqrt;      // C^{-1/2}, symmetric M x M
  double epsilon = 0.0;
};

/// ZCA whitening statistics for a B x M batch: C = Zc^T Zc / B + eps I.
/// Throws ContractError unless B > M, NumericalError on non-finite input or
/// a non-positive eigenvalue.
WhiteningStats whitening_stats(const Matrix& z, double epsilon);

/// Gradient of the whitening map y = (z - mean) C^{-1/2} with respect to z,
/// including the dependence of the mean and C on z.
///
/// The eigen-derivative of f(l) = l^{-1/2} uses the divided difference
///   (f(li) - f(lj)) / (li - lj) = -1 / (sqrt(li) sqrt(lj) (sqrt(li) + sqrt(lj)))
/// which never divides by an eigenvalue gap and equals f'(l) at li == lj, so
/// degenerate spectra need no clamp.
Matrix whiten_backward(const WhiteningStats& stats, const Matrix& centered, const Matrix& grad);

/// Differentiable ZCA whitening with per-batch statistics.
class WhiteningLayer {
 public:
  static constexpr double kDefaultEpsilon = 1e-8;

  explicit WhiteningLayer(double epsilon = kDefaultEpsilon);

  /// Caches the batch statistics; see last_stats().
  Tensor forward(const Tensor& z);

  double epsilon() const { return epsilon_; }
  const std::optional<WhiteningStats>& last_stats() const { return stats_; }

 private:
  double epsilon_;
  std::optional<WhiteningStats> stats_;
};

/// Stateless form of WhiteningLayer::forward.
Tensor whiten(const Tensor& z, double epsilon, WhiteningStats* stats_out = nullptr);

}  // namespace mineica
