#pragma once

#include "mineica/nn.hpp"
#include "mineica/random.hpp"

#include <cstdint>
#include <vector>

namespace mineica {

/// One statistics network shared by all components, or one per component.
enum class MineMode { shared, copies };

struct MineConfig {
  std::size_t hidden_width = 64;
  std::size_t depth = 7;  // linear layers, relu between them
  MineMode mode = MineMode::shared;
};

/// Statistics network(s) T(z_i ; z_-i) -> scalar.
///
/// A row fed to the network holds the singled-out component in column 0 and
/// the remaining components, in their original order, in columns 1..M-1.
class MineModel {
 public:
  MineModel(std::size_t n_components, MineConfig config, std::uint64_t seed);

  /// Network used when component `i` is singled out.
  const Mlp& network(std::size_t i) const;
  Tensor forward(std::size_t i, const Tensor& rows) const;

  std::size_t n_components() const { return n_components_; }
  const MineConfig& config() const { return config_; }
  std::vector<Tensor> parameters() const;

  /// Redraws every parameter in place (same tensors, new values).
  void reinitialize(std::uint64_t seed);

 private:
  std::size_t n_components_;
  MineConfig config_;
  std::vector<Mlp> nets_;
};

/// Joint and product-of-marginals samples for one singled-out component.
struct MineBatch {
  Tensor joint;     // rows (z[b,i], z[b,-i])
  Tensor marginal;  // rows (z[perm[b],i], z[b,-i])
};

/// Differentiable with respect to z. Throws ContractError for i >= M or an
/// invalid permutation.
MineBatch make_mine_batch(const Tensor& z, std::size_t i, std::span<const std::size_t> perm);

/// log(mean(exp(x))) over all entries, shifted by max(x) before exponentiating.
Tensor log_mean_exp(const Tensor& x);

/// Donsker-Varadhan bound L_i = mean T(joint) - log mean exp T(marginal).
Tensor mine_loss_component(const MineModel& model, std::size_t i, const MineBatch& batch);

struct MineLoss {
  Tensor total;                    // 1x1, sum over components
  std::vector<double> components;  // L_i values
};

/// Sum of L_i over all components with one permutation per component.
/// Throws ContractError when M < 2 or permutation count != M.
MineLoss mine_loss_total(const MineModel& model, const Tensor& z,
                         std::span<const std::vector<std::size_t>> perms);

/// Draws a fresh permutation per component from `rng`.
MineLoss mine_loss_total(const MineModel& model, const Tensor& z, Rng& rng);

std::vector<std::vector<std::size_t>> draw_permutations(std::size_t batch, std::size_t n_components,
                                                        Rng& rng);

}  // namespace mineica
