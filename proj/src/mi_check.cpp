#include "mineica/mi_check.hpp"

#include "mineica/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mineica {

double gaussian_mutual_information(double rho) { return -0.5 * std::log1p(-rho * rho); }

Matrix sample_bivariate_gaussian(double rho, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tail = std::sqrt(1.0 - rho * rho);
  Matrix z(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double a = normal(rng);
    const double b = normal(rng);
    z(r, 0) = a;
    z(r, 1) = rho * a + tail * b;
  }
  return z;
}

MiCheckResult check_gaussian_mi(const MiCheckConfig& c) {
  if (!(std::abs(c.rho) < 1.0)) throw ContractError("check_gaussian_mi: need |rho| < 1");
  if (c.samples < 100) throw ContractError("check_gaussian_mi: need at least 100 samples");
  if (c.epochs < 1 || c.average_last < 1) throw ContractError("check_gaussian_mi: empty schedule");

  const Tensor z(sample_bivariate_gaussian(c.rho, c.samples,
                                           derive_seed(c.seed, SeedStream::gaussian_data)));
  const MineModel model(2, c.network, derive_seed(c.seed, SeedStream::mine_init));
  Nadam opt(model.parameters(), NadamConfig{.lr = c.lr});
  Rng perm_rng(derive_seed(c.seed, SeedStream::permutations));

  MiCheckResult out;
  out.analytic = gaussian_mutual_information(c.rho);
  out.trajectory.reserve(c.epochs);
  for (std::size_t e = 0; e < c.epochs; ++e) {
    const auto perm = random_permutation(c.samples, perm_rng);
    const Tensor bound = mine_loss_component(model, 0, make_mine_batch(z, 0, perm));
    const double value = bound.item();
    if (!std::isfinite(value)) throw NumericalError("check_gaussian_mi: estimator diverged");
    out.trajectory.push_back(value);
    backward(neg(bound));
    opt.step();
  }

  const std::size_t k = std::min(c.average_last, out.trajectory.size());
  out.estimate =
      std::accumulate(out.trajectory.end() - static_cast<std::ptrdiff_t>(k), out.trajectory.end(),
                      0.0) /
      static_cast<double>(k);
  out.max_estimate = *std::max_element(out.trajectory.begin(), out.trajectory.end());
  out.within_band = out.estimate >= out.analytic - c.lower_slack &&
                    out.estimate <= out.analytic + c.upper_slack;
  return out;
}

}  // namespace mineica
