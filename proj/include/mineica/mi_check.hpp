#pragma once

#include "mineica/mine.hpp"

#include <cstdint>
#include <vector>

namespace mineica {

/// I(X;Y) = -1/2 ln(1 - rho^2) for a standard bivariate Gaussian.
double gaussian_mutual_information(double rho);

/// n x 2 samples of a standard bivariate Gaussian with correlation rho.
Matrix sample_bivariate_gaussian(double rho, std::size_t n, std::uint64_t seed);

struct MiCheckConfig {
  double rho = 0.0;
  std::size_t samples = 5000;
  std::size_t epochs = 300;
  std::size_t average_last = 100;
  double lr = 0.005;
  std::uint64_t seed = 0;
  MineConfig network{};
  double lower_slack = 0.2;  // accept estimate >= MI - lower_slack
  double upper_slack = 0.1;  // accept estimate <= MI + upper_slack
};

struct MiCheckResult {
  double analytic = 0.0;
  double estimate = 0.0;      // mean of the bound over the last `average_last` epochs
  double max_estimate = 0.0;  // largest bound seen during training
  std::vector<double> trajectory;
  bool within_band = false;
};

/// Trains a statistics network full-batch on Gaussian pairs by ascending the
/// Donsker-Varadhan bound and compares the estimate with the closed form.
/// Throws ContractError for |rho| >= 1 or samples < 100, NumericalError on
/// divergence.
MiCheckResult check_gaussian_mi(const MiCheckConfig& config);

}  // namespace mineica
