#pragma once

#include "mineica/tensor.hpp"
#include "mineica/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mineica {

/// A linear unmixing: Y = U (X - center), U is M x N, center is N x 1.
struct UnmixResult {
  std::string method;
  Matrix sources;    // Y, M x T
  Matrix unmixing;   // U_eff, M x N
  Matrix center;     // N x 1, per-channel mean removed before unmixing
  bool converged = true;
  std::size_t iterations = 0;
};

/// max |Y - U (X - center)| over all entries.
double unmixing_residual(const UnmixResult& r, const Matrix& observations);

struct FastIcaConfig {
  double tolerance = 1e-6;
  std::size_t max_iterations = 500;
};

/// Parallel FastICA with the logcosh contrast (g = tanh) and symmetric
/// decorrelation W <- (W W^T)^{-1/2} W. X is N x T; requires N >= M and
/// T > N. On non-convergence returns the last iterate with converged = false.
UnmixResult fastica(const Matrix& observations, std::size_t n_components, std::uint64_t seed,
                    FastIcaConfig config = {});

/// (W W^T)^{-1/2} W.
Matrix symmetric_decorrelation(const Matrix& w);

/// Pearson correlation of two equal-length rows. Throws ContractError if
/// either row is constant.
double pearson(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b);

struct MatchedCorrelation {
  std::vector<std::size_t> assignment;   // assignment[j] = row of Y matched to source j
  std::vector<double> per_source;        // |r| for each source j
  double mean = 0.0;
};

/// Best one-to-one matching of recovered rows to source rows by total |r|,
/// found by exhaustive search (M <= 8).
MatchedCorrelation matched_correlation(const Matrix& recovered, const Matrix& sources);

/// Normalized Amari index in [0, 1]; zero iff P is a scaled permutation.
/// Throws ContractError on a zero row or column or a non-square P.
double amari_index(const Matrix& p);

/// The single linear map equivalent to the encoder at the batch statistics
/// of X (N x T): U_eff = (W_linear C^{-1/2})^T, center = mean of X.
UnmixResult effective_unmixing(Encoder& encoder, const Matrix& observations);

struct EvalReport {
  std::string method;
  double mean_matched_correlation = 0.0;
  std::vector<double> per_source_correlations;
  std::vector<std::size_t> assignment;
  double amari_index = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
};

EvalReport evaluate(const UnmixResult& result, const Matrix& sources, const Matrix& mixing,
                    std::uint64_t seed);

/// JSON object with the fixed key set {method, mean_matched_correlation,
/// per_source_correlations, amari_index, converged, iterations, seed}.
std::string to_json(const EvalReport& report);

}  // namespace mineica
