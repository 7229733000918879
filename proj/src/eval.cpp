#include "mineica/eval.hpp"

#include "mineica/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mineica {

double unmixing_residual(const UnmixResult& r, const Matrix& observations) {
  const Matrix centered = observations.colwise() - r.center.col(0);
  return (r.sources - r.unmixing * centered).cwiseAbs().maxCoeff();
}

Matrix symmetric_decorrelation(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w * w.transpose());
  const Matrix& v = eig.eigenvectors();
  return v * eig.eigenvalues().array().rsqrt().matrix().asDiagonal() * v.transpose() * w;
}

UnmixResult fastica(const Matrix& observations, std::size_t n_components, std::uint64_t seed,
                    FastIcaConfig config) {
  const Eigen::Index n = observations.rows();
  const Eigen::Index t = observations.cols();
  const auto m = static_cast<Eigen::Index>(n_components);
  if (m < 1 || n < m) throw ContractError("fastica: need 1 <= n_components <= channels");
  if (t <= n) throw ContractError("fastica: need more samples than channels");

  UnmixResult out;
  out.method = "fastica";
  out.center = observations.rowwise().mean();
  const Matrix xc = observations.colwise() - out.center.col(0);

  // PCA whitening to M dimensions: K = D^{-1/2} E^T on the top-M eigenpairs.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(xc * xc.transpose() / static_cast<double>(t));
  const Eigen::VectorXd d = eig.eigenvalues().tail(m).reverse();
  const Matrix e = eig.eigenvectors().rightCols(m).rowwise().reverse();
  if (!(d.array() > 0.0).all()) throw NumericalError("fastica: rank-deficient observations");
  const Matrix k = d.array().rsqrt().matrix().asDiagonal() * e.transpose();
  const Matrix xw = k * xc;

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(m, m);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  w = symmetric_decorrelation(w);

  const auto inv_t = 1.0 / static_cast<double>(t);
  out.converged = false;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    const Matrix wx = w * xw;
    const Matrix g = wx.array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean = (1.0 - g.array().square()).matrix().rowwise().mean();
    Matrix w_next = (g * xw.transpose()) * inv_t - g_prime_mean.asDiagonal() * w;
    w_next = symmetric_decorrelation(w_next);
    const double change = ((w_next * w.transpose()).diagonal().cwiseAbs().array() - 1.0)
                              .abs()
                              .maxCoeff();
    w = std::move(w_next);
    out.iterations = it;
    if (change < config.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.unmixing = w * k;
  out.sources = out.unmixing * xc;
  return out;
}

double pearson(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size()) throw ShapeError("pearson: length mismatch");
  const Eigen::ArrayXd da = (a.array() - a.mean()).transpose();
  const Eigen::ArrayXd db = (b.array() - b.mean()).transpose();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  if (saa == 0.0 || sbb == 0.0) throw ContractError("pearson: constant row");
  return (da * db).sum() / std::sqrt(saa * sbb);
}

MatchedCorrelation matched_correlation(const Matrix& recovered, const Matrix& sources) {
  if (recovered.rows() != sources.rows() || recovered.cols() != sources.cols()) {
    throw ShapeError("matched_correlation: shape mismatch");
  }
  const auto m = static_cast<std::size_t>(sources.rows());
  if (m == 0 || m > 8) throw ContractError("matched_correlation: supports 1..8 rows");

  Matrix r(recovered.rows(), sources.rows());
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      r(i, j) = std::abs(pearson(recovered.row(i), sources.row(j)));
    }
  }

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  MatchedCorrelation best;
  double best_total = -1.0;
  do {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      total += r(static_cast<Eigen::Index>(perm[j]), static_cast<Eigen::Index>(j));
    }
    if (total > best_total) {
      best_total = total;
      best.assignment = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  for (std::size_t j = 0; j < m; ++j) {
    best.per_source.push_back(
        r(static_cast<Eigen::Index>(best.assignment[j]), static_cast<Eigen::Index>(j)));
  }
  best.mean = best_total / static_cast<double>(m);
  return best;
}

double amari_index(const Matrix& p) {
  const Eigen::Index m = p.rows();
  if (m != p.cols() || m < 1) throw ContractError("amari_index: matrix must be square");
  const Matrix a = p.cwiseAbs();
  const Eigen::VectorXd row_max = a.rowwise().maxCoeff();
  const Eigen::RowVectorXd col_max = a.colwise().maxCoeff();
  if ((row_max.array() == 0.0).any() || (col_max.array() == 0.0).any()) {
    throw ContractError("amari_index: zero row or column");
  }
  if (m == 1) return 0.0;
  const double rows = (a.rowwise().sum().array() / row_max.array() - 1.0).sum();
  const double cols = (a.colwise().sum().array() / col_max.array() - 1.0).sum();
  return (rows + cols) / (2.0 * static_cast<double>(m) * static_cast<double>(m - 1));
}

UnmixResult effective_unmixing(Encoder& encoder, const Matrix& observations) {
  const Tensor x(Matrix(observations.transpose()));
  const Matrix y = encoder.forward(x).value();
  const auto& stats = encoder.whitening().last_stats();

  UnmixResult out;
  out.method = "mine-ica";
  // Rows: y = (x - mean_x) W C^{-1/2}; the whitening mean is mean_x W.
  out.unmixing = (encoder.linear().weights().value() * stats->inverse_sqrt).transpose();
  out.center = observations.rowwise().mean();
  out.sources = y.transpose();
  return out;
}

EvalReport evaluate(const UnmixResult& result, const Matrix& sources, const Matrix& mixing,
                    std::uint64_t seed) {
  EvalReport rep;
  rep.method = result.method;
  const MatchedCorrelation mc = matched_correlation(result.sources, sources);
  rep.mean_matched_correlation = mc.mean;
  rep.per_source_correlations = mc.per_source;
  rep.assignment = mc.assignment;
  rep.amari_index = amari_index(result.unmixing * mixing);
  rep.converged = result.converged;
  rep.iterations = result.iterations;
  rep.seed = seed;
  return rep;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["mean_matched_correlation"] = r.mean_matched_correlation;
  j["per_source_correlations"] = r.per_source_correlations;
  j["amari_index"] = r.amari_index;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["seed"] = r.seed;
  return j.dump(2);
}

}  // namespace mineica
