#include "mineica/mine.hpp"

#include <string>

namespace mineica {

namespace {

std::vector<std::size_t> mlp_dims(std::size_t in, const MineConfig& c) {
  std::vector<std::size_t> dims{in};
  for (std::size_t k = 0; k + 1 < c.depth; ++k) dims.push_back(c.hidden_width);
  dims.push_back(1);
  return dims;
}

bool is_permutation_of_range(std::span<const std::size_t> perm) {
  std::vector<bool> hit(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || hit[p]) return false;
    hit[p] = true;
  }
  return true;
}

}  // namespace

MineModel::MineModel(std::size_t n_components, MineConfig config, std::uint64_t seed)
    : n_components_(n_components), config_(config) {
  if (n_components < 2) throw ContractError("MineModel: need at least two components");
  if (config.depth < 1 || config.hidden_width < 1) throw ContractError("MineModel: empty network");
  const std::size_t copies = config.mode == MineMode::shared ? 1 : n_components;
  for (std::size_t k = 0; k < copies; ++k) {
    nets_.emplace_back(mlp_dims(n_components, config), derive_seed(seed, k));
  }
}

const Mlp& MineModel::network(std::size_t i) const {
  if (i >= n_components_) throw ContractError("MineModel: component index out of range");
  return config_.mode == MineMode::shared ? nets_.front() : nets_[i];
}

Tensor MineModel::forward(std::size_t i, const Tensor& rows) const {
  return network(i).forward(rows);
}

std::vector<Tensor> MineModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& n : nets_) {
    auto p = n.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void MineModel::reinitialize(std::uint64_t seed) {
  const MineModel fresh(n_components_, config_, seed);
  auto dst = parameters();
  const auto src = fresh.parameters();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k].mutable_value() = src[k].value();
}

MineBatch make_mine_batch(const Tensor& z, std::size_t i, std::span<const std::size_t> perm) {
  const std::size_t m = z.cols();
  if (i >= m) {
    throw ContractError("make_mine_batch: component " + std::to_string(i) + " out of range for " +
                        std::to_string(m) + " columns");
  }
  if (perm.size() != z.rows() || !is_permutation_of_range(perm)) {
    throw ContractError("make_mine_batch: perm is not a permutation of the batch rows");
  }
  const Tensor single = slice_cols(z, i, 1);
  Tensor rest;
  if (m == 1) {
    return {single, gather_rows(single, perm)};
  } else if (i == 0) {
    rest = slice_cols(z, 1, m - 1);
  } else if (i == m - 1) {
    rest = slice_cols(z, 0, m - 1);
  } else {
    rest = concat_cols(slice_cols(z, 0, i), slice_cols(z, i + 1, m - i - 1));
  }
  return {concat_cols(single, rest), concat_cols(gather_rows(single, perm), rest)};
}

Tensor log_mean_exp(const Tensor& x) {
  const double shift = x.value().maxCoeff();
  return add_scalar(log(mean(exp(add_scalar(x, -shift)), Axis::all)), shift);
}

Tensor mine_loss_component(const MineModel& model, std::size_t i, const MineBatch& batch) {
  const Tensor t_joint = model.forward(i, batch.joint);
  const Tensor t_marginal = model.forward(i, batch.marginal);
  return sub(mean(t_joint, Axis::all), log_mean_exp(t_marginal));
}

MineLoss mine_loss_total(const MineModel& model, const Tensor& z,
                         std::span<const std::vector<std::size_t>> perms) {
  const std::size_t m = z.cols();
  const std::size_t b = z.rows();
  if (m < 2) throw ContractError("mine_loss_total: need at least two components");
  if (m != model.n_components()) throw ShapeError("mine_loss_total: component count mismatch");
  if (perms.size() != m) throw ContractError("mine_loss_total: need one permutation per component");

  // Every batch that goes through the same network is stacked into one
  // forward pass: [joint_0; marginal_0; joint_1; marginal_1; ...].
  std::vector<Tensor> blocks;
  blocks.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    MineBatch batch = make_mine_batch(z, i, perms[i]);
    blocks.push_back(std::move(batch.joint));
    blocks.push_back(std::move(batch.marginal));
  }
  std::vector<Tensor> outputs(m);
  if (model.config().mode == MineMode::shared) {
    const Tensor stacked = model.forward(0, concat_rows(blocks));
    for (std::size_t i = 0; i < m; ++i) outputs[i] = slice_rows(stacked, 2 * i * b, 2 * b);
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      outputs[i] = model.forward(i, concat_rows({blocks[2 * i], blocks[2 * i + 1]}));
    }
  }

  MineLoss out;
  for (std::size_t i = 0; i < m; ++i) {
    const Tensor t_joint = slice_rows(outputs[i], 0, b);
    const Tensor t_marginal = slice_rows(outputs[i], b, b);
    Tensor li = sub(mean(t_joint, Axis::all), log_mean_exp(t_marginal));
    out.components.push_back(li.item());
    out.total = i == 0 ? li : add(out.total, li);
  }
  return out;
}

std::vector<std::vector<std::size_t>> draw_permutations(std::size_t batch, std::size_t n_components,
                                                        Rng& rng) {
  std::vector<std::vector<std::size_t>> perms;
  perms.reserve(n_components);
  for (std::size_t i = 0; i < n_components; ++i) perms.push_back(random_permutation(batch, rng));
  return perms;
}

MineLoss mine_loss_total(const MineModel& model, const Tensor& z, Rng& rng) {
  const auto perms = draw_permutations(z.rows(), z.cols(), rng);
  return mine_loss_total(model, z, perms);
}

}  // namespace mineica
