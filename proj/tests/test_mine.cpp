#include <doctest.h>

#include "mineica/mine.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numeric>

using namespace mineica;
using test::random_normal;

namespace {

std::vector<std::size_t> identity_perm(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Every weight zero, last bias c: T is the constant c.
void make_constant(MineModel& model, double c) {
  for (auto& p : model.parameters()) p.mutable_value().setZero();
  for (std::size_t i = 0; i < model.n_components(); ++i) {
    const_cast<Mlp&>(model.network(i)).layers().back().bias()->mutable_value().setConstant(c);
  }
}

}  // namespace

TEST_CASE("batch layout puts the chosen component first") {
  const Tensor z = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  const std::vector<std::size_t> perm{1, 0};
  const MineBatch b = make_mine_batch(z, 1, perm);
  // joint rows: (z_i, z_-i in order)
  CHECK(b.joint.value() == Tensor::from_rows({{2, 1, 3}, {5, 4, 6}}).value());
  // marginal: z_i taken from the permuted row
  CHECK(b.marginal.value() == Tensor::from_rows({{5, 1, 3}, {2, 4, 6}}).value());
  CHECK_THROWS_AS(make_mine_batch(z, 3, perm), ContractError);
  const std::vector<std::size_t> bad{0, 0};
  CHECK_THROWS_AS(make_mine_batch(z, 0, bad), ContractError);
}

TEST_CASE("single-row batch has a zero bound") {
  MineModel model(2, MineConfig{.hidden_width = 8, .depth = 3}, 1);
  const Tensor z(random_normal(1, 2, 2));
  const std::vector<std::size_t> p{0};
  CHECK(std::abs(mine_loss_component(model, 0, make_mine_batch(z, 0, p)).item()) < 1e-12);
}

TEST_CASE("identity permutation gives a bound of at most zero") {
  // With marginal == joint, mean T - log mean exp T <= 0 by Jensen.
  MineModel model(3, MineConfig{.hidden_width = 16, .depth = 4}, 3);
  const Tensor z(random_normal(50, 3, 4));
  for (std::size_t i = 0; i < 3; ++i) {
    const auto p = identity_perm(50);
    const double l = mine_loss_component(model, i, make_mine_batch(z, i, p)).item();
    CHECK(l <= 1e-12);
  }
}

TEST_CASE("constant statistics network gives exactly zero") {
  MineModel model(3, MineConfig{.hidden_width = 8, .depth = 3}, 5);
  make_constant(model, 1.7);
  Rng rng(6);
  const MineLoss loss = mine_loss_total(model, Tensor(random_normal(40, 3, 7)), rng);
  CHECK(std::abs(loss.total.item()) < 1e-12);
  for (double c : loss.components) CHECK(std::abs(c) < 1e-12);
}

TEST_CASE("log_mean_exp matches the direct formula and is shift invariant") {
  const Matrix x = random_normal(30, 1, 8);
  const double direct = std::log(x.array().exp().mean());
  CHECK(log_mean_exp(Tensor(x)).item() == doctest::Approx(direct).epsilon(1e-13));

  const Matrix shifted = (x.array() + 5.0).matrix();
  CHECK(std::abs(log_mean_exp(Tensor(shifted)).item() - direct - 5.0) < 1e-9);

  // Large magnitudes stay finite.
  const Tensor big = Tensor::from_rows({{50.0}, {-50.0}, {49.0}});
  const double v = log_mean_exp(big).item();
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(50.0 + std::log((1.0 + std::exp(-100.0) + std::exp(-1.0)) / 3.0)));
  const Tensor big2 = Tensor::from_rows({{800.0}, {790.0}});
  CHECK(std::isfinite(log_mean_exp(big2).item()));
}

TEST_CASE("adding a constant to T leaves the bound unchanged") {
  MineModel model(2, MineConfig{.hidden_width = 8, .depth = 3}, 9);
  const Tensor z(random_normal(60, 2, 10));
  Rng r1(11);
  const auto perms = draw_permutations(60, 2, r1);
  const double before = mine_loss_total(model, z, perms).total.item();
  for (std::size_t i = 0; i < 2; ++i) {
    const_cast<Mlp&>(model.network(i)).layers().back().bias()->mutable_value().array() += 3.25;
  }
  const double after = mine_loss_total(model, z, perms).total.item();
  CHECK(std::abs(before - after) < 1e-9);
}

TEST_CASE("total is the sum of the component bounds") {
  for (MineMode mode : {MineMode::shared, MineMode::copies}) {
    MineModel model(3, MineConfig{.hidden_width = 8, .depth = 3, .mode = mode}, 12);
    const Tensor z(random_normal(25, 3, 13));
    Rng rng(14);
    const auto perms = draw_permutations(25, 3, rng);
    const MineLoss loss = mine_loss_total(model, z, perms);
    double sum_direct = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double li = mine_loss_component(model, i, make_mine_batch(z, i, perms[i])).item();
      CHECK(loss.components[i] == doctest::Approx(li).epsilon(1e-12));
      sum_direct += li;
    }
    CHECK(loss.total.item() == doctest::Approx(sum_direct).epsilon(1e-12));
  }
}

TEST_CASE("network input width and per-mode parameter sharing") {
  MineModel shared(3, MineConfig{}, 15);
  CHECK(shared.network(0).in_dim() == 3);
  CHECK(shared.network(0).depth() == 7);
  CHECK(&shared.network(0) == &shared.network(2));
  CHECK(shared.parameters().size() == 14);

  MineModel copies(3, MineConfig{.mode = MineMode::copies}, 15);
  CHECK(&copies.network(0) != &copies.network(1));
  CHECK(copies.parameters().size() == 42);
}

TEST_CASE("mine loss gradient matches finite differences") {
  MineModel model(3, MineConfig{.hidden_width = 6, .depth = 3}, 16);
  for (auto& p : model.parameters()) {
    if (p.rows() == 1) p.mutable_value() = random_normal(1, p.cols(), 17).cwiseAbs() * 0.3 + Matrix::Constant(1, p.cols(), 0.1);
  }
  Tensor z(random_normal(12, 3, 18), true);
  Rng rng(19);
  const auto perms = draw_permutations(12, 3, rng);
  auto f = [&] { return mine_loss_total(model, z, perms).total; };
  backward(f());
  const auto num = test::numeric_gradient({z}, [&] { return f().item(); });
  CHECK(test::max_relative_error(z.grad(), num[0]) < 1e-4);
}

TEST_CASE("contracts") {
  CHECK_THROWS_AS(MineModel(1, MineConfig{.hidden_width = 4, .depth = 2}, 20), ContractError);
  MineModel two(2, MineConfig{.hidden_width = 4, .depth = 2}, 23);
  const std::vector<std::vector<std::size_t>> one_perm{identity_perm(10)};
  CHECK_THROWS_AS(mine_loss_total(two, Tensor(random_normal(10, 2, 24)), one_perm), ContractError);
}

TEST_CASE("reinitialize keeps tensor identity but changes values") {
  MineModel model(2, MineConfig{.hidden_width = 8, .depth = 3}, 25);
  const auto before = model.parameters();
  const Matrix w0 = before[0].value();
  model.reinitialize(26);
  const auto after = model.parameters();
  CHECK(before[0].same_node(after[0]));
  CHECK_FALSE(test::bit_identical(w0, after[0].value()));
}
