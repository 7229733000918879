#include <doctest.h>

#include "mineica/nn.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace mineica;
using test::column_covariance;
using test::max_relative_error;
using test::numeric_gradient;
using test::random_normal;

TEST_CASE("linear layer with identity and doubled identity weights") {
  const Tensor x(random_normal(5, 3, 1));
  LinearLayer id(Tensor(Matrix::Identity(3, 3)), std::nullopt);
  CHECK(test::bit_identical(id.forward(x).value(), x.value()));
  LinearLayer twice(Tensor(2.0 * Matrix::Identity(3, 3)), Tensor(Matrix::Zero(1, 3)));
  CHECK(test::bit_identical(twice.forward(x).value(), (2.0 * x.value()).eval()));
  CHECK_THROWS_AS(id.forward(Tensor(5, 4)), ShapeError);
  CHECK_THROWS_AS(LinearLayer(Tensor(3, 2), Tensor(1, 3)), ShapeError);
}

TEST_CASE("one-layer mlp is a plain linear map") {
  LinearLayer l(Tensor(random_normal(3, 2, 2)), Tensor(random_normal(1, 2, 3)));
  Mlp net(std::vector<LinearLayer>{l});
  const Tensor x(random_normal(4, 3, 4));
  const Matrix expected = (x.value() * l.weights().value()).rowwise() + l.bias()->value().row(0);
  CHECK((net.forward(x).value() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mlp with zero weights outputs its last bias") {
  Mlp net({3, 8, 8, 1}, 5);
  for (auto& l : net.layers()) l.weights().mutable_value().setZero();
  net.layers().back().bias()->mutable_value().setConstant(0.75);
  const Tensor out = net.forward(Tensor(random_normal(6, 3, 6)));
  CHECK(out.value().isConstant(0.75));
}

TEST_CASE("seven-layer statistics network shape") {
  std::vector<std::size_t> dims{3};
  for (int k = 0; k < 6; ++k) dims.push_back(64);
  dims.push_back(1);
  Mlp net(dims, 7);
  CHECK(net.depth() == 7);
  const Tensor out = net.forward(Tensor(random_normal(10, 3, 8)));
  CHECK(out.rows() == 10);
  CHECK(out.cols() == 1);
  CHECK_THROWS_AS(net.forward(Tensor(10, 4)), ShapeError);
}

TEST_CASE("mlp gradient matches finite differences") {
  Mlp net({3, 6, 5, 1}, 9);
  for (auto& l : net.layers()) l.bias()->mutable_value() = random_normal(1, l.out_dim(), 10).cwiseAbs();
  Tensor x(random_normal(7, 3, 11), true);
  auto params = net.parameters();
  std::vector<Tensor> all = params;
  all.push_back(x);
  auto f = [&] { return mean(net.forward(x), Axis::all); };
  backward(f());
  const auto num = numeric_gradient(all, [&] { return f().item(); });
  for (std::size_t k = 0; k < all.size(); ++k) {
    CHECK(max_relative_error(all[k].grad(), num[k]) < 1e-4);
  }
}

TEST_CASE("initializer bounds and variance") {
  CHECK(init_bound(InitScheme::he_uniform, 64, 64) == doctest::Approx(std::sqrt(6.0 / 64.0)));
  CHECK(init_bound(InitScheme::xavier_uniform, 64, 1) == doctest::Approx(std::sqrt(6.0 / 65.0)));

  const Tensor w = init_params(64, 64, 12, InitScheme::he_uniform);
  const double bound = std::sqrt(6.0 / 64.0);
  CHECK(w.value().cwiseAbs().maxCoeff() <= bound);

  // U(-a, a) has variance a^2 / 3 = 2 / fan_in.
  const Tensor big = init_params(1000, 100, 13, InitScheme::he_uniform);
  const double a = std::sqrt(6.0 / 1000.0);
  const double var = big.value().array().square().mean();
  CHECK(std::abs(var - a * a / 3.0) / (a * a / 3.0) < 0.02);

  CHECK(init_params(3, 3, 1, InitScheme::zeros).value().isZero());
}

TEST_CASE("initialization is a function of the seed") {
  Mlp a({3, 16, 1}, 42);
  Mlp b({3, 16, 1}, 42);
  Mlp c({3, 16, 1}, 43);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  const auto pc = c.parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(test::bit_identical(pa[k].value(), pb[k].value()));
  CHECK_FALSE(test::bit_identical(pa[0].value(), pc[0].value()));
}

TEST_CASE("clone is independent of the original") {
  Mlp a({2, 4, 1}, 1);
  Mlp b = a.clone();
  b.layers()[0].weights().mutable_value().setZero();
  CHECK_FALSE(a.layers()[0].weights().value().isZero());
}

TEST_CASE("whitened output has identity covariance and zero mean") {
  Matrix z = random_normal(400, 3, 14);
  z.col(1) += 3.0 * z.col(0);
  z.col(2) = 0.5 * z.col(2) + z.col(1);
  z.array() += 5.0;
  const Tensor y = whiten(Tensor(z), 1e-8);
  const Matrix cov = column_covariance(y.value());
  CHECK((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(y.value().colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ZCA of already white data is nearly the identity") {
  const Matrix z0 = random_normal(500, 3, 15);
  const Matrix w0 = whiten(Tensor(z0), 1e-12).value();
  const Matrix w1 = whiten(Tensor(w0), 1e-12).value();
  CHECK((w1 - w0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("whitening backward for one column matches the closed form") {
  // y = c / s with c = z - mean(z), s = sqrt(var + eps). For L = sum w*y:
  // dL/dz_j = (w_j - mean(w)) / s - c_j * sum(w*c) / (B s^3).
  const double eps = 1e-8;
  Tensor z(random_normal(20, 1, 16), true);
  const Matrix w = random_normal(20, 1, 17);
  backward(sum(mul(whiten(z, eps), Tensor(w))));

  const double b = 20.0;
  const Eigen::VectorXd zv = z.value().col(0);
  const Eigen::VectorXd c = zv.array() - zv.mean();
  const double s = std::sqrt(c.squaredNorm() / b + eps);
  const Eigen::VectorXd wv = w.col(0);
  const Eigen::VectorXd expected =
      (wv.array() - wv.mean()) / s - c.array() * wv.dot(c) / (b * s * s * s);
  CHECK((z.grad().col(0) - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("whitening gradient matches finite differences") {
  Matrix z0 = random_normal(32, 3, 18);
  z0.col(2) += 0.8 * z0.col(0);
  Tensor z(z0, true);
  const Tensor w(random_normal(32, 3, 19));
  auto f = [&] { return sum(mul(exp(scale(whiten(z, 1e-8), 0.5)), w)); };
  backward(f());
  const auto num = numeric_gradient({z}, [&] { return f().item(); });
  CHECK(max_relative_error(z.grad(), num[0]) < 1e-4);
}

TEST_CASE("whitening gradient stays finite for a degenerate spectrum") {
  // Exactly white input: all eigenvalues equal.
  const Matrix white = whiten(Tensor(random_normal(64, 3, 20)), 0.0 + 1e-300).value();
  Tensor z(white, true);
  backward(sum(mul(whiten(z, 1e-8), Tensor(random_normal(64, 3, 21)))));
  CHECK(z.grad().allFinite());
}

TEST_CASE("whitening contracts") {
  CHECK_THROWS_AS(whiten(Tensor(random_normal(3, 3, 22)), 1e-8), ContractError);
  Matrix bad = random_normal(10, 2, 23);
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(whiten(Tensor(bad), 1e-8), NumericalError);
  CHECK_THROWS_AS(WhiteningLayer(0.0), ContractError);

  WhiteningLayer layer;
  CHECK_FALSE(layer.last_stats().has_value());
  layer.forward(Tensor(random_normal(10, 2, 24)));
  REQUIRE(layer.last_stats().has_value());
  CHECK(layer.last_stats()->inverse_sqrt.rows() == 2);
}
