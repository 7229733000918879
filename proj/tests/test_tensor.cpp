#include <doctest.h>

#include "mineica/tensor.hpp"
#include "test_support.hpp"

using namespace mineica;
using mineica::test::max_relative_error;
using mineica::test::numeric_gradient;
using mineica::test::random_normal;

TEST_CASE("matmul hand-computed and identity") {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor b = Tensor::from_rows({{1}, {1}});
  const Tensor c = matmul(a, b);
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 1);
  CHECK(c(0, 0) == 3.0);
  CHECK(c(1, 0) == 7.0);

  const Tensor x(random_normal(3, 5, 1));
  const Tensor eye(Matrix::Identity(3, 3));
  CHECK(test::bit_identical(matmul(eye, x).value(), x.value()));
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(Tensor(2, 3), Tensor(2, 3)), ShapeError);
}

TEST_CASE("gradient of sum(a b) w.r.t. a matches finite differences") {
  Tensor a(random_normal(3, 4, 2), true);
  const Tensor b(random_normal(4, 2, 3));
  backward(sum(matmul(a, b)));
  const auto num = numeric_gradient({a}, [&] { return sum(matmul(a, b)).item(); });
  CHECK(max_relative_error(a.grad(), num[0]) < 1e-6);
}

TEST_CASE("elementwise forward values") {
  const Tensor r = relu(Tensor::from_rows({{-1, 0, 2}}));
  CHECK(r(0, 0) == 0.0);
  CHECK(r(0, 1) == 0.0);
  CHECK(r(0, 2) == 2.0);
  CHECK(log(exp(Tensor::from_rows({{0.5}}))).item() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(neg(Tensor::from_rows({{2}})).item() == -2.0);
  CHECK(add(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3, 4}}))(0, 1) == 6.0);
  CHECK(sub(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3, 4}}))(0, 0) == -2.0);
  CHECK(mul(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{3, 4}}))(0, 1) == 8.0);
}

TEST_CASE("relu gradient is zero on the inactive side and at zero") {
  Tensor x = Tensor::from_rows({{-1.0, 0.0, 2.0}}, true);
  backward(sum(relu(x)));
  CHECK(x.grad()(0, 0) == 0.0);
  CHECK(x.grad()(0, 1) == 0.0);
  CHECK(x.grad()(0, 2) == 1.0);
}

TEST_CASE("elementwise errors") {
  CHECK_THROWS_AS(add(Tensor(2, 2), Tensor(2, 3)), ShapeError);
  CHECK_THROWS_AS(mul(Tensor(1, 2), Tensor(2, 1)), ShapeError);
  CHECK_THROWS_AS(log(Tensor::from_rows({{1.0, 0.0}})), DomainError);
  CHECK_THROWS_AS(log(Tensor::from_rows({{-2.0}})), DomainError);
}

TEST_CASE("mean over all and over rows") {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(mean(a, Axis::all).item() == 2.5);
  const Tensor r = mean(a, Axis::rows);
  CHECK(r.rows() == 1);
  CHECK(r(0, 0) == 2.0);
  CHECK(r(0, 1) == 3.0);

  Tensor col(Matrix::Constant(5, 1, 3.0), true);
  backward(mean(col, Axis::all));
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(col.grad()(i, 0) == doctest::Approx(0.2));
}

TEST_CASE("concat_cols and split_cols") {
  const Tensor c = concat_cols(Tensor::from_rows({{1}}), Tensor::from_rows({{2, 3}}));
  CHECK(c.cols() == 3);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 2) == 3.0);
  CHECK_THROWS_AS(concat_cols(Tensor(2, 1), Tensor(3, 1)), ShapeError);

  const Tensor a(random_normal(4, 3, 4));
  const Tensor b(random_normal(4, 2, 5));
  auto [l, r] = split_cols(concat_cols(a, b), 3);
  CHECK(test::bit_identical(l.value(), a.value()));
  CHECK(test::bit_identical(r.value(), b.value()));
}

TEST_CASE("concat_cols gradient routing matches finite differences") {
  Tensor a(random_normal(4, 3, 6), true);
  Tensor b(random_normal(4, 2, 7), true);
  const Tensor w(random_normal(4, 5, 8));
  auto f = [&] { return sum(mul(concat_cols(a, b), w)); };
  backward(f());
  const auto num = numeric_gradient({a, b}, [&] { return f().item(); });
  CHECK(max_relative_error(a.grad(), num[0]) < 1e-4);
  CHECK(max_relative_error(b.grad(), num[1]) < 1e-4);
}

TEST_CASE("backward on trivial roots") {
  Tensor leaf(random_normal(3, 2, 9), true);
  backward(sum(leaf));
  CHECK(leaf.grad() == Matrix::Ones(3, 2));

  // Root with no dependence on the leaf: leaf gradient stays zero.
  Tensor other(random_normal(3, 2, 10), true);
  other.zero_grad();
  backward(sum(Tensor(random_normal(2, 2, 11))));
  CHECK(other.grad().isZero());

  CHECK_THROWS_AS(backward(leaf), ContractError);
}

TEST_CASE("backward zeroes before accumulating, so repeated calls agree") {
  Tensor x(random_normal(2, 2, 12), true);
  const Tensor root = sum(mul(x, x));
  backward(root);
  const Matrix first = x.grad();
  backward(root);
  CHECK(test::bit_identical(first, x.grad()));
}

TEST_CASE("composite mean(relu(W x)) gradient matches finite differences") {
  Tensor w(random_normal(4, 3, 13), true);
  Tensor x(random_normal(3, 6, 14), true);
  auto f = [&] { return mean(relu(matmul(w, x)), Axis::all); };
  backward(f());
  const auto num = numeric_gradient({w, x}, [&] { return f().item(); });
  CHECK(max_relative_error(w.grad(), num[0]) < 1e-4);
  CHECK(max_relative_error(x.grad(), num[1]) < 1e-4);
}

TEST_CASE("graph is topologically ordered and visits each node once") {
  Tensor x(random_normal(3, 3, 15), true);
  const Tensor y = add(mul(x, x), exp(x));  // x used three times
  const Tensor root = sum(y);
  Graph g(root);
  CHECK(g.is_topologically_ordered());
  // leaf, mul, exp, add, sum
  CHECK(g.size() == 5);
  backward(root);
  const Matrix expected = (2.0 * x.value().array() + x.value().array().exp()).matrix();
  CHECK((x.grad() - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward evaluation is deterministic") {
  const Tensor a(random_normal(16, 8, 16));
  const Tensor b(random_normal(8, 4, 17));
  auto f = [&] { return log(add_scalar(exp(relu(matmul(a, b))), 1.0)).value(); };
  CHECK(test::bit_identical(f(), f()));
}

TEST_CASE("rows: concat, slice and gather") {
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor b = Tensor::from_rows({{5, 6}});
  const Tensor c = concat_rows({a, b});
  CHECK(c.rows() == 3);
  CHECK(c(2, 1) == 6.0);
  CHECK(slice_rows(c, 1, 2)(0, 0) == 3.0);
  CHECK_THROWS_AS(slice_rows(c, 2, 2), ShapeError);

  std::vector<std::size_t> idx{1, 1, 0};
  Tensor x = Tensor::from_rows({{1, 2}, {3, 4}}, true);
  const Tensor g = gather_rows(x, idx);
  CHECK(g(0, 0) == 3.0);
  CHECK(g(2, 1) == 2.0);
  backward(sum(g));
  CHECK(x.grad()(0, 0) == 1.0);
  CHECK(x.grad()(1, 0) == 2.0);
}

TEST_CASE("affine_relu agrees with relu(affine)") {
  const Tensor x(random_normal(6, 3, 18));
  const Tensor w(random_normal(3, 4, 19));
  const Tensor b(random_normal(1, 4, 20));
  CHECK(test::bit_identical(affine_relu(x, w, b).value(), relu(affine(x, w, b)).value()));
  CHECK_THROWS_AS(affine(x, w, Tensor(1, 3)), ShapeError);
}

TEST_CASE("property: analytic gradients match finite differences on random inputs") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Tensor a(random_normal(5, 4, seed), true);
    Tensor b(random_normal(4, 3, seed + 1000), true);
    Tensor bias(random_normal(1, 3, seed + 2000), true);
    const Tensor w(random_normal(5, 3, seed + 3000));
    auto f = [&] {
      const Tensor h = affine(a, b, bias);
      return sum(mul(exp(scale(h, 0.3)), w));
    };
    backward(f());
    const auto num = numeric_gradient({a, b, bias}, [&] { return f().item(); });
    CHECK(max_relative_error(a.grad(), num[0]) < 1e-4);
    CHECK(max_relative_error(b.grad(), num[1]) < 1e-4);
    CHECK(max_relative_error(bias.grad(), num[2]) < 1e-4);
  }
}
