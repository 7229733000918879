#include <doctest.h>

#include "mineica/signals.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mineica;

TEST_CASE("waveform values") {
  CHECK(waveform_value(Waveform::sine, 0.0) == 0.0);
  CHECK(waveform_value(Waveform::sine, std::numbers::pi / 2) == doctest::Approx(1.0));
  CHECK(waveform_value(Waveform::square, std::numbers::pi / 2) == 1.0);
  CHECK(waveform_value(Waveform::square, 3 * std::numbers::pi / 2) == -1.0);
  CHECK(waveform_value(Waveform::square, 0.0) == 0.0);
  CHECK(waveform_value(Waveform::sawtooth, 0.0) == doctest::Approx(-1.0));
  CHECK(waveform_value(Waveform::sawtooth, std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(waveform_value(Waveform::sawtooth, 2 * std::numbers::pi - 1e-9) == doctest::Approx(1.0));
  CHECK(waveform_from_string("square") == Waveform::square);
  CHECK(to_string(Waveform::sawtooth) == "sawtooth");
  CHECK_THROWS_AS(waveform_from_string("triangle"), std::invalid_argument);
}

TEST_CASE("noiseless square wave only takes values in {-1, 0, 1} before standardization") {
  const auto g = generate_sources({{Waveform::square, 3.0, 0.0}}, 500, 8.0, 1);
  // After standardization a +-1 wave has two distinct levels (zeros aside).
  const double hi = g.sources.maxCoeff();
  const double lo = g.sources.minCoeff();
  for (Eigen::Index k = 0; k < g.sources.cols(); ++k) {
    const double v = g.sources(0, k);
    const bool on_level = std::abs(v - hi) < 1e-12 || std::abs(v - lo) < 1e-12;
    const double t = g.t[static_cast<std::size_t>(k)];
    if (std::sin(3.0 * t) != 0.0) CHECK(on_level);
  }
}

TEST_CASE("time axis and standardization") {
  const auto g = generate_sources(default_source_specs(), 2000, 8.0, 2);
  REQUIRE(g.t.size() == 2000);
  CHECK(g.t.front() == 0.0);
  CHECK(g.t.back() == doctest::Approx(8.0));
  CHECK(g.sources.rows() == 3);
  for (Eigen::Index r = 0; r < 3; ++r) {
    const auto row = g.sources.row(r).array();
    CHECK(std::abs(row.mean()) < 1e-12);
    CHECK(std::abs((row - row.mean()).square().mean() - 1.0) < 1e-12);
  }
}

TEST_CASE("benchmark mixing matrix") {
  const Matrix a = benchmark_mixing_matrix();
  Matrix expected(3, 3);
  expected << 1, 1, 1, 0.5, 2, 1, 1.5, 1, 2;
  CHECK(a == expected);
}

TEST_CASE("mixing is invertible for the benchmark") {
  const SignalSet set = benchmark_signals(3);
  CHECK(set.observations.rows() == 3);
  CHECK(set.observations.cols() == 2000);
  const Matrix recovered = set.mixing.inverse() * set.observations;
  CHECK((recovered - set.sources).cwiseAbs().maxCoeff() < 1e-10);
  CHECK_THROWS_AS(mix(set.sources, Matrix::Ones(3, 2)), ShapeError);
}

TEST_CASE("generated sources are roughly decorrelated") {
  const SignalSet set = benchmark_signals(4);
  const Matrix c = test::column_covariance(set.sources.transpose());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(c(i, j)) < 0.1);
}

TEST_CASE("generation is a function of the seed") {
  const SignalSet a = benchmark_signals(5);
  const SignalSet b = benchmark_signals(5);
  const SignalSet c = benchmark_signals(6);
  CHECK(test::bit_identical(a.observations, b.observations));
  CHECK_FALSE(test::bit_identical(a.observations, c.observations));
}

TEST_CASE("csv layout") {
  const SignalSet set = make_signal_set(default_source_specs(), benchmark_mixing_matrix(), 10, 1.0, 7);
  std::ostringstream os;
  write_signals_csv(os, set);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,s1,s2,s3,x1,x2,x3");
  int lines = 0;
  for (std::string line; std::getline(is, line);) ++lines;
  CHECK(lines == 10);

  std::ostringstream m;
  write_matrix_csv(m, set.t, set.sources, "y");
  CHECK(m.str().rfind("t,y1,y2,y3\n", 0) == 0);
}
