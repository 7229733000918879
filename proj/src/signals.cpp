#include "mineica/signals.hpp"

#include "mineica/random.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace mineica {

std::string to_string(Waveform w) {
  switch (w) {
    case Waveform::sine:
      return "sine";
    case Waveform::square:
      return "square";
    case Waveform::sawtooth:
      return "sawtooth";
  }
  return "unknown";
}

Waveform waveform_from_string(const std::string& name) {
  if (name == "sine") return Waveform::sine;
  if (name == "square") return Waveform::square;
  if (name == "sawtooth") return Waveform::sawtooth;
  throw std::invalid_argument("unknown waveform '" + name + "'");
}

double waveform_value(Waveform kind, double phase) {
  switch (kind) {
    case Waveform::sine:
      return std::sin(phase);
    case Waveform::square: {
      const double s = std::sin(phase);
      return static_cast<double>((s > 0.0) - (s < 0.0));
    }
    case Waveform::sawtooth: {
      const double two_pi = 2.0 * std::numbers::pi;
      const double frac = phase / two_pi - std::floor(phase / two_pi);
      return 2.0 * frac - 1.0;
    }
  }
  return 0.0;
}

std::vector<SourceSpec> default_source_specs() {
  return {
      {Waveform::sine, 2.0, 0.2},
      {Waveform::square, 3.0, 0.2},
      {Waveform::sawtooth, 2.0 * std::numbers::pi, 0.2},
  };
}

Matrix benchmark_mixing_matrix() {
  Matrix a(3, 3);
  a << 1.0, 1.0, 1.0,
       0.5, 2.0, 1.0,
       1.5, 1.0, 2.0;
  return a;
}

GeneratedSources generate_sources(const std::vector<SourceSpec>& specs, std::size_t samples,
                                  double duration, std::uint64_t seed) {
  if (samples < 2) throw ContractError("generate_sources: need at least two samples");
  if (!(duration > 0.0)) throw ContractError("generate_sources: duration must be positive");
  if (specs.empty()) throw ContractError("generate_sources: no sources");

  GeneratedSources out;
  out.t.resize(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    out.t[k] = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
  }

  const auto n = static_cast<Eigen::Index>(samples);
  out.sources.resize(static_cast<Eigen::Index>(specs.size()), n);
  for (std::size_t r = 0; r < specs.size(); ++r) {
    const SourceSpec& spec = specs[r];
    if (spec.noise_std < 0.0) throw ContractError("generate_sources: negative noise_std");
    Rng rng(derive_seed(seed, r));
    std::normal_distribution<double> noise(0.0, 1.0);
    auto row = out.sources.row(static_cast<Eigen::Index>(r));
    for (Eigen::Index k = 0; k < n; ++k) {
      row(k) = waveform_value(spec.kind, spec.omega * out.t[static_cast<std::size_t>(k)]);
      if (spec.noise_std > 0.0) row(k) += spec.noise_std * noise(rng);
    }
    const double mu = row.mean();
    row.array() -= mu;
    const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(n));
    if (sd == 0.0) throw ContractError("generate_sources: source row is constant");
    row /= sd;
  }
  return out;
}

Matrix mix(const Matrix& sources, const Matrix& mixing) {
  if (mixing.cols() != sources.rows()) {
    throw ShapeError("mix: mixing matrix has " + std::to_string(mixing.cols()) +
                     " columns but there are " + std::to_string(sources.rows()) + " sources");
  }
  return mixing * sources;
}

SignalSet make_signal_set(const std::vector<SourceSpec>& specs, const Matrix& mixing,
                          std::size_t samples, double duration, std::uint64_t seed) {
  GeneratedSources g = generate_sources(specs, samples, duration, seed);
  SignalSet set;
  set.observations = mix(g.sources, mixing);
  set.t = std::move(g.t);
  set.sources = std::move(g.sources);
  set.mixing = mixing;
  return set;
}

SignalSet benchmark_signals(std::uint64_t seed) {
  return make_signal_set(default_source_specs(), benchmark_mixing_matrix(), 2000, 8.0,
                         derive_seed(seed, SeedStream::sources));
}

namespace {

void write_header(std::ostream& os, const std::string& prefix, Eigen::Index n) {
  for (Eigen::Index k = 1; k <= n; ++k) os << ',' << prefix << k;
}

}  // namespace

void write_signals_csv(std::ostream& os, const SignalSet& set) {
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  os << 't';
  write_header(os, "s", set.sources.rows());
  write_header(os, "x", set.observations.rows());
  os << '\n';
  for (std::size_t k = 0; k < set.t.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    os << set.t[k];
    for (Eigen::Index r = 0; r < set.sources.rows(); ++r) os << ',' << set.sources(r, c);
    for (Eigen::Index r = 0; r < set.observations.rows(); ++r) os << ',' << set.observations(r, c);
    os << '\n';
  }
  os.precision(prec);
  os.flags(flags);
}

void write_matrix_csv(std::ostream& os, const std::vector<double>& t, const Matrix& rows,
                      const std::string& prefix) {
  if (static_cast<std::size_t>(rows.cols()) != t.size()) {
    throw ShapeError("write_matrix_csv: time axis length does not match matrix columns");
  }
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  os << 't';
  write_header(os, prefix, rows.rows());
  os << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << t[k];
    for (Eigen::Index r = 0; r < rows.rows(); ++r) os << ',' << rows(r, static_cast<Eigen::Index>(k));
    os << '\n';
  }
  os.precision(prec);
  os.flags(flags);
}

}  // namespace mineica
