#pragma once

#include "mineica/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mineica {

enum class Waveform { sine, square, sawtooth };

std::string to_string(Waveform w);
/// Throws std::invalid_argument for an unknown name.
Waveform waveform_from_string(const std::string& name);

/// A source row: waveform(omega * t) + noise_std * N(0, 1).
struct SourceSpec {
  Waveform kind = Waveform::sine;
  double omega = 1.0;  // angular frequency, rad/s
  double noise_std = 0.0;
};

/// Noise-free waveform value. sine: sin(x); square: sign(sin(x)) in {-1,0,1};
/// sawtooth: rises linearly from -1 to 1 over each 2*pi period.
double waveform_value(Waveform kind, double phase);

/// Sine (omega 2), square (omega 3), sawtooth (omega 2*pi), noise 0.2.
std::vector<SourceSpec> default_source_specs();

/// The benchmark mixing matrix [[1,1,1],[0.5,2,1],[1.5,1,2]].
Matrix benchmark_mixing_matrix();

struct SignalSet {
  std::vector<double> t;  // length T
  Matrix sources;         // M x T
  Matrix mixing;          // N x M
  Matrix observations;    // N x T, = mixing * sources
};

struct GeneratedSources {
  std::vector<double> t;
  Matrix sources;
};

/// T samples on linspace(0, duration). Noise is added first, then each row is
/// standardized to zero mean and unit (population) variance.
GeneratedSources generate_sources(const std::vector<SourceSpec>& specs, std::size_t samples,
                                  double duration, std::uint64_t seed);

/// X = A S. Throws ShapeError on mismatch.
Matrix mix(const Matrix& sources, const Matrix& mixing);

SignalSet make_signal_set(const std::vector<SourceSpec>& specs, const Matrix& mixing,
                          std::size_t samples, double duration, std::uint64_t seed);

/// Three standardized noisy sources, T = 2000 over 8 s, benchmark mixing matrix.
SignalSet benchmark_signals(std::uint64_t seed);

/// CSV with header t,s1..sM,x1..xN; 17 significant digits.
void write_signals_csv(std::ostream& os, const SignalSet& set);

/// CSV of an arbitrary M x T matrix with header t,<prefix>1..<prefix>M.
void write_matrix_csv(std::ostream& os, const std::vector<double>& t, const Matrix& rows,
                      const std::string& prefix);

}  // namespace mineica
