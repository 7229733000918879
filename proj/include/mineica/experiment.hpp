#pragma once

#include "mineica/eval.hpp"
#include "mineica/signals.hpp"
#include "mineica/trainer.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace mineica {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  TrainConfig train{};
  std::vector<SourceSpec> sources = default_source_specs();
  Matrix mixing = benchmark_mixing_matrix();
  std::size_t samples = 2000;
  double duration = 8.0;
  std::filesystem::path output_dir = "mineica_out";
  bool emit_plots = true;
  /// Write wall-clock milliseconds into trace.csv (makes it non-reproducible).
  bool record_timing = false;
};

/// Parses a JSON document. Every key is optional; unknown keys, wrong types
/// and invalid values raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

struct ExperimentResult {
  SignalSet signals;
  UnmixResult mine;
  UnmixResult fastica;
  EvalReport mine_report;
  EvalReport fastica_report;
  TrainTrace trace;
};

/// Generates and mixes the sources, trains the MINE encoder, runs FastICA,
/// evaluates both, and writes sources.csv, mixed.csv, recovered_mine.csv,
/// recovered_fastica.csv, trace.csv, report.json (and fig2a..d.svg when
/// plots are enabled) into config.output_dir.
///
/// On TrainingAborted the inputs and the partial trace are written before
/// the exception propagates.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// report.json content: a JSON array of per-method report objects.
std::string reports_to_json(const std::vector<EvalReport>& reports);

/// Line chart with one panel per row of `rows`.
std::string render_svg(const std::string& title, const std::vector<double>& t, const Matrix& rows);

/// Raises glibc's mmap and trim thresholds so the large per-step activation
/// buffers are recycled instead of being returned to the kernel every time.
/// No-op on other C libraries.
void tune_allocator();

}  // namespace mineica
