#include "mineica/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <fstream>
#include <iomanip>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mineica {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::size_t get_count(const json& j, const char* key) {
  const auto v = get_as<long long>(j, key);
  if (v < 0) throw ConfigError(std::string("config key '") + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

MineMode mine_mode_from(const std::string& s) {
  if (s == "shared") return MineMode::shared;
  if (s == "copies") return MineMode::copies;
  throw ConfigError("mine_mode must be 'shared' or 'copies', got '" + s + "'");
}

MineReinit mine_reinit_from(const std::string& s) {
  if (s == "never") return MineReinit::never;
  if (s == "every_outer_iteration") return MineReinit::every_outer_iteration;
  throw ConfigError("mine_reinit must be 'never' or 'every_outer_iteration', got '" + s + "'");
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

template <typename Fn>
void write_stream(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  fn(os);
}

// Plots are best effort: a failure is reported but never fails the run.
void write_plot(const std::filesystem::path& path, const std::string& title,
                const std::vector<double>& t, const Matrix& rows) {
  try {
    write_file(path, render_svg(title, t, rows));
  } catch (const std::exception& e) {
    std::clog << "warning: could not write " << path.string() << ": " << e.what() << '\n';
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::vector<std::string> known = {
      "seed", "encoder_epochs", "mine_epochs_per_encoder_epoch", "lr", "mine_mode",
      "mine_reinit", "log_every", "mine_hidden_width", "mine_depth", "whitening_epsilon",
      "sources", "mixing", "samples", "duration", "output_dir", "emit_plots", "record_timing"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig c;
  TrainConfig& t = c.train;
  if (j.contains("seed")) t.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("encoder_epochs")) t.encoder_epochs = get_count(j, "encoder_epochs");
  if (j.contains("mine_epochs_per_encoder_epoch")) {
    t.mine_epochs_per_encoder_epoch = get_count(j, "mine_epochs_per_encoder_epoch");
  }
  if (j.contains("lr")) t.lr = get_as<double>(j, "lr");
  if (j.contains("mine_mode")) t.mine_mode = mine_mode_from(get_as<std::string>(j, "mine_mode"));
  if (j.contains("mine_reinit")) {
    t.mine_reinit = mine_reinit_from(get_as<std::string>(j, "mine_reinit"));
  }
  if (j.contains("log_every")) t.log_every = get_count(j, "log_every");
  if (j.contains("mine_hidden_width")) t.mine_hidden_width = get_count(j, "mine_hidden_width");
  if (j.contains("mine_depth")) t.mine_depth = get_count(j, "mine_depth");
  if (j.contains("whitening_epsilon")) t.whitening_epsilon = get_as<double>(j, "whitening_epsilon");
  if (j.contains("samples")) c.samples = get_count(j, "samples");
  if (j.contains("duration")) c.duration = get_as<double>(j, "duration");
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");
  if (j.contains("emit_plots")) c.emit_plots = get_as<bool>(j, "emit_plots");
  if (j.contains("record_timing")) c.record_timing = get_as<bool>(j, "record_timing");

  if (j.contains("sources")) {
    const json& arr = j.at("sources");
    if (!arr.is_array() || arr.empty()) throw ConfigError("sources must be a non-empty array");
    c.sources.clear();
    for (const json& s : arr) {
      if (!s.is_object()) throw ConfigError("each source must be an object");
      SourceSpec spec;
      try {
        spec.kind = waveform_from_string(get_as<std::string>(s, "kind"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      spec.omega = get_as<double>(s, "omega");
      if (s.contains("noise_std")) spec.noise_std = get_as<double>(s, "noise_std");
      if (spec.noise_std < 0.0) throw ConfigError("noise_std must be non-negative");
      c.sources.push_back(spec);
    }
  }

  if (j.contains("mixing")) {
    const json& rows = j.at("mixing");
    if (!rows.is_array() || rows.empty()) throw ConfigError("mixing must be a non-empty array");
    const std::size_t cols = rows.front().is_array() ? rows.front().size() : 0;
    Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].is_array() || rows[r].size() != cols || cols == 0) {
        throw ConfigError("mixing must be a rectangular array of numbers");
      }
      for (std::size_t k = 0; k < cols; ++k) {
        if (!rows[r][k].is_number()) throw ConfigError("mixing entries must be numbers");
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rows[r][k].get<double>();
      }
    }
    c.mixing = std::move(a);
  }

  if (static_cast<std::size_t>(c.mixing.cols()) != c.sources.size()) {
    throw ConfigError("mixing matrix must have one column per source");
  }
  if (c.mixing.rows() < c.mixing.cols()) {
    throw ConfigError("need at least as many observed channels as sources");
  }
  if (c.sources.size() < 2) throw ConfigError("need at least two sources");
  if (c.samples <= static_cast<std::size_t>(c.mixing.rows())) {
    throw ConfigError("samples must exceed the number of channels");
  }
  if (!(c.duration > 0.0)) throw ConfigError("duration must be positive");
  try {
    validate(c.train);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.train.seed;
  j["encoder_epochs"] = c.train.encoder_epochs;
  j["mine_epochs_per_encoder_epoch"] = c.train.mine_epochs_per_encoder_epoch;
  j["lr"] = c.train.lr;
  j["mine_mode"] = c.train.mine_mode == MineMode::shared ? "shared" : "copies";
  j["mine_reinit"] =
      c.train.mine_reinit == MineReinit::never ? "never" : "every_outer_iteration";
  j["log_every"] = c.train.log_every;
  j["mine_hidden_width"] = c.train.mine_hidden_width;
  j["mine_depth"] = c.train.mine_depth;
  j["whitening_epsilon"] = c.train.whitening_epsilon;
  j["samples"] = c.samples;
  j["duration"] = c.duration;
  j["output_dir"] = c.output_dir.string();
  j["emit_plots"] = c.emit_plots;
  j["record_timing"] = c.record_timing;
  json sources = json::array();
  for (const auto& s : c.sources) {
    sources.push_back({{"kind", to_string(s.kind)}, {"omega", s.omega}, {"noise_std", s.noise_std}});
  }
  j["sources"] = sources;
  json mixing = json::array();
  for (Eigen::Index r = 0; r < c.mixing.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index k = 0; k < c.mixing.cols(); ++k) row.push_back(c.mixing(r, k));
    mixing.push_back(row);
  }
  j["mixing"] = mixing;
  return j.dump(2);
}

std::string reports_to_json(const std::vector<EvalReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(json::parse(to_json(r)));
  return arr.dump(2) + "\n";
}

std::string render_svg(const std::string& title, const std::vector<double>& t, const Matrix& rows) {
  constexpr double width = 800.0;
  constexpr double panel = 120.0;
  constexpr double top = 30.0;
  constexpr double margin = 10.0;
  const auto n = static_cast<std::size_t>(rows.rows());
  const double height = top + panel * static_cast<double>(n) + margin;
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
  if (t.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  const double t0 = t.front();
  const double span = t.back() > t0 ? t.back() - t0 : 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = rows.row(static_cast<Eigen::Index>(r));
    const double lo = row.minCoeff();
    const double hi = row.maxCoeff();
    const double range = hi > lo ? hi - lo : 1.0;
    const double y0 = top + panel * static_cast<double>(r);
    os << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[r % 5] << "\" points=\"";
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double x = margin + (width - 2 * margin) * (t[k] - t0) / span;
      const double y =
          y0 + (panel - margin) * (1.0 - (row(static_cast<Eigen::Index>(k)) - lo) / range);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

ExperimentResult run_experiment(const ExperimentConfig& c) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  const fs::path& dir = c.output_dir;

  ExperimentResult res;
  res.signals = make_signal_set(c.sources, c.mixing, c.samples, c.duration,
                                derive_seed(c.train.seed, SeedStream::sources));
  const std::size_t m = c.sources.size();
  const std::size_t n = static_cast<std::size_t>(c.mixing.rows());

  write_stream(dir / "sources.csv",
               [&](std::ostream& os) { write_signals_csv(os, res.signals); });
  write_stream(dir / "mixed.csv", [&](std::ostream& os) {
    write_matrix_csv(os, res.signals.t, res.signals.observations, "x");
  });
  if (c.emit_plots) {
    write_plot(dir / "fig2a.svg", "sources", res.signals.t, res.signals.sources);
    write_plot(dir / "fig2b.svg", "mixtures", res.signals.t, res.signals.observations);
  }

  Trainer trainer(c.train, n, m);
  try {
    res.trace = trainer.run(res.signals);
  } catch (const TrainingAborted& e) {
    write_stream(dir / "trace.csv",
                 [&](std::ostream& os) { write_trace_csv(os, e.trace, c.record_timing); });
    throw;
  }
  write_stream(dir / "trace.csv",
               [&](std::ostream& os) { write_trace_csv(os, res.trace, c.record_timing); });

  res.mine = effective_unmixing(trainer.encoder(), res.signals.observations);
  res.mine.iterations = res.trace.encoder_steps;
  res.fastica = fastica(res.signals.observations, m, derive_seed(c.train.seed, SeedStream::fastica));

  res.mine_report = evaluate(res.mine, res.signals.sources, res.signals.mixing, c.train.seed);
  res.fastica_report =
      evaluate(res.fastica, res.signals.sources, res.signals.mixing, c.train.seed);

  write_stream(dir / "recovered_mine.csv", [&](std::ostream& os) {
    write_matrix_csv(os, res.signals.t, res.mine.sources, "y");
  });
  write_stream(dir / "recovered_fastica.csv", [&](std::ostream& os) {
    write_matrix_csv(os, res.signals.t, res.fastica.sources, "y");
  });
  write_file(dir / "report.json", reports_to_json({res.mine_report, res.fastica_report}));
  if (c.emit_plots) {
    write_plot(dir / "fig2c.svg", "recovered (MINE)", res.signals.t, res.mine.sources);
    write_plot(dir / "fig2d.svg", "recovered (FastICA)", res.signals.t, res.fastica.sources);
  }
  return res;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

}  // namespace mineica
