// mineica: experiment runner.
//
//   mineica run --config cfg.json [--seed N] [--out DIR] [--no-plots]
//   mineica validate-mi --rho R --n N
//   mineica gradcheck
//
// Exit codes: 0 success, 1 check failed, 2 bad arguments or config,
// 3 numerical abort.

#include "mineica/experiment.hpp"
#include "mineica/gradcheck.hpp"
#include "mineica/mi_check.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kBadInput = 2;
constexpr int kNumerical = 3;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool no_plots = false;
  bool timing = false;
  std::optional<std::size_t> encoder_epochs;
};

int cmd_run(const RunArgs& args) {
  mineica::ExperimentConfig config;
  try {
    config = mineica::load_config(args.config);
  } catch (const mineica::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (args.seed) config.train.seed = *args.seed;
  if (args.out) config.output_dir = *args.out;
  if (args.no_plots) config.emit_plots = false;
  if (args.timing) config.record_timing = true;
  if (args.encoder_epochs) {
    if (*args.encoder_epochs == 0) {
      std::cerr << "error: --encoder-epochs must be at least 1\n";
      return kBadInput;
    }
    config.train.encoder_epochs = *args.encoder_epochs;
  }

  try {
    const auto res = mineica::run_experiment(config);
    std::cout << std::fixed << std::setprecision(4);
    for (const auto* r : {&res.mine_report, &res.fastica_report}) {
      std::cout << std::left << std::setw(9) << r->method
                << " mean matched |r| = " << r->mean_matched_correlation
                << "  amari = " << r->amari_index << '\n';
    }
    std::cout << "artifacts written to " << config.output_dir.string() << '\n';
  } catch (const mineica::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    std::cerr << "partial artifacts in " << config.output_dir.string() << '\n';
    return kNumerical;
  } catch (const mineica::ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kOk;
}

int cmd_validate_mi(double rho, std::size_t n, std::size_t epochs, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0) || n < 100) {
    std::cerr << "error: need |rho| < 1 and n >= 100\n";
    return kBadInput;
  }
  mineica::MiCheckConfig c;
  c.rho = rho;
  c.samples = n;
  c.epochs = epochs;
  c.seed = seed;
  try {
    const auto r = mineica::check_gaussian_mi(c);
    std::cout << std::fixed << std::setprecision(4) << "rho " << rho << "  analytic MI "
              << r.analytic << "  estimate " << r.estimate << "  (max " << r.max_estimate
              << ")  band [" << r.analytic - c.lower_slack << ", " << r.analytic + c.upper_slack
              << "]  " << (r.within_band ? "PASS" : "FAIL") << '\n';
    return r.within_band ? kOk : kCheckFailed;
  } catch (const mineica::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kNumerical;
  }
}

int cmd_gradcheck(const std::string& fault_name) {
  auto fault = mineica::GradcheckFault::none;
  if (fault_name == "relu") {
    fault = mineica::GradcheckFault::relu_sign;
  } else if (!fault_name.empty()) {
    std::cerr << "error: unknown fault '" << fault_name << "'\n";
    return kBadInput;
  }
  const auto results = mineica::run_gradcheck_suite(mineica::builtin_gradcheck_suite(7, fault));
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const auto& r : results) {
    std::cout << std::left << std::setw(24) << r.name << std::scientific << std::setprecision(2)
              << r.worst_relative_error << "  (" << r.coordinates_checked << " coords)  "
              << (r.passed ? "ok" : "FAIL") << '\n';
    if (r.worst_relative_error >= worst) {
      worst = r.worst_relative_error;
      worst_name = r.name;
    }
    ok = ok && r.passed;
  }
  std::cout << "worst relative error " << std::scientific << worst << " (" << worst_name << ")\n";
  if (!ok) {
    std::cout << "failing:";
    for (const auto& r : results) {
      if (!r.passed) std::cout << ' ' << r.name;
    }
    std::cout << '\n';
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  mineica::tune_allocator();

  CLI::App app{"Linear ICA by minimizing a neural mutual-information estimate"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the blind source separation experiment");
  run_cmd->add_option("--config", run.config, "JSON experiment config")->required();
  run_cmd->add_option("--seed", run.seed, "Override the root seed");
  run_cmd->add_option("--out", run.out, "Override the output directory");
  run_cmd->add_flag("--no-plots", run.no_plots, "Skip SVG figures");
  run_cmd->add_flag("--timing", run.timing, "Record wall-clock ms in trace.csv");
  run_cmd->add_option("--encoder-epochs", run.encoder_epochs, "Override outer iterations");

  double rho = 0.0;
  std::size_t n = 5000;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  auto* mi_cmd = app.add_subcommand("validate-mi", "Check the MI estimator on Gaussian pairs");
  mi_cmd->add_option("--rho", rho, "Correlation coefficient")->required();
  mi_cmd->add_option("--n", n, "Number of samples")->required();
  mi_cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
  mi_cmd->add_option("--seed", seed, "Seed")->capture_default_str();

  std::string fault;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every op");
  gc_cmd->add_option("--inject-fault", fault, "Plant a known bug (relu)")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  if (*run_cmd) return cmd_run(run);
  if (*mi_cmd) return cmd_validate_mi(rho, n, epochs, seed);
  if (*gc_cmd) return cmd_gradcheck(fault);
  return kBadInput;
}
