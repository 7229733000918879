#include "mineica/eval.hpp"
#include "mineica/experiment.hpp"
#include "mineica/gradcheck.hpp"
#include "mineica/mi_check.hpp"
#include "mineica/signals.hpp"
#include "mineica/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace mineica;

namespace {

py::dict signal_set_dict(const SignalSet& s) {
  py::dict d;
  d["t"] = s.t;
  d["sources"] = s.sources;
  d["mixing"] = s.mixing;
  d["observations"] = s.observations;
  return d;
}

py::dict unmix_dict(const UnmixResult& r) {
  py::dict d;
  d["method"] = r.method;
  d["sources"] = r.sources;
  d["unmixing"] = r.unmixing;
  d["center"] = r.center;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  return d;
}

py::dict trace_dict(const TrainTrace& t) {
  std::vector<double> after_e, after_m, gn_e, gn_m;
  for (const auto& r : t.records) {
    after_e.push_back(r.loss_after_E);
    after_m.push_back(r.loss_after_M);
    gn_e.push_back(r.grad_norm_E);
    gn_m.push_back(r.grad_norm_M);
  }
  py::dict d;
  d["loss_after_E"] = after_e;
  d["loss_after_M"] = after_m;
  d["grad_norm_E"] = gn_e;
  d["grad_norm_M"] = gn_m;
  d["encoder_steps"] = t.encoder_steps;
  d["mine_steps"] = t.mine_steps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_mineica, m) {
  m.doc() = "Linear ICA by minimizing a neural mutual information estimate";
  tune_allocator();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("benchmark", [](std::uint64_t seed) { return signal_set_dict(benchmark_signals(seed)); },
        py::arg("seed") = 0,
        "Three noisy sources (sine, square, sawtooth) mixed by the 3x3 benchmark matrix.");

  m.def(
      "whiten",
      [](const Matrix& z, double eps) { return Matrix(whiten(Tensor(z), eps).value()); },
      py::arg("z"), py::arg("epsilon") = WhiteningLayer::kDefaultEpsilon,
      "ZCA-whiten the columns of a B x M batch.");

  m.def(
      "fastica",
      [](const Matrix& x, std::size_t n_components, std::uint64_t seed, double tol,
         std::size_t max_iter) {
        return unmix_dict(fastica(x, n_components, seed, FastIcaConfig{tol, max_iter}));
      },
      py::arg("observations"), py::arg("n_components"), py::arg("seed") = 0,
      py::arg("tol") = 1e-6, py::arg("max_iter") = 500,
      "Parallel FastICA (tanh contrast). observations is N x T.");

  m.def(
      "train",
      [](const Matrix& x, std::size_t n_components, std::uint64_t seed, std::size_t encoder_epochs,
         std::size_t mine_epochs, double lr) {
        TrainConfig c;
        c.seed = seed;
        c.encoder_epochs = encoder_epochs;
        c.mine_epochs_per_encoder_epoch = mine_epochs;
        c.lr = lr;
        Trainer trainer(c, static_cast<std::size_t>(x.rows()), n_components);
        TrainTrace trace;
        {
          py::gil_scoped_release release;
          trace = trainer.run(Tensor(Matrix(x.transpose())));
        }
        py::dict d = unmix_dict(effective_unmixing(trainer.encoder(), x));
        d["trace"] = trace_dict(trace);
        return d;
      },
      py::arg("observations"), py::arg("n_components"), py::arg("seed") = 0,
      py::arg("encoder_epochs") = 1000, py::arg("mine_epochs") = 7, py::arg("lr") = 0.005,
      "Train the MINE-ICA encoder on N x T observations; returns the effective unmixing.");

  m.def(
      "matched_correlation",
      [](const Matrix& recovered, const Matrix& sources) {
        const MatchedCorrelation mc = matched_correlation(recovered, sources);
        py::dict d;
        d["mean"] = mc.mean;
        d["per_source"] = mc.per_source;
        d["assignment"] = mc.assignment;
        return d;
      },
      py::arg("recovered"), py::arg("sources"));

  m.def("amari_index", &amari_index, py::arg("p"));

  m.def("gaussian_mutual_information", &gaussian_mutual_information, py::arg("rho"));

  m.def(
      "estimate_gaussian_mi",
      [](double rho, std::size_t samples, std::size_t epochs, std::uint64_t seed) {
        MiCheckConfig c;
        c.rho = rho;
        c.samples = samples;
        c.epochs = epochs;
        c.seed = seed;
        MiCheckResult r;
        {
          py::gil_scoped_release release;
          r = check_gaussian_mi(c);
        }
        py::dict d;
        d["analytic"] = r.analytic;
        d["estimate"] = r.estimate;
        d["max_estimate"] = r.max_estimate;
        d["within_band"] = r.within_band;
        d["trajectory"] = r.trajectory;
        return d;
      },
      py::arg("rho"), py::arg("samples") = 5000, py::arg("epochs") = 300, py::arg("seed") = 0,
      "Train a statistics network on correlated Gaussian pairs and compare with the closed form.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& output_dir) {
        ExperimentConfig c = parse_config(config_json);
        if (!output_dir.empty()) c.output_dir = output_dir;
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return py::make_tuple(to_json(r.mine_report), to_json(r.fastica_report));
      },
      py::arg("config_json") = "{}", py::arg("output_dir") = "",
      "Full pipeline; writes artifacts and returns the two JSON reports.");

  m.def("gradcheck", [] {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : run_gradcheck_suite(builtin_gradcheck_suite())) {
      out.emplace_back(r.name, r.worst_relative_error);
    }
    return out;
  }, "Worst relative finite-difference error for every differentiable op.");
}
