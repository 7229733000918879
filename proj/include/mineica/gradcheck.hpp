#pragma once

#include "mineica/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mineica {

/// Central-difference gradient check of a scalar function of several
/// tensors. Coordinates where both gradients are below `min_magnitude` are
/// skipped; elsewhere the error is |analytic - numeric| / max(|analytic|, |numeric|).
struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  double min_magnitude = 1e-8;
};

struct GradcheckCase {
  std::string name;
  std::vector<Tensor> inputs;  // leaves; all are checked
  std::function<Tensor(const std::vector<Tensor>&)> fn;  // must return 1x1
};

struct GradcheckResult {
  std::string name;
  double worst_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
  bool passed = true;
};

GradcheckResult gradcheck(const GradcheckCase& test, const GradcheckOptions& options = {});

/// Faults that can be planted in the built-in suite to prove it catches them.
enum class GradcheckFault { none, relu_sign };

/// One case per differentiable operation (including the whitening layer,
/// the dense layers and the MINE loss), on seeded random inputs.
std::vector<GradcheckCase> builtin_gradcheck_suite(std::uint64_t seed = 7,
                                                   GradcheckFault fault = GradcheckFault::none);

std::vector<GradcheckResult> run_gradcheck_suite(const std::vector<GradcheckCase>& cases,
                                                 const GradcheckOptions& options = {});

}  // namespace mineica
