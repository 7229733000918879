#include "mineica/gradcheck.hpp"

#include "mineica/mine.hpp"
#include "mineica/nn.hpp"
#include "mineica/random.hpp"

#include <algorithm>
#include <cmath>

namespace mineica {

GradcheckResult gradcheck(const GradcheckCase& test, const GradcheckOptions& options) {
  GradcheckResult out;
  out.name = test.name;

  std::vector<Tensor> inputs = test.inputs;
  for (auto& t : inputs) t.set_requires_grad(true);
  backward(test.fn(inputs));
  std::vector<Matrix> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix& value = inputs[k].mutable_value();
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + options.step;
      const double up = test.fn(inputs).item();
      value.data()[i] = saved - options.step;
      const double down = test.fn(inputs).item();
      value.data()[i] = saved;

      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[k].data()[i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      if (scale <= options.min_magnitude) continue;
      ++out.coordinates_checked;
      out.worst_relative_error = std::max(out.worst_relative_error, std::abs(a - numeric) / scale);
    }
  }
  out.passed = out.worst_relative_error < options.tolerance;
  return out;
}

std::vector<GradcheckResult> run_gradcheck_suite(const std::vector<GradcheckCase>& cases,
                                                 const GradcheckOptions& options) {
  std::vector<GradcheckResult> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back(gradcheck(c, options));
  return out;
}

namespace {

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  Tensor normal(std::size_t r, std::size_t c) {
    std::normal_distribution<double> d(0.0, 1.0);
    return fill(r, c, [&] { return d(rng_); });
  }
  Tensor uniform(std::size_t r, std::size_t c, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return fill(r, c, [&] { return d(rng_); });
  }
  /// Normal draws pushed at least `gap` away from zero (relu kinks).
  Tensor away_from_zero(std::size_t r, std::size_t c, double gap) {
    std::normal_distribution<double> d(0.0, 1.0);
    return fill(r, c, [&] {
      const double v = d(rng_);
      return v >= 0.0 ? v + gap : v - gap;
    });
  }
  std::vector<std::size_t> permutation(std::size_t n) { return random_permutation(n, rng_); }
  std::uint64_t seed() { return rng_(); }

 private:
  template <typename F>
  Tensor fill(std::size_t r, std::size_t c, F&& f) {
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = f();
    return Tensor(std::move(m));
  }
  Rng rng_;
};

/// Scalar probe sum(y * weights): exercises every output coordinate with a
/// distinct weight so that permuted or misrouted gradients are caught.
Tensor project(const Tensor& y, const Tensor& weights) { return sum(mul(y, weights)); }

Tensor relu_with_flipped_gradient(const Tensor& a) {
  return make_op(a.value().cwiseMax(0.0), {a}, "relu", [](const BackwardContext& c) {
    if (c.grads[0]) {
      accumulate(*c.grads[0], -(c.output.array() > 0.0).select(c.grad.array(), 0.0).matrix());
    }
  });
}

}  // namespace

std::vector<GradcheckCase> builtin_gradcheck_suite(std::uint64_t seed, GradcheckFault fault) {
  Draw d(seed);
  std::vector<GradcheckCase> s;

  const Tensor w43 = d.normal(4, 3);
  const Tensor w42 = d.normal(4, 2);
  const Tensor w45 = d.normal(4, 5);

  s.push_back({"matmul", {d.normal(4, 3), d.normal(3, 2)},
               [w42](const auto& in) { return project(matmul(in[0], in[1]), w42); }});
  s.push_back({"transpose", {d.normal(3, 4)},
               [w43](const auto& in) { return project(transpose(in[0]), w43); }});
  s.push_back({"add", {d.normal(4, 3), d.normal(4, 3)},
               [w43](const auto& in) { return project(add(in[0], in[1]), w43); }});
  s.push_back({"sub", {d.normal(4, 3), d.normal(4, 3)},
               [w43](const auto& in) { return project(sub(in[0], in[1]), w43); }});
  s.push_back({"mul", {d.normal(4, 3), d.normal(4, 3)},
               [w43](const auto& in) { return project(mul(in[0], in[1]), w43); }});
  s.push_back({"neg", {d.normal(4, 3)}, [w43](const auto& in) { return project(neg(in[0]), w43); }});
  if (fault == GradcheckFault::relu_sign) {
    s.push_back({"relu", {d.away_from_zero(4, 3, 0.1)}, [w43](const auto& in) {
                   return project(relu_with_flipped_gradient(in[0]), w43);
                 }});
  } else {
    s.push_back({"relu", {d.away_from_zero(4, 3, 0.1)},
                 [w43](const auto& in) { return project(relu(in[0]), w43); }});
  }
  s.push_back({"exp", {d.normal(4, 3)}, [w43](const auto& in) { return project(exp(in[0]), w43); }});
  s.push_back({"log", {d.uniform(4, 3, 0.5, 3.0)},
               [w43](const auto& in) { return project(log(in[0]), w43); }});
  s.push_back({"scale", {d.normal(4, 3)},
               [w43](const auto& in) { return project(scale(in[0], -1.7), w43); }});
  s.push_back({"add_scalar", {d.normal(4, 3)},
               [w43](const auto& in) { return project(add_scalar(in[0], 0.3), w43); }});
  s.push_back({"add_row", {d.normal(4, 3), d.normal(1, 3)},
               [w43](const auto& in) { return project(add_row(in[0], in[1]), w43); }});
  {
    const Tensor w13 = d.normal(1, 3);
    s.push_back({"mean_rows", {d.normal(4, 3)},
                 [w13](const auto& in) { return project(mean(in[0], Axis::rows), w13); }});
  }
  s.push_back({"mean_all", {d.normal(4, 3)},
               [](const auto& in) { return scale(mean(in[0], Axis::all), 2.5); }});
  s.push_back({"sum", {d.normal(4, 3)}, [](const auto& in) { return scale(sum(in[0]), -0.7); }});
  s.push_back({"concat_cols", {d.normal(4, 3), d.normal(4, 2)},
               [w45](const auto& in) { return project(concat_cols(in[0], in[1]), w45); }});
  s.push_back({"slice_cols", {d.normal(4, 5)},
               [w42](const auto& in) { return project(slice_cols(in[0], 2, 2), w42); }});
  s.push_back({"split_cols", {d.normal(4, 5)}, [w43, w42](const auto& in) {
                 auto [a, b] = split_cols(in[0], 3);
                 return add(project(a, w43), project(b, w42));
               }});
  {
    const Tensor w83 = d.normal(8, 3);
    s.push_back({"concat_rows", {d.normal(4, 3), d.normal(4, 3)},
                 [w83](const auto& in) { return project(concat_rows({in[0], in[1]}), w83); }});
  }
  {
    const Tensor w23 = d.normal(2, 3);
    s.push_back({"slice_rows", {d.normal(4, 3)},
                 [w23](const auto& in) { return project(slice_rows(in[0], 1, 2), w23); }});
  }
  {
    const auto perm = d.permutation(4);
    s.push_back({"gather_rows", {d.normal(4, 3)},
                 [w43, perm](const auto& in) { return project(gather_rows(in[0], perm), w43); }});
  }
  s.push_back({"affine", {d.normal(4, 3), d.normal(3, 2), d.normal(1, 2)},
               [w42](const auto& in) { return project(affine(in[0], in[1], in[2]), w42); }});
  {
    // Inputs chosen so no pre-activation sits within the step of zero.
    const Tensor x = d.normal(4, 3);
    const Tensor w = d.normal(3, 2);
    Matrix pre = x.value() * w.value();
    Matrix shift = Matrix::Zero(1, 2);
    for (Eigen::Index c = 0; c < pre.cols(); ++c) {
      double closest = 1e9;
      for (Eigen::Index r = 0; r < pre.rows(); ++r) closest = std::min(closest, std::abs(pre(r, c)));
      if (closest < 0.05) shift(0, c) = 0.1;
    }
    s.push_back({"affine_relu", {x, w, Tensor(shift)},
                 [w42](const auto& in) { return project(affine_relu(in[0], in[1], in[2]), w42); }});
  }
  {
    const Tensor w83 = d.normal(32, 3);
    s.push_back({"whiten", {d.normal(32, 3)},
                 [w83](const auto& in) { return project(whiten(in[0], 1e-8), w83); }});
  }
  {
    const Tensor w12 = d.normal(12, 1);
    s.push_back({"whiten_1d", {d.normal(12, 1)},
                 [w12](const auto& in) { return project(whiten(in[0], 1e-8), w12); }});
  }
  {
    const Tensor wout = d.normal(6, 2);
    s.push_back({"linear_layer", {d.normal(6, 3), d.normal(3, 2), d.normal(1, 2)},
                 [wout](const auto& in) {
                   return project(LinearLayer(in[1], in[2]).forward(in[0]), wout);
                 }});
  }
  {
    // f(x) = mean(relu(W x)) checked with respect to W and x.
    const Tensor x = d.normal(3, 5);
    const Tensor w = d.normal(4, 3);
    s.push_back({"mean_relu_matmul", {w, x},
                 [](const auto& in) { return mean(relu(matmul(in[0], in[1])), Axis::all); }});
  }
  {
    // Random biases: with zero biases a row whose hidden units are all off
    // puts the next pre-activation exactly on the relu kink.
    const Mlp net({3, 5, 5, 1}, d.seed());
    std::vector<Tensor> inputs{d.normal(6, 3)};
    for (const auto& l : net.layers()) {
      inputs.push_back(l.weights().clone());
      inputs.push_back(d.uniform(1, l.out_dim(), 0.1, 0.5));
    }
    s.push_back({"mlp", inputs, [](const auto& in) {
                   std::vector<LinearLayer> layers;
                   for (std::size_t k = 1; k + 1 < in.size(); k += 2) layers.emplace_back(in[k], in[k + 1]);
                   return mean(Mlp(std::move(layers)).forward(in[0]), Axis::all);
                 }});
  }
  {
    // Encoder path: linear map, whitening, then the summed MINE bound.
    const MineModel model(3, MineConfig{6, 3, MineMode::shared}, d.seed());
    Rng prng(d.seed());
    const auto perms = draw_permutations(16, 3, prng);
    s.push_back({"mine_loss_total_wrt_z", {d.normal(16, 3)}, [model, perms](const auto& in) {
                   return mine_loss_total(model, in[0], perms).total;
                 }});
    s.push_back({"encoder_mine_loss", {d.normal(16, 3), d.normal(3, 3)},
                 [model, perms](const auto& in) {
                   return mine_loss_total(model, whiten(matmul(in[0], in[1]), 1e-8), perms).total;
                 }});
  }
  {
    const MineModel model(2, MineConfig{6, 3, MineMode::shared}, d.seed());
    const auto perm = d.permutation(12);
    std::vector<Tensor> inputs{d.normal(12, 2)};
    for (const auto& p : model.parameters()) inputs.push_back(p.clone());
    s.push_back({"mine_loss_wrt_params", inputs, [perm](const auto& in) {
                   std::vector<LinearLayer> layers;
                   for (std::size_t k = 1; k + 1 < in.size(); k += 2) layers.emplace_back(in[k], in[k + 1]);
                   const Mlp net(std::move(layers));
                   const MineBatch b = make_mine_batch(in[0], 0, perm);
                   return sub(mean(net.forward(b.joint), Axis::all),
                              log_mean_exp(net.forward(b.marginal)));
                 }});
  }
  return s;
}

}  // namespace mineica
