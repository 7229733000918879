#include "mineica/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

namespace mineica {

void validate(const TrainConfig& c) {
  if (c.encoder_epochs < 1) throw ContractError("encoder_epochs must be at least 1");
  if (c.mine_epochs_per_encoder_epoch < 1) {
    throw ContractError("mine_epochs_per_encoder_epoch must be at least 1");
  }
  if (!(c.lr > 0.0)) throw ContractError("lr must be positive");
  if (c.mine_depth < 1 || c.mine_hidden_width < 1) throw ContractError("empty MINE network");
  if (!(c.whitening_epsilon > 0.0)) throw ContractError("whitening_epsilon must be positive");
}

Encoder::Encoder(std::size_t n_inputs, std::size_t n_outputs, std::uint64_t seed,
                 double whitening_epsilon)
    : linear_(n_inputs, n_outputs, false, seed, InitScheme::xavier_uniform),
      whitening_(whitening_epsilon) {}

Encoder::Encoder(LinearLayer linear, double whitening_epsilon)
    : linear_(std::move(linear)), whitening_(whitening_epsilon) {}

Tensor Encoder::forward(const Tensor& x) { return whitening_.forward(linear_.forward(x)); }

Tensor samples_from(const SignalSet& signals) {
  return Tensor(Matrix(signals.observations.transpose()));
}

void write_trace_csv(std::ostream& os, const TrainTrace& trace, bool include_timing) {
  const auto flags = os.flags();
  const auto prec = os.precision(17);
  os << "iter,loss_after_E,loss_after_M,grad_norm_E,grad_norm_M,ms\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',' << r.loss_after_E << ',' << r.loss_after_M << ',' << r.grad_norm_E << ','
       << r.grad_norm_M << ',' << (include_timing ? r.ms : 0.0) << '\n';
  }
  os.precision(prec);
  os.flags(flags);
}

namespace {

MineConfig mine_config(const TrainConfig& c) {
  return MineConfig{c.mine_hidden_width, c.mine_depth, c.mine_mode};
}

void require_finite(double value, const char* phase, std::size_t step) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << phase << ": non-finite loss " << value << " at step " << step;
    throw NumericalError(os.str());
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::size_t n_inputs, std::size_t n_components)
    : config_((validate(config), config)),
      encoder_(n_inputs, n_components, derive_seed(config.seed, SeedStream::encoder_init),
               config.whitening_epsilon),
      mine_(n_components, mine_config(config), derive_seed(config.seed, SeedStream::mine_init)),
      encoder_params_(encoder_.parameters()),
      mine_params_(mine_.parameters()),
      opt_encoder_(encoder_params_, NadamConfig{.lr = config.lr}),
      opt_mine_(mine_params_, NadamConfig{.lr = config.lr}),
      perm_rng_(derive_seed(config.seed, SeedStream::permutations)) {}

void Trainer::freeze_mine() {
  set_trainable(mine_params_, false);
  set_trainable(encoder_params_, true);
}

void Trainer::freeze_encoder() {
  set_trainable(encoder_params_, false);
  set_trainable(mine_params_, true);
}

double Trainer::encoder_step(const Tensor& x) {
  freeze_mine();
  const Tensor z = encoder_.forward(x);
  const MineLoss loss = mine_loss_total(mine_, z, perm_rng_);
  const double value = loss.total.item();
  require_finite(value, "encoder_step", opt_encoder_.steps() + 1);
  backward(loss.total);
  grad_norm_encoder_ = gradient_norm(encoder_params_);
  opt_encoder_.step();
  return value;
}

double Trainer::mine_step(const Tensor& x, double* post_loss) {
  freeze_encoder();
  const Tensor z = encoder_.forward(x);
  const MineLoss loss = mine_loss_total(mine_, z, perm_rng_);
  const double value = loss.total.item();
  require_finite(value, "mine_step", opt_mine_.steps() + 1);
  // Ascent on L is descent on -L.
  backward(neg(loss.total));
  grad_norm_mine_ = gradient_norm(mine_params_);
  opt_mine_.step();
  if (post_loss) {
    *post_loss = mine_loss_total(mine_, z.detach(), perm_rng_).total.item();
    require_finite(*post_loss, "mine_step", opt_mine_.steps());
  }
  return value;
}

TrainTrace Trainer::run(const Tensor& x) {
  TrainTrace trace;
  const std::size_t k = config_.mine_epochs_per_encoder_epoch;
  try {
    for (std::size_t it = 1; it <= config_.encoder_epochs; ++it) {
      const auto start = std::chrono::steady_clock::now();
      TrainRecord rec;
      rec.iter = it;
      rec.loss_before_E = encoder_step(x);
      rec.grad_norm_E = grad_norm_encoder_;
      ++trace.encoder_steps;

      if (config_.mine_reinit == MineReinit::every_outer_iteration) {
        mine_.reinitialize(derive_seed(derive_seed(config_.seed, SeedStream::mine_init),
                                       1000 + reinit_count_++));
        opt_mine_.reset();
      }
      rec.mine_losses.reserve(k + 1);
      double post = 0.0;
      for (std::size_t e = 0; e < k; ++e) {
        rec.mine_losses.push_back(mine_step(x, e + 1 == k ? &post : nullptr));
        ++trace.mine_steps;
      }
      rec.mine_losses.push_back(post);
      rec.loss_after_E = rec.mine_losses.front();
      rec.loss_after_M = post;
      rec.grad_norm_M = grad_norm_mine_;
      rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count();
      trace.records.push_back(std::move(rec));

      if (config_.log_every > 0 && it % config_.log_every == 0) {
        const auto& r = trace.records.back();
        std::clog << "iter " << it << "  L_after_E " << r.loss_after_E << "  L_after_M "
                  << r.loss_after_M << '\n';
      }
    }
  } catch (const NumericalError& e) {
    throw TrainingAborted(e.what(), std::move(trace));
  }
  // Leave the encoder's whitening statistics describing x under the final weights.
  set_trainable(encoder_params_, false);
  encoder_.forward(x);
  set_trainable(encoder_params_, true);
  return trace;
}

TrainTrace Trainer::run(const SignalSet& signals) { return run(samples_from(signals)); }

}  // namespace mineica
