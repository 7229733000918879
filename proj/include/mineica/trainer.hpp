#pragma once

#include "mineica/mine.hpp"
#include "mineica/nn.hpp"
#include "mineica/optim.hpp"
#include "mineica/signals.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mineica {

enum class MineReinit { never, every_outer_iteration };

struct TrainConfig {
  std::size_t encoder_epochs = 1000;
  std::size_t mine_epochs_per_encoder_epoch = 7;
  double lr = 0.005;
  std::uint64_t seed = 0;
  MineMode mine_mode = MineMode::shared;
  MineReinit mine_reinit = MineReinit::never;
  std::size_t log_every = 0;  // 0 disables progress logging
  std::size_t mine_hidden_width = 64;
  std::size_t mine_depth = 7;
  double whitening_epsilon = WhiteningLayer::kDefaultEpsilon;
};

/// Throws ContractError on zero counts or non-positive rates.
void validate(const TrainConfig& config);

/// Linear map (no bias) followed by ZCA whitening.
class Encoder {
 public:
  Encoder(std::size_t n_inputs, std::size_t n_outputs, std::uint64_t seed,
          double whitening_epsilon = WhiteningLayer::kDefaultEpsilon);
  Encoder(LinearLayer linear, double whitening_epsilon);

  /// x: B x N samples. Refreshes the cached whitening statistics.
  Tensor forward(const Tensor& x);

  const LinearLayer& linear() const { return linear_; }
  const WhiteningLayer& whitening() const { return whitening_; }
  std::vector<Tensor> parameters() const { return linear_.parameters(); }

 private:
  LinearLayer linear_;
  WhiteningLayer whitening_;
};

struct TrainRecord {
  std::size_t iter = 0;            // 1-based outer iteration
  double loss_before_E = 0.0;      // encoder step's own (pre-step) loss
  double loss_after_E = 0.0;       // first MINE epoch's loss, i.e. L right after the encoder step
  double loss_after_M = 0.0;       // L after the last MINE step
  double grad_norm_E = 0.0;
  double grad_norm_M = 0.0;        // at the last MINE step
  double ms = 0.0;
  std::vector<double> mine_losses; // L before each MINE step, then after the last one
};

struct TrainTrace {
  std::vector<TrainRecord> records;
  std::size_t encoder_steps = 0;
  std::size_t mine_steps = 0;
};

/// Thrown by Trainer::run when a step produces a non-finite value; carries
/// the records completed so far.
struct TrainingAborted : NumericalError {
  TrainingAborted(const std::string& what, TrainTrace partial)
      : NumericalError(what), trace(std::move(partial)) {}
  TrainTrace trace;
};

/// CSV: iter,loss_after_E,loss_after_M,grad_norm_E,grad_norm_M,ms.
/// With include_timing = false the ms column is written as 0 so that the
/// file is a deterministic function of the configuration.
void write_trace_csv(std::ostream& os, const TrainTrace& trace, bool include_timing);

/// Alternating optimization: each encoder epoch minimizes the summed MINE
/// bound with the statistics network frozen, then the statistics network
/// maximizes it for a fixed number of epochs with the encoder frozen.
/// Full-batch throughout.
class Trainer {
 public:
  Trainer(TrainConfig config, std::size_t n_inputs, std::size_t n_components);

  /// One Nadam step on the encoder against L. Returns the pre-step loss.
  double encoder_step(const Tensor& x);
  /// One Nadam ascent step on the statistics network. Returns the pre-step
  /// loss; when `post_loss` is non-null also evaluates L after the step.
  double mine_step(const Tensor& x, double* post_loss = nullptr);

  /// x: B x N sample matrix (observations transposed).
  TrainTrace run(const Tensor& x);
  TrainTrace run(const SignalSet& signals);

  const TrainConfig& config() const { return config_; }
  Encoder& encoder() { return encoder_; }
  const Encoder& encoder() const { return encoder_; }
  MineModel& mine() { return mine_; }
  const MineModel& mine() const { return mine_; }
  const Nadam& encoder_optimizer() const { return opt_encoder_; }
  const Nadam& mine_optimizer() const { return opt_mine_; }
  double last_grad_norm_encoder() const { return grad_norm_encoder_; }
  double last_grad_norm_mine() const { return grad_norm_mine_; }

 private:
  void freeze_mine();
  void freeze_encoder();

  TrainConfig config_;
  Encoder encoder_;
  MineModel mine_;
  std::vector<Tensor> encoder_params_;
  std::vector<Tensor> mine_params_;
  Nadam opt_encoder_;
  Nadam opt_mine_;
  Rng perm_rng_;
  std::uint64_t reinit_count_ = 0;
  double grad_norm_encoder_ = 0.0;
  double grad_norm_mine_ = 0.0;
};

/// Observations as a T x N sample matrix.
Tensor samples_from(const SignalSet& signals);

}  // namespace mineica
