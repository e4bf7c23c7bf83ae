#pragma once

#include <cstdint>
#include <unordered_map>

#include "qe/types.hpp"

namespace qe {

struct TrainConfig {
  int epochs = 2;
  int batch_size = 32;
  double learning_rate = 2e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;

  void validate() const {
    if (epochs <= 0 || batch_size <= 0 || learning_rate <= 0 || epsilon <= 0 || beta1 <= 0 ||
        beta1 >= 1 || beta2 <= 0 || beta2 >= 1 || weight_decay < 0)
      throw QEError(ErrorCode::InvalidConfig, "invalid training hyperparameters");
  }
};

// One AdamW update with decoupled weight decay:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   mhat = m/(1-b1^t);     vhat = v/(1-b2^t)
//   theta <- theta - lr*( mhat/(sqrt(vhat)+eps) + wd*theta )
// t is the 1-based step index.
void adamw_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads,
                Eigen::Ref<Vector> m, Eigen::Ref<Vector> v, const TrainConfig& config, long t);

// AdamW over an embedding table where per-step gradients touch few columns.
// Columns with zero moment state see only the decoupled decay, applied
// lazily; columns with live moments replay their pending zero-gradient steps
// on the next touch. finalize() brings every column up to the last step.
class LazyAdamWTable {
 public:
  explicit LazyAdamWTable(const TrainConfig& config) : config_(config) {}

  void begin_step() { ++step_; }
  long step() const { return step_; }

  // Catch the column up to step()-1, then apply grad at the current step.
  void apply(Matrix& table, int col, const Vector& grad);

  void finalize(Matrix& table);

  // Total decay factor applied to never-touched columns by finalize().
  double untouched_decay() const;

 private:
  struct ColState {
    Vector m, v;
    long last_step = 0;
  };

  void replay_zero_steps(Matrix& table, int col, ColState& state, long target);

  TrainConfig config_;
  long step_ = 0;
  std::unordered_map<int, ColState> cols_;
};

}  // namespace qe
