#include "qe/optimizer.hpp"

#include <cmath>

namespace qe {

void adamw_step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads,
                Eigen::Ref<Vector> m, Eigen::Ref<Vector> v, const TrainConfig& config, long t) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
    throw QEError(ErrorCode::ShapeMismatch, "adamw_step: parameter/gradient/state sizes differ");
  if (t < 1) throw QEError(ErrorCode::InvalidConfig, "adamw_step: step index must be >= 1");

  m = config.beta1 * m + (1.0 - config.beta1) * grads;
  v = config.beta2 * v + (1.0 - config.beta2) * grads.cwiseProduct(grads);
  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  params.array() -= config.learning_rate *
                    ((m.array() / bias1) / ((v.array() / bias2).sqrt() + config.epsilon) +
                     config.weight_decay * params.array());
}

void LazyAdamWTable::replay_zero_steps(Matrix& table, int col, ColState& state, long target) {
  auto theta = table.col(col);
  for (long j = state.last_step + 1; j <= target; ++j) {
    state.m *= config_.beta1;
    state.v *= config_.beta2;
    const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(j));
    const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(j));
    theta.array() -= config_.learning_rate *
                     ((state.m.array() / bias1) /
                          ((state.v.array() / bias2).sqrt() + config_.epsilon) +
                      config_.weight_decay * theta.array());
  }
  state.last_step = target;
}

void LazyAdamWTable::apply(Matrix& table, int col, const Vector& grad) {
  if (step_ < 1)
    throw QEError(ErrorCode::InvalidConfig, "LazyAdamWTable: begin_step() before apply()");
  auto [it, inserted] = cols_.try_emplace(col);
  ColState& state = it->second;
  if (inserted) {
    state.m = Vector::Zero(grad.size());
    state.v = Vector::Zero(grad.size());
    // Zero-moment history collapses to pure decay.
    table.col(col) *= std::pow(1.0 - config_.learning_rate * config_.weight_decay,
                               static_cast<double>(step_ - 1));
    state.last_step = step_ - 1;
  } else {
    replay_zero_steps(table, col, state, step_ - 1);
  }
  adamw_step(table.col(col), grad, state.m, state.v, config_, step_);
  state.last_step = step_;
}

void LazyAdamWTable::finalize(Matrix& table) {
  const double decay = untouched_decay();
  for (int c = 0; c < table.cols(); ++c) {
    auto it = cols_.find(c);
    if (it == cols_.end()) {
      if (decay != 1.0) table.col(c) *= decay;
    } else {
      replay_zero_steps(table, c, it->second, step_);
    }
  }
}

double LazyAdamWTable::untouched_decay() const {
  return std::pow(1.0 - config_.learning_rate * config_.weight_decay,
                  static_cast<double>(step_));
}

}  // namespace qe
