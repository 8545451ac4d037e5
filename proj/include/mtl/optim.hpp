#pragma once

#include <cstdint>

#include "mtl/network.hpp"

namespace mtl {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::int64_t step_count = 0;
  ModelState first_moment;
  ModelState second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  /// Zero moments shaped like `params`.
  static AdamState init(const ModelState& params, const AdamHyper& hyper = {});
};

struct ScheduleConfig {
  double lr0 = 1e-2;
  double lr_min = 0.0;
  std::int64_t total_steps = 1;

  void validate() const;
};

/// lr_min + (lr0 - lr_min) * (1 + cos(pi t / T)) / 2 for 0 <= t <= T.
double cosine_lr(std::int64_t t, const ScheduleConfig& cfg);

/// Adam with decoupled weight decay:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Biases are not decayed.
void adam_update(ModelState& params, const Gradients& grads, AdamState& state, double lr,
                 double weight_decay);

struct AdamStepResult {
  ModelState params;
  AdamState state;
};

/// Value form of adam_update.
AdamStepResult adam_step(const ModelState& params, const Gradients& grads, const AdamState& state,
                         double lr, double weight_decay);

}  // namespace mtl
