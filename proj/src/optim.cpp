#include "mtl/optim.hpp"

#include <cmath>
#include <numbers>

namespace mtl {

AdamState AdamState::init(const ModelState& params, const AdamHyper& hyper) {
  AdamState s;
  s.first_moment = zeros(params.topology);
  s.second_moment = zeros(params.topology);
  s.beta1 = hyper.beta1;
  s.beta2 = hyper.beta2;
  s.epsilon = hyper.epsilon;
  return s;
}

void ScheduleConfig::validate() const {
  if (!(lr0 >= 0.0) || !(lr_min >= 0.0) || lr_min > lr0)
    throw std::invalid_argument("schedule: need 0 <= lr_min <= lr0");
  if (total_steps < 1) throw std::invalid_argument("schedule: total_steps must be >= 1");
}

double cosine_lr(std::int64_t t, const ScheduleConfig& cfg) {
  cfg.validate();
  if (t < 0 || t > cfg.total_steps)
    throw std::out_of_range("cosine_lr: step " + std::to_string(t) + " outside [0, " +
                            std::to_string(cfg.total_steps) + "]");
  const double phase = std::numbers::pi * static_cast<double>(t) /
                       static_cast<double>(cfg.total_steps);
  // Same value as lr_min + (lr0 - lr_min) * w, written as a blend so that both
  // endpoints come out exactly.
  const double w = 0.5 * (1.0 + std::cos(phase));
  return w * cfg.lr0 + (1.0 - w) * cfg.lr_min;
}

void adam_update(ModelState& params, const Gradients& grads, AdamState& state, double lr,
                 double weight_decay) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment))
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: learning rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("adam_step: weight decay must be >= 0");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, eps = state.epsilon;

  auto p = params.layers();
  const auto g = grads.layers();
  auto m = state.first_moment.layers();
  auto v = state.second_moment.layers();

  auto update = [&](double* param, const double* grad, double* m1, double* m2, Eigen::Index n,
                    double decay) {
    for (Eigen::Index i = 0; i < n; ++i) {
      m1[i] = b1 * m1[i] + (1.0 - b1) * grad[i];
      m2[i] = b2 * m2[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m1[i] / c1;
      const double v_hat = m2[i] / c2;
      param[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + decay * param[i]);
    }
  };

  for (std::size_t l = 0; l < p.size(); ++l) {
    update(p[l]->weights.data(), g[l]->weights.data(), m[l]->weights.data(),
           v[l]->weights.data(), p[l]->weights.size(), weight_decay);
    update(p[l]->bias.data(), g[l]->bias.data(), m[l]->bias.data(), v[l]->bias.data(),
           p[l]->bias.size(), 0.0);
  }
}

AdamStepResult adam_step(const ModelState& params, const Gradients& grads, const AdamState& state,
                         double lr, double weight_decay) {
  AdamStepResult out{params, state};
  adam_update(out.params, grads, out.state, lr, weight_decay);
  return out;
}

}  // namespace mtl
