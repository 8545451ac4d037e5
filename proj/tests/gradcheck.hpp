#pragma once

// Central finite-difference oracle for the network's analytic gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mtl/network.hpp"
#include "mtl/rng.hpp"

namespace mtl::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  // Coordinates whose +-h perturbation flips some ReLU; the loss is not
  // differentiable across that kink, so the difference quotient is meaningless.
  std::size_t skipped = 0;
};

// Relative error with an absolute floor: gradient coordinates far below the
// floor are compared on an absolute scale, where the quotient's rounding noise
// (about 1e-16 / h) lives.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline double total_loss(const ModelState& s, const Matrix& x, std::span<const OutcomeVector> y,
                         const LossWeights& w) {
  const auto fr = forward(s, x);
  return loss_mtl(task_losses(fr.predictions, y), w);
}

inline std::vector<bool> relu_pattern(const ModelState& s, const Matrix& x) {
  const auto fr = forward(s, x);
  std::vector<bool> bits;
  auto add = [&](const Matrix& pre) {
    for (Eigen::Index i = 0; i < pre.size(); ++i) bits.push_back(pre.data()[i] > 0.0);
  };
  for (const auto& l : fr.cache.trunk) add(l.pre);
  for (const auto& head : fr.cache.heads)
    for (std::size_t i = 0; i + 1 < head.size(); ++i) add(head[i].pre);
  return bits;
}

inline GradCheckResult gradient_check(const ModelState& state, const Matrix& x,
                                      std::span<const OutcomeVector> y, const LossWeights& w,
                                      double h = 1e-5) {
  const auto fr = forward(state, x);
  const Gradients g = backward(state, fr.cache, y, w);
  ModelState probe = state;
  const auto params = probe.layers();
  const auto grads = g.layers();
  GradCheckResult out;
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto check = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + h;
      const double up = total_loss(probe, x, y, w);
      const auto pat_up = relu_pattern(probe, x);
      p = saved - h;
      const double down = total_loss(probe, x, y, w);
      const auto pat_down = relu_pattern(probe, x);
      p = saved;
      if (pat_up != pat_down) {
        ++out.skipped;
        return;
      }
      ++out.coords;
      out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic, (up - down) / (2 * h)));
    };
    for (Eigen::Index i = 0; i < params[l]->weights.size(); ++i)
      check(params[l]->weights.data()[i], grads[l]->weights.data()[i]);
    for (Eigen::Index i = 0; i < params[l]->bias.size(); ++i)
      check(params[l]->bias.data()[i], grads[l]->bias.data()[i]);
  }
  return out;
}

struct RandomProblem {
  ModelState state;
  Matrix x;
  std::vector<OutcomeVector> y;
  LossWeights weights;
  std::string describe;
};

// Random small topology: D <= 10, widths <= 16, M in {1, 2, 3}, mixed heads,
// empty trunks and empty head stacks included.
inline RandomProblem random_problem(std::uint64_t seed) {
  Rng rng(seed);
  NetworkTopology topo;
  topo.input_dim = 1 + static_cast<int>(rng.below(10));
  const auto depth = rng.below(3);
  for (std::uint64_t i = 0; i < depth; ++i) topo.shared_layers.push_back(1 + static_cast<int>(rng.below(16)));
  const auto m = 1 + rng.below(3);
  for (std::uint64_t j = 0; j < m; ++j) {
    HeadSpec h;
    h.task_name = "t" + std::to_string(j);
    const auto hd = rng.below(3);
    for (std::uint64_t i = 0; i < hd; ++i) h.hidden_layers.push_back(1 + static_cast<int>(rng.below(16)));
    if (rng.uniform() < 0.6) h.output = {TaskKind::classification, 2 + static_cast<int>(rng.below(3))};
    else h.output = {TaskKind::regression, 0};
    topo.heads.push_back(h);
  }
  RandomProblem p;
  p.state = init_params(topo, rng.next());
  // Nonzero biases so the check also exercises shifted ReLU boundaries.
  for (auto* layer : p.state.layers())
    for (Eigen::Index i = 0; i < layer->bias.size(); ++i) layer->bias(i) = 0.1 * rng.normal();
  const auto n = 1 + static_cast<Eigen::Index>(rng.below(8));
  p.x.resize(n, topo.input_dim);
  for (Eigen::Index i = 0; i < p.x.size(); ++i) p.x.data()[i] = rng.normal();
  for (const auto& h : topo.heads) {
    OutcomeVector o{h.task_name, h.output.kind, h.output.num_classes, {}, {}};
    for (Eigen::Index r = 0; r < n; ++r) {
      if (h.output.kind == TaskKind::classification)
        o.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(h.output.num_classes))));
      else
        o.targets.push_back(rng.normal());
    }
    p.y.push_back(std::move(o));
  }
  for (std::uint64_t j = 0; j < m; ++j) p.weights.lambda.push_back(rng.uniform(0.1, 2.0));
  p.describe = "D=" + std::to_string(topo.input_dim) + " trunk=" + std::to_string(depth) +
               " M=" + std::to_string(m) + " N=" + std::to_string(n);
  return p;
}

}  // namespace mtl::testing
