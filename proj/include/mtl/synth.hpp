#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mtl/dataset.hpp"
#include "mtl/metrics.hpp"

namespace mtl {

/// Linear-Gaussian generator with tunable signal sharing between tasks.
///
/// Features are i.i.d. standard normal. The first `n_informative` coordinates
/// carry signal; every other coordinate has weight exactly 0 in every task.
/// Task j's latent score is
///     s_j = rho * (w_shared . x) + (1 - rho) * (w_j . x) + noise
/// where the task-specific supports partition the informative coordinates
/// (coordinate i belongs to task i mod M) and each w_j matches the sign of
/// w_shared on its support. One binary task is emitted per entry
/// of `class_balance`, thresholded at the empirical quantile that yields that
/// positive rate, followed by one regression task whose target is its score.
struct SynthConfig {
  std::size_t n_samples = 500;
  std::size_t n_features = 30;
  std::size_t n_informative = 5;
  double rho = 0.5;
  double noise_std = 0.5;
  double missing_frac = 0.0;
  std::vector<double> class_balance{0.5, 0.5};
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t n_tasks() const { return class_balance.size() + 1; }

  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct GroundTruth {
  std::vector<double> shared_weights;
  std::vector<std::vector<double>> task_specific_weights;  // one per task
  std::vector<double> thresholds;                          // one per classification task
  double noise_std = 0.0;
  double rho = 0.0;

  /// Indices with a nonzero weight in the shared or any task-specific vector.
  std::vector<std::size_t> informative_features() const;
  /// Noise-free score of task j for every row of `features`.
  std::vector<double> clean_scores(const Matrix& features, std::size_t task) const;

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
};

struct SynthResult {
  Dataset dataset;  // complete data, raw (unnormalized) features
  GroundTruth truth;
  RawTable table;   // same data as a table; feature cells masked when missing_frac > 0
};

/// Deterministic in `config.seed`. Draw order from the single stream:
/// shared weights, task-specific weights, features (row-major), noise
/// (row-major, task-minor), then the mask.
SynthResult generate(const SynthConfig& config);

/// Reference metrics from predicting with the noise-free latent scores.
MetricsReport oracle_bayes_metrics(const GroundTruth& truth, const Dataset& dataset);

}  // namespace mtl
