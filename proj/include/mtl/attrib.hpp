#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mtl/dataset.hpp"
#include "mtl/network.hpp"

namespace mtl {

enum class AttributionMode {
  /// Mean absolute gradient of the target output with respect to each input.
  input_gradient,
  /// Experimental. Grad-CAM on the first hidden layer: each unit's activation
  /// weighted by its batch-averaged gradient, projected back onto the inputs
  /// through the absolute first-layer weights.
  hidden_activation,
};

struct AttributionReport {
  std::string task_name;
  std::optional<int> target_class;  // empty for regression heads
  std::vector<std::string> feature_names;
  std::vector<double> scores;        // one per feature, >= 0
  std::vector<std::string> ranking;  // descending score, ties by feature order
  std::size_t n_samples_used = 0;

  nlohmann::json to_json() const;
  /// "1. name (score)" lines for the first k features.
  std::string render_top(std::size_t k) const;
};

/// Feature importance for one head, computed from the pre-softmax output of
/// `target_class` (default 1) or the regression output. Per-feature sums
/// are accumulated in sorted order, so the result does not depend on the
/// order of the dataset rows.
AttributionReport grad_cam_features(const ModelState& model, const Dataset& dataset,
                                    std::size_t task_index,
                                    std::optional<int> target_class = std::nullopt,
                                    AttributionMode mode = AttributionMode::input_gradient);

std::vector<std::pair<std::string, double>> top_k(const AttributionReport& report, std::size_t k);

}  // namespace mtl
