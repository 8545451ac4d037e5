#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtl/common.hpp"
#include "mtl/dataset.hpp"

namespace mtl {

struct OutputSpec {
  TaskKind kind = TaskKind::classification;
  int num_classes = 2;

  int width() const { return kind == TaskKind::classification ? num_classes : 1; }
};

struct HeadSpec {
  std::string task_name;
  std::vector<int> hidden_layers;
  OutputSpec output;
};

/// Shared trunk of affine+ReLU layers feeding M task heads. An empty trunk
/// with one head and no hidden layers is plain logistic/linear regression.
struct NetworkTopology {
  int input_dim = 0;
  std::vector<int> shared_layers;
  std::vector<HeadSpec> heads;

  int trunk_output_dim() const {
    return shared_layers.empty() ? input_dim : shared_layers.back();
  }
  std::size_t parameter_count() const;
  void validate() const;  // std::invalid_argument on bad widths or no heads
};

/// Affine map x -> x W + b; W is fan_in x fan_out.
struct DenseLayer {
  Matrix weights;
  RowVector bias;
};

/// Parameters of a network. Gradients and optimizer moments use the same
/// shape, so the type doubles as a "gradient set".
struct ModelState {
  NetworkTopology topology;
  std::vector<DenseLayer> trunk;
  std::vector<std::vector<DenseLayer>> heads;  // last layer of each head is its output

  /// Every layer, trunk first then heads in order.
  std::vector<DenseLayer*> layers();
  std::vector<const DenseLayer*> layers() const;

  bool same_shape(const ModelState& other) const;
  bool all_finite() const;
};

using Gradients = ModelState;

/// Zero-filled state with the shape of `topology`.
ModelState zeros(const NetworkTopology& topology);

struct LayerCache {
  Matrix pre;   // affine output
  Matrix post;  // after activation (ReLU for hidden layers, identity/softmax for outputs)
};

struct ForwardCache {
  Matrix input;
  std::vector<LayerCache> trunk;
  std::vector<std::vector<LayerCache>> heads;
};

struct ForwardResult {
  /// Per head: N x K class probabilities, or N x 1 regression outputs.
  std::vector<Matrix> predictions;
  ForwardCache cache;
};

struct LossWeights {
  std::vector<double> lambda;

  /// Non-negative, at least one positive, length `tasks`.
  void validate(std::size_t tasks) const;
};

/// Glorot-uniform weights, zero biases.
ModelState init_params(const NetworkTopology& topology, std::uint64_t seed);

ForwardResult forward(const ModelState& state, const Matrix& batch);
std::vector<Matrix> predict(const ModelState& state, const Matrix& batch);

std::vector<double> softmax(std::span<const double> logits);

/// Mean cross-entropy with probabilities floored at 1e-12.
double loss_cls(const Matrix& probs, std::span<const int> labels);
/// Mean squared error.
double loss_reg(std::span<const double> preds, std::span<const double> targets);
/// sum_j lambda_j * L_j
double loss_mtl(std::span<const double> task_losses, const LossWeights& weights);

/// Loss of each head against the matching outcome.
std::vector<double> task_losses(std::span<const Matrix> predictions,
                                std::span<const OutcomeVector> targets);

/// Exact gradient of loss_mtl with respect to every parameter.
Gradients backward(const ModelState& state, const ForwardCache& cache,
                   std::span<const OutcomeVector> targets, const LossWeights& weights);

/// Row i holds d s(x_i) / d x_i where s is output unit `unit` of head `head`
/// before any softmax.
Matrix output_input_gradients(const ModelState& state, const Matrix& batch, std::size_t head,
                              std::size_t unit);

/// Activations of the first hidden layer on the path to `head` together with
/// the gradient of the chosen pre-softmax output with respect to them.
struct HiddenSensitivity {
  const DenseLayer* layer = nullptr;  // the layer producing the activations
  Matrix activations;
  Matrix gradients;
};
HiddenSensitivity first_hidden_sensitivity(const ModelState& state, const Matrix& batch,
                                           std::size_t head, std::size_t unit);

// ---------------------------------------------------------------------------
// Serialization. Doubles are written in shortest round-trip form, so a
// save/load cycle is value-exact.

struct SavedModel {
  ModelState state;
  std::vector<FeatureStats> normalization_stats;
  std::vector<std::string> feature_names;
};

nlohmann::json topology_to_json(const NetworkTopology& topology);
NetworkTopology topology_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const SavedModel& model);
SavedModel model_from_json(const nlohmann::json& j);

}  // namespace mtl
