#include "mtl/network.hpp"

#include <algorithm>
#include <cmath>

#include "mtl/rng.hpp"

namespace mtl {

namespace {

constexpr double kProbFloor = 1e-12;

DenseLayer zero_layer(int fan_in, int fan_out) {
  return {Matrix::Zero(fan_in, fan_out), RowVector::Zero(fan_out)};
}

// Layer widths along one head, starting from the trunk output.
std::vector<int> head_widths(const NetworkTopology& t, const HeadSpec& head) {
  std::vector<int> w{t.trunk_output_dim()};
  w.insert(w.end(), head.hidden_layers.begin(), head.hidden_layers.end());
  w.push_back(head.output.width());
  return w;
}

Matrix affine(const Matrix& a, const DenseLayer& layer) {
  Matrix z = a * layer.weights;
  z.rowwise() += layer.bias;
  return z;
}

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

// ReLU derivative with d/dz at 0 taken as 0.
Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
  return grad.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      p(r, c) = std::exp(logits(r, c) - m);
      s += p(r, c);
    }
    p.row(r) /= s;
  }
  return p;
}

std::span<const double> column_span(const Matrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

struct BackwardRequest {
  std::vector<std::optional<Matrix>> head_seeds;  // d(objective)/d(output pre-activation)
  Gradients* grads = nullptr;
  Matrix* input_grad = nullptr;
  Matrix* first_hidden_grad = nullptr;
  std::size_t first_hidden_head = 0;  // which head's branch when the trunk is empty
};

void check_cache(const ModelState& state, const ForwardCache& cache) {
  bool ok = cache.trunk.size() == state.trunk.size() &&
            cache.heads.size() == state.heads.size() &&
            cache.input.cols() == state.topology.input_dim;
  for (std::size_t j = 0; ok && j < state.heads.size(); ++j)
    ok = cache.heads[j].size() == state.heads[j].size();
  for (std::size_t l = 0; ok && l < cache.trunk.size(); ++l)
    ok = cache.trunk[l].pre.rows() == cache.input.rows() &&
         cache.trunk[l].pre.cols() == state.trunk[l].weights.cols();
  for (std::size_t j = 0; ok && j < cache.heads.size(); ++j)
    for (std::size_t l = 0; ok && l < cache.heads[j].size(); ++l)
      ok = cache.heads[j][l].pre.rows() == cache.input.rows() &&
           cache.heads[j][l].pre.cols() == state.heads[j][l].weights.cols();
  if (!ok) throw std::invalid_argument("backward: cache does not match the model");
}

void propagate(const ModelState& state, const ForwardCache& cache, const BackwardRequest& req) {
  const Matrix& trunk_out = cache.trunk.empty() ? cache.input : cache.trunk.back().post;
  Matrix d_trunk_out = Matrix::Zero(trunk_out.rows(), trunk_out.cols());

  for (std::size_t j = 0; j < state.heads.size(); ++j) {
    if (!req.head_seeds[j]) continue;
    const auto& layers = state.heads[j];
    const auto& caches = cache.heads[j];
    Matrix dz = *req.head_seeds[j];
    for (std::size_t l = layers.size(); l-- > 0;) {
      const Matrix& a_prev = l == 0 ? trunk_out : caches[l - 1].post;
      if (req.grads) {
        auto& g = req.grads->heads[j][l];
        g.weights.noalias() = a_prev.transpose() * dz;
        g.bias = dz.colwise().sum();
      }
      Matrix da_prev = dz * layers[l].weights.transpose();
      if (l == 0) {
        d_trunk_out += da_prev;
      } else {
        if (l == 1 && req.first_hidden_grad && state.trunk.empty() && j == req.first_hidden_head)
          *req.first_hidden_grad = da_prev;
        dz = relu_backward(da_prev, caches[l - 1].pre);
      }
    }
  }

  Matrix da = std::move(d_trunk_out);
  for (std::size_t l = state.trunk.size(); l-- > 0;) {
    if (l == 0 && req.first_hidden_grad) *req.first_hidden_grad = da;
    const Matrix dz = relu_backward(da, cache.trunk[l].pre);
    const Matrix& a_prev = l == 0 ? cache.input : cache.trunk[l - 1].post;
    if (req.grads) {
      auto& g = req.grads->trunk[l];
      g.weights.noalias() = a_prev.transpose() * dz;
      g.bias = dz.colwise().sum();
    }
    if (l > 0 || req.input_grad) da = dz * state.trunk[l].weights.transpose();
  }
  if (req.input_grad) *req.input_grad = std::move(da);
}

void check_unit(const ModelState& state, std::size_t head, std::size_t unit) {
  if (head >= state.heads.size())
    throw std::out_of_range("head index " + std::to_string(head) + " out of range");
  if (unit >= static_cast<std::size_t>(state.topology.heads[head].output.width()))
    throw std::out_of_range("output unit " + std::to_string(unit) + " out of range");
}

BackwardRequest unit_seed(const ModelState& state, const ForwardCache& cache, std::size_t head,
                          std::size_t unit) {
  BackwardRequest req;
  req.head_seeds.resize(state.heads.size());
  Matrix seed = Matrix::Zero(cache.input.rows(), state.topology.heads[head].output.width());
  seed.col(static_cast<Eigen::Index>(unit)).setOnes();
  req.head_seeds[head] = std::move(seed);
  return req;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t NetworkTopology::parameter_count() const {
  std::size_t count = 0;
  int prev = input_dim;
  for (int w : shared_layers) {
    count += static_cast<std::size_t>(prev) * w + w;
    prev = w;
  }
  for (const auto& head : heads) {
    const auto widths = head_widths(*this, head);
    for (std::size_t l = 1; l < widths.size(); ++l)
      count += static_cast<std::size_t>(widths[l - 1]) * widths[l] + widths[l];
  }
  return count;
}

void NetworkTopology::validate() const {
  if (input_dim < 1) throw std::invalid_argument("topology: input_dim must be >= 1");
  if (heads.empty()) throw std::invalid_argument("topology: needs at least one head");
  for (int w : shared_layers)
    if (w < 1) throw std::invalid_argument("topology: shared layer widths must be >= 1");
  for (const auto& head : heads) {
    for (int w : head.hidden_layers)
      if (w < 1) throw std::invalid_argument("topology: head layer widths must be >= 1");
    if (head.output.kind == TaskKind::classification && head.output.num_classes < 2)
      throw std::invalid_argument("topology: classification heads need >= 2 classes");
  }
}

std::vector<DenseLayer*> ModelState::layers() {
  std::vector<DenseLayer*> out;
  for (auto& l : trunk) out.push_back(&l);
  for (auto& h : heads)
    for (auto& l : h) out.push_back(&l);
  return out;
}

std::vector<const DenseLayer*> ModelState::layers() const {
  std::vector<const DenseLayer*> out;
  for (const auto& l : trunk) out.push_back(&l);
  for (const auto& h : heads)
    for (const auto& l : h) out.push_back(&l);
  return out;
}

bool ModelState::same_shape(const ModelState& other) const {
  const auto a = layers();
  const auto b = other.layers();
  if (a.size() != b.size() || trunk.size() != other.trunk.size() ||
      heads.size() != other.heads.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]->weights.rows() != b[i]->weights.rows() ||
        a[i]->weights.cols() != b[i]->weights.cols() || a[i]->bias.size() != b[i]->bias.size())
      return false;
  return true;
}

bool ModelState::all_finite() const {
  for (const auto* l : layers())
    if (!l->weights.allFinite() || !l->bias.allFinite()) return false;
  return true;
}

ModelState zeros(const NetworkTopology& topology) {
  topology.validate();
  ModelState s;
  s.topology = topology;
  int prev = topology.input_dim;
  for (int w : topology.shared_layers) {
    s.trunk.push_back(zero_layer(prev, w));
    prev = w;
  }
  for (const auto& head : topology.heads) {
    const auto widths = head_widths(topology, head);
    std::vector<DenseLayer> layers;
    for (std::size_t l = 1; l < widths.size(); ++l)
      layers.push_back(zero_layer(widths[l - 1], widths[l]));
    s.heads.push_back(std::move(layers));
  }
  return s;
}

void LossWeights::validate(std::size_t tasks) const {
  if (lambda.size() != tasks)
    throw std::invalid_argument("loss weights: expected " + std::to_string(tasks) +
                                " values, got " + std::to_string(lambda.size()));
  bool any_positive = false;
  for (double l : lambda) {
    if (!(l >= 0.0) || !std::isfinite(l))
      throw std::invalid_argument("loss weights must be finite and non-negative");
    any_positive |= l > 0.0;
  }
  if (!any_positive) throw std::invalid_argument("loss weights: at least one must be positive");
}

ModelState init_params(const NetworkTopology& topology, std::uint64_t seed) {
  ModelState s = zeros(topology);
  Rng rng(seed);
  for (auto* layer : s.layers()) {
    const double fan_in = static_cast<double>(layer->weights.rows());
    const double fan_out = static_cast<double>(layer->weights.cols());
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (Eigen::Index i = 0; i < layer->weights.size(); ++i)
      layer->weights.data()[i] = rng.uniform(-a, a);
  }
  return s;
}

ForwardResult forward(const ModelState& state, const Matrix& batch) {
  if (batch.cols() != state.topology.input_dim)
    throw std::invalid_argument("forward: batch has " + std::to_string(batch.cols()) +
                                " columns, model expects " +
                                std::to_string(state.topology.input_dim));
  if (!batch.allFinite()) throw std::invalid_argument("forward: non-finite input");

  ForwardResult out;
  auto& cache = out.cache;
  cache.input = batch;
  for (const auto& layer : state.trunk) {
    const Matrix& a = cache.trunk.empty() ? cache.input : cache.trunk.back().post;
    LayerCache lc;
    lc.pre = affine(a, layer);
    lc.post = relu(lc.pre);
    cache.trunk.push_back(std::move(lc));
  }
  const Matrix& trunk_out = cache.trunk.empty() ? cache.input : cache.trunk.back().post;

  for (std::size_t j = 0; j < state.heads.size(); ++j) {
    const auto& layers = state.heads[j];
    std::vector<LayerCache> hc;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Matrix& a = l == 0 ? trunk_out : hc.back().post;
      LayerCache lc;
      lc.pre = affine(a, layers[l]);
      if (l + 1 < layers.size())
        lc.post = relu(lc.pre);
      else if (state.topology.heads[j].output.kind == TaskKind::classification)
        lc.post = softmax_rows(lc.pre);
      else
        lc.post = lc.pre;
      hc.push_back(std::move(lc));
    }
    out.predictions.push_back(hc.back().post);
    cache.heads.push_back(std::move(hc));
  }
  return out;
}

std::vector<Matrix> predict(const ModelState& state, const Matrix& batch) {
  return forward(state, batch).predictions;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    s += p[i];
  }
  for (auto& v : p) v /= s;
  return p;
}

double loss_cls(const Matrix& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size())
    throw std::invalid_argument("loss_cls: probs and labels differ in length");
  if (labels.empty()) throw std::invalid_argument("loss_cls: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= probs.cols())
      throw std::invalid_argument("loss_cls: label " + std::to_string(labels[i]) +
                                  " out of range at row " + std::to_string(i));
    sum += std::log(std::max(probs(static_cast<Eigen::Index>(i), labels[i]), kProbFloor));
  }
  return -sum / static_cast<double>(labels.size());
}

double loss_reg(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size())
    throw std::invalid_argument("loss_reg: length mismatch (" + std::to_string(preds.size()) +
                                " vs " + std::to_string(targets.size()) + ")");
  if (preds.empty()) throw std::invalid_argument("loss_reg: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = targets[i] - preds[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double loss_mtl(std::span<const double> task_losses, const LossWeights& weights) {
  if (task_losses.size() != weights.lambda.size())
    throw std::invalid_argument("loss_mtl: " + std::to_string(task_losses.size()) +
                                " losses but " + std::to_string(weights.lambda.size()) +
                                " weights");
  weights.validate(task_losses.size());
  double total = 0.0;
  for (std::size_t j = 0; j < task_losses.size(); ++j) total += weights.lambda[j] * task_losses[j];
  return total;
}

std::vector<double> task_losses(std::span<const Matrix> predictions,
                                std::span<const OutcomeVector> targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("task_losses: head/task count mismatch");
  std::vector<double> losses;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (targets[j].kind == TaskKind::classification)
      losses.push_back(loss_cls(predictions[j], targets[j].labels));
    else
      losses.push_back(loss_reg(column_span(predictions[j]), targets[j].targets));
  }
  return losses;
}

Gradients backward(const ModelState& state, const ForwardCache& cache,
                   std::span<const OutcomeVector> targets, const LossWeights& weights) {
  check_cache(state, cache);
  weights.validate(state.heads.size());
  if (targets.size() != state.heads.size())
    throw std::invalid_argument("backward: expected one target vector per head");

  const Eigen::Index n = cache.input.rows();
  BackwardRequest req;
  req.head_seeds.resize(state.heads.size());
  for (std::size_t j = 0; j < state.heads.size(); ++j) {
    const auto& t = targets[j];
    if (static_cast<Eigen::Index>(t.size()) != n)
      throw std::invalid_argument("backward: target length does not match the cached batch");
    if ((t.kind == TaskKind::classification) !=
        (state.topology.heads[j].output.kind == TaskKind::classification))
      throw std::invalid_argument("backward: target kind does not match head " +
                                  std::to_string(j));
    if (weights.lambda[j] == 0.0) continue;
    const double scale = weights.lambda[j] / static_cast<double>(n);
    const Matrix& out = cache.heads[j].back().post;
    Matrix seed;
    if (t.kind == TaskKind::classification) {
      seed = out;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int y = t.labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= seed.cols())
          throw std::invalid_argument("backward: label out of range");
        seed(i, y) -= 1.0;
      }
      seed *= scale;
    } else {
      seed.resize(n, 1);
      for (Eigen::Index i = 0; i < n; ++i)
        seed(i, 0) = 2.0 * scale * (out(i, 0) - t.targets[static_cast<std::size_t>(i)]);
    }
    req.head_seeds[j] = std::move(seed);
  }

  Gradients grads = zeros(state.topology);
  req.grads = &grads;
  propagate(state, cache, req);
  return grads;
}

Matrix output_input_gradients(const ModelState& state, const Matrix& batch, std::size_t head,
                              std::size_t unit) {
  check_unit(state, head, unit);
  const auto fwd = forward(state, batch);
  // Rows are independent, so the gradient of the summed output gives every
  // per-row gradient at once.
  auto req = unit_seed(state, fwd.cache, head, unit);
  Matrix input_grad;
  req.input_grad = &input_grad;
  propagate(state, fwd.cache, req);
  return input_grad;
}

HiddenSensitivity first_hidden_sensitivity(const ModelState& state, const Matrix& batch,
                                           std::size_t head, std::size_t unit) {
  check_unit(state, head, unit);
  HiddenSensitivity out;
  const auto fwd = forward(state, batch);
  if (!state.trunk.empty()) {
    out.layer = &state.trunk.front();
    out.activations = fwd.cache.trunk.front().post;
  } else if (state.heads[head].size() > 1) {
    out.layer = &state.heads[head].front();
    out.activations = fwd.cache.heads[head].front().post;
  } else {
    throw std::invalid_argument("model has no hidden layer on the path to head " +
                                std::to_string(head));
  }
  auto req = unit_seed(state, fwd.cache, head, unit);
  req.first_hidden_grad = &out.gradients;
  req.first_hidden_head = head;
  propagate(state, fwd.cache, req);
  return out;
}

}  // namespace mtl
