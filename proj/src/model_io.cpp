#include <cmath>

#include "mtl/network.hpp"

namespace mtl {

using nlohmann::json;

namespace {

constexpr int kModelFormatVersion = 1;

json layer_to_json(const DenseLayer& layer) {
  const auto* w = layer.weights.data();
  const auto* b = layer.bias.data();
  return {{"rows", layer.weights.rows()},
          {"cols", layer.weights.cols()},
          {"weights", std::vector<double>(w, w + layer.weights.size())},
          {"bias", std::vector<double>(b, b + layer.bias.size())}};
}

void layer_from_json(const json& j, DenseLayer& layer) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  if (rows != layer.weights.rows() || cols != layer.weights.cols() ||
      static_cast<Eigen::Index>(w.size()) != rows * cols ||
      static_cast<Eigen::Index>(b.size()) != cols)
    throw std::invalid_argument("model: layer shape does not match the topology");
  std::copy(w.begin(), w.end(), layer.weights.data());
  std::copy(b.begin(), b.end(), layer.bias.data());
}

}  // namespace

json topology_to_json(const NetworkTopology& t) {
  json heads = json::array();
  for (const auto& h : t.heads) {
    json output = {{"type", h.output.kind == TaskKind::classification ? "classification"
                                                                        : "regression"}};
    if (h.output.kind == TaskKind::classification) output["num_classes"] = h.output.num_classes;
    heads.push_back({{"task_name", h.task_name}, {"hidden_layers", h.hidden_layers},
                     {"output", output}});
  }
  return {{"input_dim", t.input_dim}, {"shared_layers", t.shared_layers}, {"heads", heads}};
}

NetworkTopology topology_from_json(const json& j) {
  NetworkTopology t;
  t.input_dim = j.at("input_dim").get<int>();
  t.shared_layers = j.at("shared_layers").get<std::vector<int>>();
  for (const auto& h : j.at("heads")) {
    HeadSpec head;
    head.task_name = h.value("task_name", std::string());
    head.hidden_layers = h.at("hidden_layers").get<std::vector<int>>();
    const auto& out = h.at("output");
    const auto type = out.at("type").get<std::string>();
    if (type == "classification") {
      head.output = {TaskKind::classification, out.value("num_classes", 2)};
    } else if (type == "regression") {
      head.output = {TaskKind::regression, 1};
    } else {
      throw std::invalid_argument("topology: unknown output type '" + type + "'");
    }
    t.heads.push_back(std::move(head));
  }
  t.validate();
  return t;
}

json model_to_json(const SavedModel& model) {
  const auto& s = model.state;
  json trunk = json::array();
  for (const auto& l : s.trunk) trunk.push_back(layer_to_json(l));
  json heads = json::array();
  for (const auto& h : s.heads) {
    json layers = json::array();
    for (const auto& l : h) layers.push_back(layer_to_json(l));
    heads.push_back(layers);
  }
  return {{"version", kModelFormatVersion},
          {"topology", topology_to_json(s.topology)},
          {"trunk", trunk},
          {"heads", heads},
          {"normalization_stats", stats_to_json(model.normalization_stats)},
          {"feature_names", model.feature_names}};
}

SavedModel model_from_json(const json& j) {
  if (j.at("version").get<int>() != kModelFormatVersion)
    throw std::invalid_argument("model: unsupported format version");
  SavedModel m;
  m.state = zeros(topology_from_json(j.at("topology")));
  const auto& trunk = j.at("trunk");
  const auto& heads = j.at("heads");
  if (trunk.size() != m.state.trunk.size() || heads.size() != m.state.heads.size())
    throw std::invalid_argument("model: layer count does not match the topology");
  for (std::size_t l = 0; l < trunk.size(); ++l) layer_from_json(trunk[l], m.state.trunk[l]);
  for (std::size_t h = 0; h < heads.size(); ++h) {
    if (heads[h].size() != m.state.heads[h].size())
      throw std::invalid_argument("model: head layer count does not match the topology");
    for (std::size_t l = 0; l < heads[h].size(); ++l)
      layer_from_json(heads[h][l], m.state.heads[h][l]);
  }
  if (!m.state.all_finite()) throw std::invalid_argument("model: non-finite parameter");
  m.normalization_stats = stats_from_json(j.value("normalization_stats", json::array()));
  m.feature_names = j.value("feature_names", std::vector<std::string>{});
  return m;
}

}  // namespace mtl
