#include "mtl/attrib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace mtl {

using nlohmann::json;

namespace {

// Mean of a column computed over its values in ascending order, so the
// result is independent of row order.
double ordered_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::vector<double> mean_abs_columns(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  std::vector<double> col(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) col[static_cast<std::size_t>(r)] = std::abs(m(r, c));
    out[static_cast<std::size_t>(c)] = ordered_mean(col);
  }
  return out;
}

std::vector<double> hidden_activation_scores(const ModelState& model, const Matrix& x,
                                             std::size_t head, std::size_t unit) {
  const auto sens = first_hidden_sensitivity(model, x, head, unit);
  const auto n = sens.activations.rows();
  const auto h = sens.activations.cols();
  std::vector<double> column(static_cast<std::size_t>(n));
  std::vector<double> relevance(static_cast<std::size_t>(h));
  for (Eigen::Index u = 0; u < h; ++u) {
    for (Eigen::Index r = 0; r < n; ++r) column[static_cast<std::size_t>(r)] = sens.gradients(r, u);
    const double alpha = ordered_mean(column);
    for (Eigen::Index r = 0; r < n; ++r)
      column[static_cast<std::size_t>(r)] = std::abs(alpha * sens.activations(r, u));
    relevance[static_cast<std::size_t>(u)] = ordered_mean(column);
  }
  const Matrix& w = sens.layer->weights;  // D x H
  std::vector<double> scores(static_cast<std::size_t>(w.rows()), 0.0);
  for (Eigen::Index d = 0; d < w.rows(); ++d)
    for (Eigen::Index u = 0; u < h; ++u)
      scores[static_cast<std::size_t>(d)] += std::abs(w(d, u)) * relevance[static_cast<std::size_t>(u)];
  return scores;
}

}  // namespace

AttributionReport grad_cam_features(const ModelState& model, const Dataset& dataset,
                                    std::size_t task_index, std::optional<int> target_class,
                                    AttributionMode mode) {
  if (task_index >= model.heads.size())
    throw std::out_of_range("attribution: task index " + std::to_string(task_index) +
                            " out of range (model has " + std::to_string(model.heads.size()) +
                            " heads)");
  if (dataset.n_features() != static_cast<std::size_t>(model.topology.input_dim))
    throw std::invalid_argument("attribution: dataset has " + std::to_string(dataset.n_features()) +
                                " features, model expects " +
                                std::to_string(model.topology.input_dim));
  if (dataset.n_samples() == 0) throw std::invalid_argument("attribution: empty dataset");

  const auto& head = model.topology.heads[task_index];
  AttributionReport report;
  report.task_name = !head.task_name.empty()              ? head.task_name
                     : task_index < dataset.n_tasks()      ? dataset.outcomes[task_index].task_name
                                                            : "task" + std::to_string(task_index);
  std::size_t unit = 0;
  if (head.output.kind == TaskKind::classification) {
    const int cls = target_class.value_or(1);
    if (cls < 0 || cls >= head.output.num_classes)
      throw std::out_of_range("attribution: class " + std::to_string(cls) + " out of range for '" +
                              report.task_name + "'");
    report.target_class = cls;
    unit = static_cast<std::size_t>(cls);
  } else if (target_class) {
    throw std::invalid_argument("attribution: '" + report.task_name +
                                "' is a regression task and takes no target class");
  }

  report.scores = mode == AttributionMode::input_gradient
                      ? mean_abs_columns(output_input_gradients(model, dataset.features, task_index, unit))
                      : hidden_activation_scores(model, dataset.features, task_index, unit);
  report.feature_names = dataset.feature_names;
  report.n_samples_used = dataset.n_samples();

  std::vector<std::size_t> order(report.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.scores[a] > report.scores[b];
  });
  for (auto i : order) report.ranking.push_back(report.feature_names[i]);
  return report;
}

std::vector<std::pair<std::string, double>> top_k(const AttributionReport& report, std::size_t k) {
  if (k < 1 || k > report.scores.size())
    throw std::out_of_range("top_k: k must lie in [1, " + std::to_string(report.scores.size()) +
                            "], got " + std::to_string(k));
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& name = report.ranking[i];
    const auto pos = static_cast<std::size_t>(
        std::find(report.feature_names.begin(), report.feature_names.end(), name) -
        report.feature_names.begin());
    out.emplace_back(name, report.scores[pos]);
  }
  return out;
}

json AttributionReport::to_json() const {
  json scores_obj = json::array();
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores_obj.push_back({{"feature", feature_names[i]}, {"score", scores[i]}});
  return {{"task", task_name},
          {"target", target_class ? json(*target_class) : json("regression")},
          {"scores", scores_obj},
          {"ranking", ranking},
          {"n_samples_used", n_samples_used}};
}

std::string AttributionReport::render_top(std::size_t k) const {
  std::ostringstream out;
  out << "Top " << k << " features for " << task_name;
  if (target_class) out << " (class " << *target_class << ")";
  out << ":\n";
  std::size_t i = 0;
  for (const auto& [name, score] : top_k(*this, k)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", score);
    out << "  " << ++i << ". " << name << "  " << buf << '\n';
  }
  return out.str();
}

}  // namespace mtl
