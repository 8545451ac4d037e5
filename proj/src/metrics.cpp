#include "mtl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtl/network.hpp"

namespace mtl {

using nlohmann::json;

ConfusionCounts confusion_counts(std::span<const int> pred_labels, std::span<const int> true_labels,
                                 int positive_class) {
  if (pred_labels.size() != true_labels.size())
    throw std::invalid_argument("confusion_counts: length mismatch");
  if (pred_labels.empty()) throw std::invalid_argument("confusion_counts: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    const bool p = pred_labels[i] == positive_class;
    const bool t = true_labels[i] == positive_class;
    if (p && t)
      ++c.tp;
    else if (p)
      ++c.fp;
    else if (t)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double f1_score(const ConfusionCounts& c) {
  const auto denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::size_t n_pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("roc_auc: labels must be 0 or 1");
    n_pos += static_cast<std::size_t>(y);
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("roc_auc: both classes must be present");

  // Mann-Whitney U from mid-ranks; tied scores share the average rank.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_block = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_block += static_cast<std::size_t>(labels[order[j]]);
      ++j;
    }
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    pos_rank_sum += mid_rank * static_cast<double>(pos_in_block);
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double mse_metric(std::span<const double> preds, std::span<const double> targets) {
  return loss_reg(preds, targets);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json TaskMetrics::to_json() const {
  json j = {{"task", task_name},
            {"kind", kind == TaskKind::classification ? "classification" : "regression"}};
  if (kind == TaskKind::classification) {
    j["f1"] = number_or_null(f1);
    j["auc"] = number_or_null(auc);
    if (class_f1.size() > 2) {
      json cf = json::array(), ca = json::array();
      for (double v : class_f1) cf.push_back(number_or_null(v));
      for (double v : class_auc) ca.push_back(number_or_null(v));
      j["class_f1"] = cf;
      j["class_auc"] = ca;
    }
  } else {
    j["mse"] = number_or_null(mse);
  }
  return j;
}

json MetricsReport::to_json() const {
  json arr = json::array();
  for (const auto& t : tasks) arr.push_back(t.to_json());
  return {{"tasks", arr}};
}

TaskMetrics evaluate_task(const Matrix& predictions, const OutcomeVector& truth) {
  TaskMetrics m;
  m.task_name = truth.task_name;
  m.kind = truth.kind;
  if (static_cast<std::size_t>(predictions.rows()) != truth.size())
    throw std::invalid_argument("evaluate_task: prediction count does not match '" +
                                truth.task_name + "'");
  if (truth.kind == TaskKind::regression) {
    m.mse = mse_metric({predictions.data(), static_cast<std::size_t>(predictions.size())},
                       truth.targets);
    return m;
  }

  const auto k = predictions.cols();
  std::vector<int> pred_labels(truth.labels.size());
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    Eigen::Index arg = 0;
    predictions.row(i).maxCoeff(&arg);
    pred_labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }

  auto one_vs_rest_auc = [&](Eigen::Index cls) {
    std::vector<double> scores(truth.labels.size());
    std::vector<int> binary(truth.labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = predictions(static_cast<Eigen::Index>(i), cls);
      binary[i] = truth.labels[i] == cls ? 1 : 0;
    }
    const auto pos = std::count(binary.begin(), binary.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(binary.size()))
      return std::numeric_limits<double>::quiet_NaN();
    return roc_auc(scores, binary);
  };

  for (Eigen::Index c = 0; c < k; ++c) {
    m.class_f1.push_back(f1_score(confusion_counts(pred_labels, truth.labels, static_cast<int>(c))));
    m.class_auc.push_back(one_vs_rest_auc(c));
  }
  if (k == 2) {
    m.f1 = m.class_f1[1];
    m.auc = m.class_auc[1];
  } else {
    m.f1 = std::accumulate(m.class_f1.begin(), m.class_f1.end(), 0.0) / static_cast<double>(k);
    double sum = 0.0;
    int defined = 0;
    for (double a : m.class_auc)
      if (std::isfinite(a)) {
        sum += a;
        ++defined;
      }
    m.auc = defined ? sum / defined : std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

}  // namespace mtl
