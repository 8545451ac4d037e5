#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtl/common.hpp"
#include "mtl/dataset.hpp"

namespace mtl {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

/// One-vs-rest counts against `positive_class`.
ConfusionCounts confusion_counts(std::span<const int> pred_labels, std::span<const int> true_labels,
                                 int positive_class);

/// 2 tp / (2 tp + fp + fn), or 0 when that denominator is 0.
double f1_score(const ConfusionCounts& c);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Labels must be 0/1 with both present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Same definition as loss_reg.
double mse_metric(std::span<const double> preds, std::span<const double> targets);

/// Held-out performance of one head. For binary tasks `f1`/`auc` refer to
/// class 1. For K > 2 they are macro averages of the one-vs-rest values in
/// `class_f1`/`class_auc`. `auc` is NaN when the evaluated rows hold a single
/// class. Unused fields stay NaN.
struct TaskMetrics {
  std::string task_name;
  TaskKind kind = TaskKind::classification;
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> class_f1;
  std::vector<double> class_auc;

  nlohmann::json to_json() const;
};

TaskMetrics evaluate_task(const Matrix& predictions, const OutcomeVector& truth);

struct MetricsReport {
  std::vector<TaskMetrics> tasks;

  nlohmann::json to_json() const;
};

/// NaN is stored as JSON null.
nlohmann::json number_or_null(double v);

}  // namespace mtl
