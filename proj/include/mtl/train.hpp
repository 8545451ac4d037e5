#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtl/dataset.hpp"
#include "mtl/metrics.hpp"
#include "mtl/network.hpp"
#include "mtl/optim.hpp"

namespace mtl {

struct TrainConfig {
  NetworkTopology topology;
  LossWeights loss_weights;
  double lr0 = 1e-2;
  double lr_min = 0.0;
  double weight_decay = 1e-2;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  bool leaky_stats = false;
  AdamHyper adam;

  void validate() const;
};

/// Topology whose heads follow the dataset's outcomes. `head_hidden` holds
/// either one layer list shared by every head or one list per head.
NetworkTopology make_topology(const Dataset& dataset, const std::vector<int>& shared_layers,
                              const std::vector<std::vector<int>>& head_hidden);

/// Reads {"shared_layers", "head_layers", "loss_weights", "lr0", "lr_min",
/// "weight_decay", "epochs", "batch_size", "leaky_stats", "seed"}; heads are
/// taken from `dataset`. Missing loss weights default to 1 for every task.
/// A "topology" object (as written by train_config_to_json) may replace the
/// two layer keys.
TrainConfig train_config_from_json(const nlohmann::json& j, const Dataset& dataset);
nlohmann::json train_config_to_json(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double total_loss = 0.0;
  std::vector<double> task_losses;
};

struct TrainResult {
  ModelState model;
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam on the weighted multi-task loss. Each epoch reshuffles the
/// rows and walks them in batches of `batch_size`; the last batch keeps its
/// true (smaller) size. The learning rate follows the cosine schedule over
/// epochs * ceil(N / batch_size) steps. The history records the loss on the
/// full training set after every epoch. Throws NumericalError on a
/// non-finite loss.
TrainResult train_model(const Dataset& dataset, const TrainConfig& config);

nlohmann::json history_to_json(std::span<const EpochRecord> history,
                               std::span<const OutcomeVector> tasks);

// ---------------------------------------------------------------------------
// Cross-validation

/// Seed of fold `fold` under cross-validation seed `seed`.
inline std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(fold);
}

struct FoldModel {
  std::vector<FeatureStats> stats;
  TrainResult result;
};

/// Fits normalization on the fold's training rows (all rows when
/// config.leaky_stats) and trains on the normalized training rows.
FoldModel train_fold(const Dataset& dataset, const FoldPlan& plan, int fold,
                     const TrainConfig& config, std::uint64_t cv_seed);

struct FoldResult {
  int fold = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> test_indices;
  std::vector<FeatureStats> stats;
  std::vector<TaskMetrics> metrics;
};

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over folds
  int count = 0;     // folds where the metric was defined
};

struct TaskSummary {
  std::string task_name;
  TaskKind kind = TaskKind::classification;
  SummaryStat f1, auc, mse;

  nlohmann::json to_json() const;
};

struct CvReport {
  int k = 0;
  std::uint64_t seed = 0;
  TrainConfig config;
  std::vector<FoldResult> folds;
  std::vector<TaskSummary> summary;  // fold-averaged
  std::vector<TaskMetrics> pooled;   // metrics of the pooled out-of-fold predictions

  nlohmann::json to_json() const;
};

std::vector<TaskSummary> summarize(std::span<const FoldResult> folds);

CvReport cross_validate(const Dataset& dataset, const TrainConfig& config, int k,
                        std::uint64_t seed, int jobs = 1);

/// Fixed-width table: F1 and AUC (in %) per classification task and MSE per
/// regression task, one line per labelled row, fold-averaged values.
struct TableRow {
  std::string label;
  std::vector<TaskSummary> summary;
};
std::string render_table(std::span<const TableRow> rows);

// ---------------------------------------------------------------------------
// Grid search

struct SearchSpace {
  std::vector<int> trunk_depths{1};
  std::vector<int> trunk_widths{64};
  std::vector<int> head_depths{1};
  std::vector<int> head_widths{64};
  std::vector<double> lr0s{1e-2};
  std::vector<double> weight_decays{1e-2};
  std::vector<int> epochs{50};
  /// Candidate lambda vectors. Empty means: primary task fixed at 1, every
  /// other task drawn from {0.25, 0.5, 1, 2}.
  std::vector<std::vector<double>> loss_weights;
  double lr_min = 0.0;
  int batch_size = 64;
  bool leaky_stats = false;
  std::size_t budget = 100;
  std::string primary_task;
  std::uint64_t seed = 0;

  void validate() const;
  static SearchSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Full Cartesian product in enumeration order (trunk depth outermost, then
/// trunk width, head depth, head width, lr0, weight decay, epochs, loss weights).
std::vector<TrainConfig> enumerate_space(const SearchSpace& space, const Dataset& dataset);

struct Trial {
  std::size_t index = 0;  // position in the enumeration
  TrainConfig config;
  std::size_t parameter_count = 0;
  std::vector<TaskSummary> summary;

  nlohmann::json to_json() const;
};

/// Position of the winning trial: highest fold-mean AUC (classification) or
/// lowest fold-mean MSE (regression) on `primary_task`; ties go to fewer
/// parameters, then to the earlier enumeration index.
std::size_t select_best(std::span<const Trial> trials, std::string_view primary_task);

struct GridSearchResult {
  TrainConfig best;
  CvReport report;
  std::vector<Trial> trials;
  std::size_t best_trial = 0;
};

/// Evaluates every configuration (or `budget` of them sampled without
/// replacement when the product is larger) by k-fold cross-validation.
GridSearchResult grid_search(const Dataset& dataset, const SearchSpace& space, int k, int jobs = 1);

}  // namespace mtl
