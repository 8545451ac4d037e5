#include "mtl/train.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtl/parallel.hpp"
#include "mtl/rng.hpp"

namespace mtl {

using nlohmann::json;

void TrainConfig::validate() const {
  topology.validate();
  loss_weights.validate(topology.heads.size());
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  ScheduleConfig{lr0, lr_min, 1}.validate();
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train config: weight_decay must be >= 0");
}

NetworkTopology make_topology(const Dataset& dataset, const std::vector<int>& shared_layers,
                              const std::vector<std::vector<int>>& head_hidden) {
  if (head_hidden.size() != 1 && head_hidden.size() != dataset.n_tasks())
    throw std::invalid_argument("head_layers: give one layer list for all heads or one per task");
  NetworkTopology t;
  t.input_dim = static_cast<int>(dataset.n_features());
  t.shared_layers = shared_layers;
  for (std::size_t j = 0; j < dataset.n_tasks(); ++j) {
    const auto& o = dataset.outcomes[j];
    HeadSpec head;
    head.task_name = o.task_name;
    head.hidden_layers = head_hidden.size() == 1 ? head_hidden[0] : head_hidden[j];
    head.output = o.kind == TaskKind::classification ? OutputSpec{TaskKind::classification, o.num_classes}
                                                     : OutputSpec{TaskKind::regression, 1};
    t.heads.push_back(std::move(head));
  }
  t.validate();
  return t;
}

TrainConfig train_config_from_json(const json& j, const Dataset& dataset) {
  TrainConfig c;
  auto shared = j.value("shared_layers", std::vector<int>{64});
  std::vector<std::vector<int>> heads{{32}};
  if (j.contains("topology")) {
    // The form written by train_config_to_json (e.g. a grid-search winner).
    const auto t = topology_from_json(j.at("topology"));
    shared = t.shared_layers;
    heads.clear();
    for (std::size_t h = 0; h < t.heads.size(); ++h) {
      if (h >= dataset.n_tasks() || t.heads[h].task_name != dataset.outcomes[h].task_name)
        throw std::invalid_argument("config topology heads do not match the dataset's tasks");
      heads.push_back(t.heads[h].hidden_layers);
    }
  } else if (j.contains("head_layers")) {
    const auto& h = j.at("head_layers");
    if (!h.is_array()) throw std::invalid_argument("head_layers must be an array");
    if (h.empty() || h.front().is_number())
      heads = {h.get<std::vector<int>>()};
    else
      heads = h.get<std::vector<std::vector<int>>>();
  }
  c.topology = make_topology(dataset, shared, heads);
  c.loss_weights.lambda =
      j.value("loss_weights", std::vector<double>(dataset.n_tasks(), 1.0));
  c.lr0 = j.value("lr0", c.lr0);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.leaky_stats = j.value("leaky_stats", c.leaky_stats);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.epsilon = a.value("epsilon", c.adam.epsilon);
  }
  c.validate();
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"topology", topology_to_json(c.topology)},
          {"loss_weights", c.loss_weights.lambda},
          {"lr0", c.lr0},
          {"lr_min", c.lr_min},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"leaky_stats", c.leaky_stats},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}}};
}

namespace {

void check_matches(const Dataset& ds, const NetworkTopology& t) {
  if (static_cast<std::size_t>(t.input_dim) != ds.n_features())
    throw std::invalid_argument("model expects " + std::to_string(t.input_dim) +
                                " features, dataset has " + std::to_string(ds.n_features()));
  if (t.heads.size() != ds.n_tasks())
    throw std::invalid_argument("model has " + std::to_string(t.heads.size()) +
                                " heads, dataset has " + std::to_string(ds.n_tasks()) + " tasks");
  for (std::size_t j = 0; j < ds.n_tasks(); ++j) {
    const auto& o = ds.outcomes[j];
    const auto& out = t.heads[j].output;
    if (o.kind != out.kind ||
        (o.kind == TaskKind::classification && o.num_classes != out.num_classes))
      throw std::invalid_argument("head " + std::to_string(j) + " does not match task '" +
                                  o.task_name + "'");
  }
}

std::vector<OutcomeVector> batch_targets(const Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<OutcomeVector> out;
  out.reserve(ds.n_tasks());
  for (const auto& o : ds.outcomes) out.push_back(o.subset(rows));
  return out;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

TrainResult train_model(const Dataset& dataset, const TrainConfig& config) {
  dataset.validate();
  config.validate();
  check_matches(dataset, config.topology);

  const std::size_t n = dataset.n_samples();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t batches_per_epoch = (n + batch - 1) / batch;
  const ScheduleConfig schedule{config.lr0, config.lr_min,
                                static_cast<std::int64_t>(config.epochs * batches_per_epoch)};

  TrainResult result;
  result.model = init_params(config.topology, mix_seed(config.seed, 0));
  AdamState adam = AdamState::init(result.model, config.adam);
  Rng shuffler(mix_seed(config.seed, 1));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += batch) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(batch, n - start));
      const Matrix x = gather_rows(dataset.features, rows);
      const auto targets = batch_targets(dataset, rows);
      const auto fwd = forward(result.model, x);
      const double loss = loss_mtl(task_losses(fwd.predictions, targets), config.loss_weights);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite training loss at step " + std::to_string(step) +
                             " (epoch " + std::to_string(epoch + 1) + ")");
      const auto grads = backward(result.model, fwd.cache, targets, config.loss_weights);
      adam_update(result.model, grads, adam, cosine_lr(step, schedule), config.weight_decay);
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.task_losses = task_losses(predict(result.model, dataset.features), dataset.outcomes);
    rec.total_loss = loss_mtl(rec.task_losses, config.loss_weights);
    if (!std::isfinite(rec.total_loss))
      throw NumericalError("non-finite training loss after epoch " + std::to_string(rec.epoch) +
                           " (step " + std::to_string(step) + ")");
    result.history.push_back(std::move(rec));
  }
  return result;
}

json history_to_json(std::span<const EpochRecord> history, std::span<const OutcomeVector> tasks) {
  json arr = json::array();
  for (const auto& rec : history) {
    json per_task = json::object();
    for (std::size_t j = 0; j < rec.task_losses.size() && j < tasks.size(); ++j)
      per_task[tasks[j].task_name] = rec.task_losses[j];
    arr.push_back({{"epoch", rec.epoch}, {"total_loss", rec.total_loss}, {"task_losses", per_task}});
  }
  return arr;
}

// ---------------------------------------------------------------------------

FoldModel train_fold(const Dataset& dataset, const FoldPlan& plan, int fold,
                     const TrainConfig& config, std::uint64_t cv_seed) {
  if (plan.assignments.size() != dataset.n_samples())
    throw std::invalid_argument("fold plan does not match the dataset size");
  const auto train_rows = plan.train_indices(fold);
  FoldModel fm;
  fm.stats = config.leaky_stats ? fit_normalization(dataset.features)
                                : fit_normalization(dataset.features, train_rows);
  Dataset train = dataset.subset(train_rows);
  train.features = apply_normalization(train.features, fm.stats);
  train.normalization_stats = fm.stats;
  TrainConfig cfg = config;
  cfg.seed = fold_seed(cv_seed, fold);
  fm.result = train_model(train, cfg);
  return fm;
}

namespace {

SummaryStat summarize_values(const std::vector<double>& values) {
  SummaryStat s;
  double sum = 0.0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++s.count;
    }
  if (s.count == 0) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values)
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

json stat_json(const SummaryStat& s) {
  return {{"mean", number_or_null(s.mean)}, {"std", number_or_null(s.std)}, {"folds", s.count}};
}

}  // namespace

std::vector<TaskSummary> summarize(std::span<const FoldResult> folds) {
  std::vector<TaskSummary> out;
  if (folds.empty()) return out;
  for (std::size_t j = 0; j < folds.front().metrics.size(); ++j) {
    std::vector<double> f1, auc, mse;
    for (const auto& f : folds) {
      f1.push_back(f.metrics[j].f1);
      auc.push_back(f.metrics[j].auc);
      mse.push_back(f.metrics[j].mse);
    }
    TaskSummary s;
    s.task_name = folds.front().metrics[j].task_name;
    s.kind = folds.front().metrics[j].kind;
    s.f1 = summarize_values(f1);
    s.auc = summarize_values(auc);
    s.mse = summarize_values(mse);
    out.push_back(std::move(s));
  }
  return out;
}

json TaskSummary::to_json() const {
  json j = {{"task", task_name},
            {"kind", kind == TaskKind::classification ? "classification" : "regression"}};
  if (kind == TaskKind::classification) {
    j["f1"] = stat_json(f1);
    j["auc"] = stat_json(auc);
  } else {
    j["mse"] = stat_json(mse);
  }
  return j;
}

json CvReport::to_json() const {
  json fold_arr = json::array();
  for (const auto& f : folds) {
    json metrics = json::array();
    for (const auto& m : f.metrics) metrics.push_back(m.to_json());
    fold_arr.push_back({{"fold", f.fold},
                        {"seed", f.seed},
                        {"test_indices", f.test_indices},
                        {"normalization_stats", stats_to_json(f.stats)},
                        {"metrics", metrics}});
  }
  json summary_arr = json::array();
  for (const auto& s : summary) summary_arr.push_back(s.to_json());
  json pooled_arr = json::array();
  for (const auto& p : pooled) pooled_arr.push_back(p.to_json());
  return {{"k", k},
          {"seed", seed},
          {"config", train_config_to_json(config)},
          {"folds", fold_arr},
          {"summary", summary_arr},
          {"pooled", pooled_arr}};
}

CvReport cross_validate(const Dataset& dataset, const TrainConfig& config, int k,
                        std::uint64_t seed, int jobs) {
  dataset.validate();
  config.validate();
  check_matches(dataset, config.topology);
  const auto plan = kfold_split(dataset.n_samples(), k, seed);

  CvReport report;
  report.k = k;
  report.seed = seed;
  report.config = config;
  report.folds.resize(static_cast<std::size_t>(k));
  std::vector<std::vector<Matrix>> fold_predictions(static_cast<std::size_t>(k));

  parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto fm = train_fold(dataset, plan, fold, config, seed);
    const auto test = plan.test_indices(fold);
    const Matrix x = apply_normalization(gather_rows(dataset.features, test), fm.stats);
    auto preds = predict(fm.result.model, x);

    FoldResult& fr = report.folds[f];
    fr.fold = fold;
    fr.seed = fold_seed(seed, fold);
    fr.test_indices = test;
    fr.stats = fm.stats;
    for (std::size_t j = 0; j < dataset.n_tasks(); ++j)
      fr.metrics.push_back(evaluate_task(preds[j], dataset.outcomes[j].subset(test)));
    fold_predictions[f] = std::move(preds);
  });

  report.summary = summarize(report.folds);
  for (std::size_t j = 0; j < dataset.n_tasks(); ++j) {
    Matrix pooled(static_cast<Eigen::Index>(dataset.n_samples()),
                  config.topology.heads[j].output.width());
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
      const auto& idx = report.folds[f].test_indices;
      for (std::size_t i = 0; i < idx.size(); ++i)
        pooled.row(static_cast<Eigen::Index>(idx[i])) =
            fold_predictions[f][j].row(static_cast<Eigen::Index>(i));
    }
    report.pooled.push_back(evaluate_task(pooled, dataset.outcomes[j]));
  }
  return report;
}

std::string render_table(std::span<const TableRow> rows) {
  if (rows.empty()) return {};
  const auto& tasks = rows.front().summary;
  std::size_t label_w = 8;
  for (const auto& r : rows) label_w = std::max(label_w, r.label.size());
  label_w += 2;
  constexpr int kCol = 15;

  auto cell = [](const SummaryStat& s, double scale, int digits) {
    if (!std::isfinite(s.mean)) return std::string("-");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f+-%.*f", digits, s.mean * scale, digits, s.std * scale);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto rstrip = [](std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
  };

  std::ostringstream out;
  std::string head1 = pad("Method", label_w), head2 = pad("", label_w);
  for (const auto& t : tasks) {
    if (t.kind == TaskKind::classification) {
      head1 += pad(t.task_name, 2 * kCol);
      head2 += pad("F1 (%)", kCol) + pad("AUC (%)", kCol);
    } else {
      head1 += pad(t.task_name, kCol);
      head2 += pad("MSE", kCol);
    }
  }
  out << rstrip(head1) << '\n' << rstrip(head2) << '\n' << std::string(head2.size(), '-') << '\n';
  for (const auto& r : rows) {
    std::string line = pad(r.label, label_w);
    for (const auto& t : r.summary) {
      if (t.kind == TaskKind::classification)
        line += pad(cell(t.f1, 100.0, 1), kCol) + pad(cell(t.auc, 100.0, 1), kCol);
      else
        line += pad(cell(t.mse, 1.0, 3), kCol);
    }
    out << rstrip(line) << '\n';
  }
  return out.str();
}

}  // namespace mtl
