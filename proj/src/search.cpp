#include <algorithm>
#include <cmath>
#include <limits>

#include "mtl/parallel.hpp"
#include "mtl/rng.hpp"
#include "mtl/train.hpp"

namespace mtl {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxEnumeration = 10'000'000;
constexpr double kDefaultAuxWeights[] = {0.25, 0.5, 1.0, 2.0};

template <class T>
void require_non_empty(const std::vector<T>& v, const char* name) {
  if (v.empty()) throw std::invalid_argument(std::string("search space: '") + name + "' is empty");
}

std::vector<std::vector<double>> default_loss_weights(const Dataset& ds, std::size_t primary) {
  std::vector<std::vector<double>> out;
  const std::size_t m = ds.n_tasks();
  std::vector<std::size_t> digit(m, 0);
  while (true) {
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = j == primary ? 1.0 : kDefaultAuxWeights[digit[j]];
    out.push_back(std::move(w));
    // Odometer over the non-primary tasks, last task fastest.
    std::size_t j = m;
    while (j-- > 0) {
      if (j == primary) continue;
      if (++digit[j] < std::size(kDefaultAuxWeights)) break;
      digit[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

// Higher is better; undefined metrics rank last.
double selection_score(const TaskSummary& s) {
  const double v = s.kind == TaskKind::classification ? s.auc.mean : -s.mse.mean;
  return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

}  // namespace

void SearchSpace::validate() const {
  require_non_empty(trunk_depths, "trunk_depths");
  require_non_empty(trunk_widths, "trunk_widths");
  require_non_empty(head_depths, "head_depths");
  require_non_empty(head_widths, "head_widths");
  require_non_empty(lr0s, "lr0");
  require_non_empty(weight_decays, "weight_decay");
  require_non_empty(epochs, "epochs");
  for (int d : trunk_depths)
    if (d < 0) throw std::invalid_argument("search space: depths must be >= 0");
  for (int d : head_depths)
    if (d < 0) throw std::invalid_argument("search space: depths must be >= 0");
  if (budget < 1) throw std::invalid_argument("search space: budget must be >= 1");
  if (primary_task.empty()) throw std::invalid_argument("search space: primary_task is required");
}

SearchSpace SearchSpace::from_json(const json& j) {
  SearchSpace s;
  s.trunk_depths = j.value("trunk_depths", s.trunk_depths);
  s.trunk_widths = j.value("trunk_widths", s.trunk_widths);
  s.head_depths = j.value("head_depths", s.head_depths);
  s.head_widths = j.value("head_widths", s.head_widths);
  s.lr0s = j.value("lr0", s.lr0s);
  s.weight_decays = j.value("weight_decay", s.weight_decays);
  s.epochs = j.value("epochs", s.epochs);
  s.loss_weights = j.value("loss_weights", s.loss_weights);
  s.lr_min = j.value("lr_min", s.lr_min);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.leaky_stats = j.value("leaky_stats", s.leaky_stats);
  s.budget = j.value("budget", s.budget);
  s.primary_task = j.value("primary_task", s.primary_task);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

json SearchSpace::to_json() const {
  return {{"trunk_depths", trunk_depths}, {"trunk_widths", trunk_widths},
          {"head_depths", head_depths},   {"head_widths", head_widths},
          {"lr0", lr0s},                  {"weight_decay", weight_decays},
          {"epochs", epochs},             {"loss_weights", loss_weights},
          {"lr_min", lr_min},             {"batch_size", batch_size},
          {"leaky_stats", leaky_stats},   {"budget", budget},
          {"primary_task", primary_task}, {"seed", seed}};
}

std::vector<TrainConfig> enumerate_space(const SearchSpace& space, const Dataset& dataset) {
  space.validate();
  const std::size_t primary = dataset.task_index(space.primary_task);
  const auto lambdas =
      space.loss_weights.empty() ? default_loss_weights(dataset, primary) : space.loss_weights;

  std::size_t total = 1;
  for (std::size_t n : {space.trunk_depths.size(), space.trunk_widths.size(),
                        space.head_depths.size(), space.head_widths.size(), space.lr0s.size(),
                        space.weight_decays.size(), space.epochs.size(), lambdas.size()}) {
    total *= n;
    if (total > kMaxEnumeration) throw std::invalid_argument("search space is too large");
  }

  std::vector<TrainConfig> configs;
  configs.reserve(total);
  for (int td : space.trunk_depths)
    for (int tw : space.trunk_widths)
      for (int hd : space.head_depths)
        for (int hw : space.head_widths)
          for (double lr : space.lr0s)
            for (double wd : space.weight_decays)
              for (int ep : space.epochs)
                for (const auto& lambda : lambdas) {
                  TrainConfig c;
                  c.topology = make_topology(dataset, std::vector<int>(static_cast<std::size_t>(td), tw),
                                             {std::vector<int>(static_cast<std::size_t>(hd), hw)});
                  c.loss_weights.lambda = lambda;
                  c.lr0 = lr;
                  c.lr_min = std::min(space.lr_min, lr);
                  c.weight_decay = wd;
                  c.epochs = ep;
                  c.batch_size = space.batch_size;
                  c.seed = space.seed;
                  c.leaky_stats = space.leaky_stats;
                  c.validate();
                  configs.push_back(std::move(c));
                }
  return configs;
}

json Trial::to_json() const {
  json summary_arr = json::array();
  for (const auto& s : summary) summary_arr.push_back(s.to_json());
  return {{"index", index},
          {"config", train_config_to_json(config)},
          {"parameter_count", parameter_count},
          {"summary", summary_arr}};
}

std::size_t select_best(std::span<const Trial> trials, std::string_view primary_task) {
  if (trials.empty()) throw std::invalid_argument("select_best: no trials");
  auto score_of = [&](const Trial& t) {
    for (const auto& s : t.summary)
      if (s.task_name == primary_task) return selection_score(s);
    throw std::invalid_argument("select_best: trial lacks task '" + std::string(primary_task) + "'");
  };
  std::size_t best = 0;
  double best_score = score_of(trials[0]);
  for (std::size_t i = 1; i < trials.size(); ++i) {
    const double s = score_of(trials[i]);
    const auto& a = trials[i];
    const auto& b = trials[best];
    const bool better =
        s > best_score ||
        (s == best_score &&
         (a.parameter_count < b.parameter_count ||
          (a.parameter_count == b.parameter_count && a.index < b.index)));
    if (better) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

GridSearchResult grid_search(const Dataset& dataset, const SearchSpace& space, int k, int jobs) {
  const auto configs = enumerate_space(space, dataset);

  std::vector<std::size_t> chosen(configs.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  if (configs.size() > space.budget) {
    Rng rng(mix_seed(space.seed, 2));
    // Partial Fisher-Yates: the first `budget` slots are a uniform sample.
    for (std::size_t i = 0; i < space.budget; ++i)
      std::swap(chosen[i], chosen[i + rng.below(chosen.size() - i)]);
    chosen.resize(space.budget);
    std::sort(chosen.begin(), chosen.end());
  }

  std::vector<Trial> trials(chosen.size());
  std::vector<CvReport> reports(chosen.size());
  parallel_for(chosen.size(), jobs, [&](std::size_t t) {
    const auto& cfg = configs[chosen[t]];
    reports[t] = cross_validate(dataset, cfg, k, space.seed, 1);
    trials[t] = {chosen[t], cfg, cfg.topology.parameter_count(), reports[t].summary};
  });

  GridSearchResult result;
  result.best_trial = select_best(trials, space.primary_task);
  result.best = trials[result.best_trial].config;
  result.report = std::move(reports[result.best_trial]);
  result.trials = std::move(trials);
  return result;
}

}  // namespace mtl
