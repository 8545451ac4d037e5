#include "mtl/synth.hpp"

#include <algorithm>
#include <cmath>

#include "mtl/rng.hpp"

namespace mtl {

using nlohmann::json;

void SynthConfig::validate() const {
  if (n_samples < 2) throw std::invalid_argument("synth: n_samples must be >= 2");
  if (n_features < 1) throw std::invalid_argument("synth: n_features must be >= 1");
  if (n_informative < 1 || n_informative > n_features)
    throw std::invalid_argument("synth: need 1 <= n_informative <= n_features");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("synth: rho must lie in [0, 1]");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw std::invalid_argument("synth: noise_std must be >= 0");
  if (!(missing_frac >= 0.0 && missing_frac < 1.0))
    throw std::invalid_argument("synth: missing_frac must lie in [0, 1)");
  for (double b : class_balance)
    if (!(b > 0.0 && b < 1.0))
      throw std::invalid_argument("synth: class_balance entries must lie in (0, 1)");
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.n_samples = j.value("n_samples", c.n_samples);
  c.n_features = j.value("n_features", c.n_features);
  c.n_informative = j.value("n_informative", c.n_informative);
  c.rho = j.value("rho", c.rho);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.missing_frac = j.value("missing_frac", c.missing_frac);
  c.class_balance = j.value("class_balance", c.class_balance);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

json SynthConfig::to_json() const {
  return {{"n_samples", n_samples},     {"n_features", n_features},
          {"n_informative", n_informative}, {"rho", rho},
          {"noise_std", noise_std},     {"missing_frac", missing_frac},
          {"class_balance", class_balance}, {"seed", seed}};
}

std::vector<std::size_t> GroundTruth::informative_features() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < shared_weights.size(); ++i) {
    bool nonzero = shared_weights[i] != 0.0;
    for (const auto& w : task_specific_weights) nonzero |= w[i] != 0.0;
    if (nonzero) idx.push_back(i);
  }
  return idx;
}

std::vector<double> GroundTruth::clean_scores(const Matrix& features, std::size_t task) const {
  if (static_cast<std::size_t>(features.cols()) != shared_weights.size())
    throw std::invalid_argument("ground truth: feature count does not match the weights");
  if (task >= task_specific_weights.size())
    throw std::out_of_range("ground truth: task index out of range");
  const auto& ws = task_specific_weights[task];
  std::vector<double> s(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    double shared = 0.0, specific = 0.0;
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      shared += shared_weights[static_cast<std::size_t>(c)] * features(r, c);
      specific += ws[static_cast<std::size_t>(c)] * features(r, c);
    }
    s[static_cast<std::size_t>(r)] = rho * shared + (1.0 - rho) * specific;
  }
  return s;
}

json GroundTruth::to_json() const {
  return {{"shared_weights", shared_weights},
          {"task_specific_weights", task_specific_weights},
          {"thresholds", thresholds},
          {"noise_std", noise_std},
          {"rho", rho},
          {"informative_features", informative_features()}};
}

GroundTruth GroundTruth::from_json(const json& j) {
  GroundTruth t;
  t.shared_weights = j.at("shared_weights").get<std::vector<double>>();
  t.task_specific_weights = j.at("task_specific_weights").get<std::vector<std::vector<double>>>();
  t.thresholds = j.at("thresholds").get<std::vector<double>>();
  t.noise_std = j.at("noise_std").get<double>();
  t.rho = j.at("rho").get<double>();
  return t;
}

namespace {

// Random sign times a magnitude in [0.5, 1.5), so no informative weight is tiny.
double draw_weight(Rng& rng) {
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return sign * rng.uniform(0.5, 1.5);
}

void normalize_l2(std::vector<double>& w) {
  double ss = 0.0;
  for (double v : w) ss += v * v;
  if (ss == 0.0) return;
  const double norm = std::sqrt(ss);
  for (double& v : w) v /= norm;
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n_samples;
  const std::size_t d = config.n_features;
  const std::size_t m = config.n_tasks();
  const std::size_t n_cls = config.class_balance.size();
  Rng rng(config.seed);

  GroundTruth truth;
  truth.rho = config.rho;
  truth.noise_std = config.noise_std;
  truth.shared_weights.assign(d, 0.0);
  for (std::size_t i = 0; i < config.n_informative; ++i) truth.shared_weights[i] = draw_weight(rng);
  normalize_l2(truth.shared_weights);
  truth.task_specific_weights.assign(m, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    // Task weights agree in sign with the shared weight on their coordinate,
    // so raising rho can only make the tasks more alike.
    for (std::size_t i = j; i < config.n_informative; i += m)
      truth.task_specific_weights[j][i] =
          std::copysign(draw_weight(rng), truth.shared_weights[i]);
    normalize_l2(truth.task_specific_weights[j]);
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(r, c) = rng.normal();
  for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  ds.normalization_stats.assign(d, FeatureStats{});

  std::vector<std::vector<double>> scores(m);
  for (std::size_t j = 0; j < m; ++j) scores[j] = truth.clean_scores(ds.features, j);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < m; ++j) scores[j][r] += config.noise_std * rng.normal();

  for (std::size_t j = 0; j < n_cls; ++j) {
    std::vector<double> sorted = scores[j];
    std::sort(sorted.begin(), sorted.end());
    const auto n_pos = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.class_balance[j] * static_cast<double>(n))),
        1, n - 1);
    const double thr = 0.5 * (sorted[n - n_pos - 1] + sorted[n - n_pos]);
    truth.thresholds.push_back(thr);
    OutcomeVector o{"cls" + std::to_string(j + 1), TaskKind::classification, 2, {}, {}};
    for (double s : scores[j]) o.labels.push_back(s > thr ? 1 : 0);
    ds.outcomes.push_back(std::move(o));
  }
  ds.outcomes.push_back({"reg", TaskKind::regression, 0, {}, scores[m - 1]});
  ds.validate();

  RawTable table{dataset_schema(ds), {}};
  table.rows.assign(n, std::vector<Cell>(d + m));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c)
      table.rows[r][c] = ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t j = 0; j < m; ++j) {
      const auto& o = ds.outcomes[j];
      table.rows[r][d + j] =
          o.kind == TaskKind::classification ? static_cast<double>(o.labels[r]) : o.targets[r];
    }
  }
  if (config.missing_frac > 0.0) {
    const auto cells = n * d;
    const auto n_masked = static_cast<std::size_t>(
        std::llround(config.missing_frac * static_cast<double>(cells)));
    const auto perm = rng.permutation(cells);
    for (std::size_t i = 0; i < n_masked; ++i) table.rows[perm[i] / d][perm[i] % d] = std::monostate{};
  }

  return {std::move(ds), std::move(truth), std::move(table)};
}

MetricsReport oracle_bayes_metrics(const GroundTruth& truth, const Dataset& dataset) {
  if (dataset.n_features() != truth.shared_weights.size())
    throw std::invalid_argument("oracle: dataset has " + std::to_string(dataset.n_features()) +
                                " features, ground truth has " +
                                std::to_string(truth.shared_weights.size()));
  if (dataset.n_tasks() != truth.task_specific_weights.size())
    throw std::invalid_argument("oracle: task count does not match the ground truth");

  MetricsReport report;
  std::size_t cls_index = 0;
  for (std::size_t j = 0; j < dataset.n_tasks(); ++j) {
    const auto& o = dataset.outcomes[j];
    const auto s = truth.clean_scores(dataset.features, j);
    TaskMetrics t;
    t.task_name = o.task_name;
    t.kind = o.kind;
    if (o.kind == TaskKind::classification) {
      if (cls_index >= truth.thresholds.size())
        throw std::invalid_argument("oracle: missing threshold for '" + o.task_name + "'");
      const double thr = truth.thresholds[cls_index++];
      std::vector<int> pred(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) pred[i] = s[i] > thr ? 1 : 0;
      t.f1 = f1_score(confusion_counts(pred, o.labels, 1));
      t.auc = roc_auc(s, o.labels);
    } else {
      t.mse = mse_metric(s, o.targets);
    }
    report.tasks.push_back(std::move(t));
  }
  return report;
}

}  // namespace mtl
