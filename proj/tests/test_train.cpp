#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mtl/rng.hpp"
#include "mtl/synth.hpp"
#include "mtl/train.hpp"

using namespace mtl;

namespace {

Dataset synthetic(std::size_t n, double rho, double noise, std::uint64_t seed, std::size_t d = 10) {
  SynthConfig c;
  c.n_samples = n;
  c.n_features = d;
  c.n_informative = std::min<std::size_t>(5, d);
  c.rho = rho;
  c.noise_std = noise;
  c.seed = seed;
  return generate(c).dataset;
}

TrainConfig small_config(const Dataset& ds, int epochs = 5) {
  TrainConfig c;
  c.topology = make_topology(ds, {8}, {{4}});
  c.loss_weights.lambda.assign(ds.n_tasks(), 1.0);
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 3;
  return c;
}

// Two separable blobs in two dimensions, labels by the sign of x0 + x1.
Dataset separable_tiny(std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(30, 2);
  OutcomeVector y{"y", TaskKind::classification, 2, {}, {}};
  for (Eigen::Index r = 0; r < 30; ++r) {
    const int label = static_cast<int>(r % 2);
    const double sign = label ? 1.0 : -1.0;
    ds.features(r, 0) = sign * (1.0 + rng.uniform()) + 0.3 * rng.normal();
    ds.features(r, 1) = sign * (1.0 + rng.uniform()) + 0.3 * rng.normal();
    y.labels.push_back(label);
  }
  ds.feature_names = {"a", "b"};
  ds.outcomes = {y};
  ds.normalization_stats.assign(2, {});
  return ds;
}

bool same_params(const ModelState& a, const ModelState& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t l = 0; l < a.layers().size(); ++l)
    if (a.layers()[l]->weights != b.layers()[l]->weights || a.layers()[l]->bias != b.layers()[l]->bias)
      return false;
  return true;
}

}  // namespace

TEST_CASE("train_model: epochs must be positive; zero learning rate keeps the init") {
  const auto ds = synthetic(40, 0.5, 0.5, 1);
  auto cfg = small_config(ds, 0);
  CHECK_THROWS_AS(train_model(ds, cfg), std::invalid_argument);
  cfg.epochs = 1;
  cfg.lr0 = 0.0;
  const auto r = train_model(ds, cfg);
  CHECK(same_params(r.model, init_params(cfg.topology, mix_seed(cfg.seed, 0))));
}

TEST_CASE("train_model: overfits a tiny separable task") {
  const auto ds = separable_tiny(5);
  TrainConfig cfg;
  cfg.topology = make_topology(ds, {16}, {{}});
  cfg.loss_weights.lambda = {1.0};
  cfg.epochs = 100;
  cfg.lr0 = 0.05;
  cfg.weight_decay = 0.0;
  cfg.batch_size = 8;
  cfg.seed = 1;
  const auto r = train_model(ds, cfg);
  CHECK(r.history.back().task_losses[0] < 0.01);
}

TEST_CASE("train_model: deterministic, history consistent") {
  const auto ds = synthetic(50, 0.5, 0.5, 2);
  auto cfg = small_config(ds, 4);
  cfg.loss_weights.lambda = {0.5, 2.0, 0.25};
  const auto a = train_model(ds, cfg);
  const auto b = train_model(ds, cfg);
  CHECK(same_params(a.model, b.model));
  REQUIRE(a.history.size() == 4);
  for (const auto& rec : a.history) {
    double expect = 0.0;
    for (std::size_t j = 0; j < 3; ++j) expect += cfg.loss_weights.lambda[j] * rec.task_losses[j];
    CHECK(std::abs(rec.total_loss - expect) <= 1e-9);
  }
  CHECK(a.history[0].epoch == 1);
}

TEST_CASE("train_model matches a hand-written reference loop") {
  // 10 rows in batches of 4: two full batches and one of 2 per epoch.
  const auto ds = synthetic(10, 0.5, 0.5, 9, 4);
  auto cfg = small_config(ds, 3);
  cfg.batch_size = 4;
  cfg.lr0 = 0.03;
  cfg.lr_min = 0.001;
  cfg.weight_decay = 0.05;

  ModelState model = init_params(cfg.topology, mix_seed(cfg.seed, 0));
  AdamState adam = AdamState::init(model);
  Rng shuffler(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const ScheduleConfig sched{cfg.lr0, cfg.lr_min, 9};
  std::int64_t step = 0;
  for (int e = 0; e < 3; ++e) {
    shuffler.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < 10; start += 4) {
      std::vector<std::size_t> rows(order.begin() + static_cast<long>(start),
                                    order.begin() + static_cast<long>(std::min<std::size_t>(start + 4, 10)));
      const Dataset b = ds.subset(rows);
      const auto fr = forward(model, b.features);
      const auto g = backward(model, fr.cache, b.outcomes, cfg.loss_weights);
      adam_update(model, g, adam, cosine_lr(step++, sched), cfg.weight_decay);
    }
  }
  CHECK(step == 9);
  CHECK(adam.step_count == 9);
  CHECK(same_params(train_model(ds, cfg).model, model));
}

TEST_CASE("train_model: errors") {
  auto ds = synthetic(20, 0.5, 0.5, 4);
  auto cfg = small_config(ds);
  auto other = ds;
  other.outcomes.pop_back();
  CHECK_THROWS_AS(train_model(other, cfg), std::invalid_argument);

  ds.outcomes[2].targets[3] = 1e200;  // squared error overflows
  try {
    train_model(ds, cfg);
    FAIL("expected a numerical error");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("train config JSON") {
  const auto ds = synthetic(20, 0.5, 0.5, 4);
  const auto j = nlohmann::json::parse(R"({"shared_layers": [16, 8], "head_layers": [[4], [], [2, 2]],
      "loss_weights": [1, 0.5, 2], "lr0": 0.02, "epochs": 7, "batch_size": 5})");
  const auto c = train_config_from_json(j, ds);
  CHECK(c.topology.shared_layers == std::vector<int>{16, 8});
  CHECK(c.topology.heads[1].hidden_layers.empty());
  CHECK(c.topology.heads[2].hidden_layers == std::vector<int>{2, 2});
  CHECK(c.loss_weights.lambda == std::vector<double>{1, 0.5, 2});
  CHECK(c.epochs == 7);
  CHECK(train_config_to_json(train_config_from_json(train_config_to_json(c), ds)) ==
        train_config_to_json(c));
  CHECK_THROWS(train_config_from_json(nlohmann::json::parse(R"({"head_layers": [[4], [4]]})"), ds));
  CHECK_THROWS(train_config_from_json(nlohmann::json::parse(R"({"epochs": 0})"), ds));
}

TEST_CASE("cross_validate: partition, aggregates, determinism") {
  const auto ds = synthetic(60, 0.5, 0.5, 5);
  const auto cfg = small_config(ds, 3);
  const auto rep = cross_validate(ds, cfg, 5, 11);
  REQUIRE(rep.folds.size() == 5);
  std::vector<int> seen(60, 0);
  for (const auto& f : rep.folds) {
    CHECK(f.seed == fold_seed(11, f.fold));
    for (auto i : f.test_indices) ++seen[i];
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  double mse = 0.0;
  for (const auto& f : rep.folds) mse += f.metrics[2].mse;
  CHECK(rep.summary[2].mse.mean == doctest::Approx(mse / 5).epsilon(1e-14));
  CHECK(rep.pooled.size() == 3);

  const auto again = cross_validate(ds, cfg, 5, 11);
  CHECK(again.to_json().dump() == rep.to_json().dump());
  CHECK(cross_validate(ds, cfg, 5, 11, 3).to_json().dump() == rep.to_json().dump());
  CHECK(fold_seed(7, 2) == 7 * 1000003ULL + 2);
}

TEST_CASE("cross_validate: near-oracle setting") {
  const auto ds = synthetic(500, 1.0, 0.0, 6, 30);
  TrainConfig cfg;
  cfg.topology = make_topology(ds, {64}, {{32}});
  cfg.loss_weights.lambda = {1, 1, 1};
  cfg.epochs = 50;
  cfg.seed = 1;
  const auto rep = cross_validate(ds, cfg, 5, 1);
  CHECK(rep.summary[0].auc.mean > 0.95);
  CHECK(rep.summary[1].auc.mean > 0.95);
}

TEST_CASE("cross_validate: held-out rows never reach the fold") {
  const auto ds = synthetic(40, 0.5, 0.5, 8);
  const auto cfg = small_config(ds, 2);
  const auto plan = kfold_split(ds.n_samples(), 4, 21);
  for (int fold = 0; fold < 4; ++fold) {
    const auto base = train_fold(ds, plan, fold, cfg, 21);
    for (auto row : plan.test_indices(fold)) {
      Dataset moved = ds;
      moved.features.row(static_cast<Eigen::Index>(row)).array() += 1e3;
      moved.outcomes[0].labels[row] = 1 - moved.outcomes[0].labels[row];
      moved.outcomes[2].targets[row] = -1e3;
      const auto fm = train_fold(moved, plan, fold, cfg, 21);
      for (std::size_t c = 0; c < fm.stats.size(); ++c) {
        CHECK(fm.stats[c].mean == base.stats[c].mean);
        CHECK(fm.stats[c].std == base.stats[c].std);
      }
      CHECK(same_params(fm.result.model, base.result.model));
    }
  }
  auto leaky = cfg;
  leaky.leaky_stats = true;
  Dataset moved = ds;
  const auto row = plan.test_indices(0)[0];
  moved.features(static_cast<Eigen::Index>(row), 0) += 1e3;
  CHECK(train_fold(moved, plan, 0, leaky, 21).stats[0].mean !=
        train_fold(ds, plan, 0, leaky, 21).stats[0].mean);
}

TEST_CASE("enumerate_space: order, default loss weights") {
  const auto ds = synthetic(30, 0.5, 0.5, 1);
  SearchSpace s;
  s.trunk_depths = {1, 2};
  s.trunk_widths = {8};
  s.head_depths = {0, 1};
  s.head_widths = {4};
  s.primary_task = "cls1";
  const auto configs = enumerate_space(s, ds);
  CHECK(configs.size() == 2 * 2 * 16);
  CHECK(configs.front().topology.shared_layers.size() == 1);
  CHECK(configs.back().topology.shared_layers.size() == 2);
  std::set<std::vector<double>> lambdas;
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(configs[i].loss_weights.lambda[0] == 1.0);
    lambdas.insert(configs[i].loss_weights.lambda);
  }
  CHECK(lambdas.size() == 16);

  s.primary_task = "nope";
  CHECK_THROWS_AS(enumerate_space(s, ds), std::invalid_argument);
  s.primary_task = "cls1";
  s.lr0s.clear();
  CHECK_THROWS_AS(enumerate_space(s, ds), std::invalid_argument);
}

TEST_CASE("grid_search: single config equals plain cross-validation") {
  const auto ds = synthetic(40, 0.5, 0.5, 3);
  SearchSpace s;
  s.trunk_widths = {8};
  s.head_widths = {4};
  s.epochs = {2};
  s.loss_weights = {{1, 1, 1}};
  s.primary_task = "reg";
  s.seed = 4;
  const auto r = grid_search(ds, s, 3);
  REQUIRE(r.trials.size() == 1);
  const auto plain = cross_validate(ds, enumerate_space(s, ds)[0], 3, 4);
  CHECK(r.report.to_json().dump() == plain.to_json().dump());
}

TEST_CASE("grid_search: a zero learning rate loses") {
  const auto ds = synthetic(200, 1.0, 0.0, 7);
  SearchSpace s;
  s.trunk_widths = {16};
  s.head_widths = {8};
  s.lr0s = {0.0, 0.01};
  s.epochs = {20};
  s.loss_weights = {{1, 1, 1}};
  s.primary_task = "cls1";
  s.seed = 2;
  const auto r = grid_search(ds, s, 3, 2);
  CHECK(r.best.lr0 == 0.01);
}

TEST_CASE("grid_search: budget samples distinct configurations") {
  const auto ds = synthetic(30, 0.5, 0.5, 3, 4);
  SearchSpace s;
  s.trunk_depths = {0, 1};
  s.trunk_widths = {2, 3, 4, 5, 6};
  s.head_depths = {0};
  s.head_widths = {2};
  s.lr0s = {0.01, 0.02};
  s.weight_decays = {0.0, 0.1, 0.01, 0.001, 0.2};
  s.epochs = {1};
  s.loss_weights = {{1, 1, 1}};
  s.budget = 5;
  s.primary_task = "reg";
  REQUIRE(enumerate_space(s, ds).size() == 100);
  const auto r = grid_search(ds, s, 2);
  REQUIRE(r.trials.size() == 5);
  std::set<std::size_t> idx;
  for (const auto& t : r.trials) idx.insert(t.index);
  CHECK(idx.size() == 5);
  CHECK(grid_search(ds, s, 2).trials[3].index == r.trials[3].index);
}

TEST_CASE("select_best depends only on the primary task") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Trial> trials(8);
    for (std::size_t i = 0; i < trials.size(); ++i) {
      trials[i].index = i;
      trials[i].parameter_count = 10 + rng.below(3);
      for (const char* name : {"cls1", "cls2", "reg"}) {
        TaskSummary s;
        s.task_name = name;
        s.kind = name[0] == 'r' ? TaskKind::regression : TaskKind::classification;
        s.auc.mean = 0.5 + 0.1 * static_cast<double>(rng.below(4));  // ties on purpose
        s.mse.mean = rng.uniform();
        trials[i].summary.push_back(s);
      }
    }
    const auto best = select_best(trials, "cls2");
    auto shuffled = trials;
    std::vector<std::size_t> perm = rng.permutation(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
      shuffled[i].summary[0] = trials[perm[i]].summary[0];
      shuffled[i].summary[2] = trials[perm[i]].summary[2];
    }
    CHECK(select_best(shuffled, "cls2") == best);

    // Brute-force expectation.
    std::size_t expect = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
      const auto& a = trials[i];
      const auto& b = trials[expect];
      const double sa = a.summary[1].auc.mean, sb = b.summary[1].auc.mean;
      if (sa > sb || (sa == sb && a.parameter_count < b.parameter_count)) expect = i;
    }
    CHECK(best == expect);
    CHECK(select_best(trials, "reg") == static_cast<std::size_t>(
        std::min_element(trials.begin(), trials.end(), [](const Trial& a, const Trial& b) {
          return a.summary[2].mse.mean < b.summary[2].mse.mean;
        }) - trials.begin()));
  }
}

TEST_CASE("render_table layout") {
  TaskSummary c{"cls1", TaskKind::classification, {0.5, 0.1, 5}, {0.8123, 0.0456, 5}, {}};
  TaskSummary r{"reg", TaskKind::regression, {}, {}, {0.25678, 0.01, 5}};
  const TableRow row{"MTL", {c, r}};
  const auto text = render_table(std::span(&row, 1));
  CHECK(text.find("81.2+-4.6") != std::string::npos);
  CHECK(text.find("50.0+-10.0") != std::string::npos);
  CHECK(text.find("0.257") != std::string::npos);
  CHECK(text.find("cls1") != std::string::npos);
}
