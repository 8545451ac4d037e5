#include <doctest.h>

#include <cmath>

#include "mtl/attrib.hpp"
#include "mtl/rng.hpp"
#include "mtl/synth.hpp"
#include "mtl/train.hpp"

using namespace mtl;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed, TaskKind kind) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, d);
  for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] = rng.normal();
  for (Eigen::Index c = 0; c < d; ++c) ds.feature_names.push_back("x_" + std::to_string(c + 1));
  OutcomeVector o{"y", kind, 2, {}, {}};
  for (Eigen::Index r = 0; r < n; ++r) {
    if (kind == TaskKind::classification) o.labels.push_back(static_cast<int>(r % 2));
    else o.targets.push_back(rng.normal());
  }
  ds.outcomes = {o};
  ds.normalization_stats.assign(static_cast<std::size_t>(d), {});
  return ds;
}

ModelState linear_model(int d, TaskKind kind) {
  NetworkTopology t;
  t.input_dim = d;
  t.heads.push_back({"y", {}, {kind, kind == TaskKind::classification ? 2 : 1}});
  return init_params(t, 1);
}

}  // namespace

TEST_CASE("linear model: scores are the absolute weights") {
  const auto ds = random_dataset(20, 2, 1, TaskKind::regression);
  auto m = linear_model(2, TaskKind::regression);
  m.heads[0][0].weights << 3.0, 0.0;
  const auto r = grad_cam_features(m, ds, 0);
  CHECK(r.scores == std::vector<double>{3.0, 0.0});
  CHECK(r.ranking.front() == "x_1");
  CHECK_FALSE(r.target_class.has_value());
  CHECK(r.n_samples_used == 20);

  const auto one = top_k(r, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].first == "x_1");
  CHECK(one[0].second == 3.0);
  CHECK(top_k(r, 2).size() == 2);
  CHECK_THROWS_AS(top_k(r, 0), std::out_of_range);
  CHECK_THROWS_AS(top_k(r, 3), std::out_of_range);
}

TEST_CASE("linear models: random weights, both head kinds") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(10));
    const auto kind = trial % 2 ? TaskKind::classification : TaskKind::regression;
    const auto ds = random_dataset(15, d, 100 + static_cast<std::uint64_t>(trial), kind);
    auto m = linear_model(d, kind);
    for (Eigen::Index i = 0; i < m.heads[0][0].weights.size(); ++i)
      m.heads[0][0].weights.data()[i] = rng.normal();
    const auto r = grad_cam_features(m, ds, 0);
    for (int c = 0; c < d; ++c) {
      const double w = m.heads[0][0].weights(c, kind == TaskKind::classification ? 1 : 0);
      CHECK(std::abs(r.scores[static_cast<std::size_t>(c)] - std::abs(w)) <= 1e-9);
    }
    if (kind == TaskKind::classification) {
      const auto r0 = grad_cam_features(m, ds, 0, 0);
      for (int c = 0; c < d; ++c)
        CHECK(std::abs(r0.scores[static_cast<std::size_t>(c)] - std::abs(m.heads[0][0].weights(c, 0))) <= 1e-9);
    }
  }
}

TEST_CASE("a disconnected feature scores exactly zero in both modes") {
  const auto ds = random_dataset(25, 4, 2, TaskKind::classification);
  NetworkTopology t;
  t.input_dim = 4;
  t.shared_layers = {6};
  t.heads.push_back({"y", {3}, {TaskKind::classification, 2}});
  auto m = init_params(t, 3);
  m.trunk[0].weights.row(2).setZero();
  for (auto mode : {AttributionMode::input_gradient, AttributionMode::hidden_activation}) {
    const auto r = grad_cam_features(m, ds, 0, 1, mode);
    CHECK(r.scores[2] == 0.0);
    CHECK(r.ranking.back() == "x_3");
    for (double s : r.scores) CHECK(s >= 0.0);
  }
}

TEST_CASE("one-hot siblings are scored independently") {
  Dataset ds = random_dataset(12, 3, 4, TaskKind::regression);
  ds.feature_names = {"race=a", "race=b", "race=c"};
  for (Eigen::Index r = 0; r < 12; ++r) {
    ds.features.row(r).setZero();
    ds.features(r, r % 3) = 1.0;
  }
  auto m = linear_model(3, TaskKind::regression);
  m.heads[0][0].weights << 2.0, 0.0, -1.0;
  const auto r = grad_cam_features(m, ds, 0);
  CHECK(r.scores == std::vector<double>{2.0, 0.0, 1.0});
  CHECK(r.ranking == std::vector<std::string>{"race=a", "race=c", "race=b"});
}

TEST_CASE("scores do not depend on row order") {
  const auto ds = random_dataset(40, 5, 6, TaskKind::classification);
  NetworkTopology t;
  t.input_dim = 5;
  t.shared_layers = {7, 4};
  t.heads.push_back({"y", {3}, {TaskKind::classification, 2}});
  const auto m = init_params(t, 8);
  Rng rng(9);
  const auto perm = rng.permutation(40);
  const Dataset shuffled = ds.subset(perm);
  for (auto mode : {AttributionMode::input_gradient, AttributionMode::hidden_activation}) {
    CHECK(grad_cam_features(m, ds, 0, 1, mode).scores ==
          grad_cam_features(m, shuffled, 0, 1, mode).scores);
  }
}

TEST_CASE("ties rank by feature order") {
  const auto ds = random_dataset(5, 3, 1, TaskKind::regression);
  auto m = linear_model(3, TaskKind::regression);
  m.heads[0][0].weights << 1.0, -2.0, 2.0;
  CHECK(grad_cam_features(m, ds, 0).ranking == std::vector<std::string>{"x_2", "x_3", "x_1"});
}

TEST_CASE("scaling the loss weights keeps the ranking") {
  SynthConfig sc;
  sc.n_samples = 200;
  sc.n_features = 8;
  sc.n_informative = 3;
  sc.noise_std = 0.2;
  sc.seed = 12;
  Dataset ds = generate(sc).dataset;
  TrainConfig cfg;
  cfg.topology = make_topology(ds, {16}, {{8}});
  cfg.loss_weights.lambda = {1.0, 0.5, 0.25};
  cfg.epochs = 20;
  cfg.seed = 2;
  const auto a = train_model(ds, cfg);
  for (double& l : cfg.loss_weights.lambda) l *= 4.0;
  const auto b = train_model(ds, cfg);
  for (std::size_t head = 0; head < 3; ++head)
    CHECK(grad_cam_features(a.model, ds, head).ranking == grad_cam_features(b.model, ds, head).ranking);
}

TEST_CASE("argument errors") {
  const auto ds = random_dataset(5, 3, 1, TaskKind::regression);
  const auto reg = linear_model(3, TaskKind::regression);
  CHECK_THROWS_AS(grad_cam_features(reg, ds, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(grad_cam_features(reg, ds, 1), std::out_of_range);
  const auto cls = linear_model(3, TaskKind::classification);
  CHECK_THROWS_AS(grad_cam_features(cls, ds, 0, 2), std::out_of_range);
  CHECK_THROWS_AS(grad_cam_features(cls, ds, 0, -1), std::out_of_range);
  CHECK_THROWS_AS(grad_cam_features(linear_model(4, TaskKind::regression), ds, 0), std::invalid_argument);
  CHECK_THROWS_AS(grad_cam_features(reg, ds, 0, std::nullopt, AttributionMode::hidden_activation),
                  std::invalid_argument);
}

TEST_CASE("report JSON and listing") {
  const auto ds = random_dataset(5, 3, 1, TaskKind::classification);
  auto m = linear_model(3, TaskKind::classification);
  m.heads[0][0].weights.col(1) << 0.5, 3.0, -1.0;
  const auto r = grad_cam_features(m, ds, 0);
  const auto j = r.to_json();
  CHECK(j["target"] == 1);
  CHECK(j["ranking"][0] == "x_2");
  CHECK(j["scores"].size() == 3);
  const auto text = r.render_top(2);
  CHECK(text.find("1. x_2") != std::string::npos);
  CHECK(text.find("2. x_3") != std::string::npos);
  CHECK(text.find("x_1") == std::string::npos);
}
