#include <doctest.h>

#include <cmath>

#include "mtl/optim.hpp"
#include "mtl/rng.hpp"

using namespace mtl;

namespace {

// One scalar weight and one scalar bias.
ModelState scalar_model(double w, double b = 0.0) {
  NetworkTopology t;
  t.input_dim = 1;
  t.heads.push_back({"y", {}, {TaskKind::regression, 0}});
  auto s = init_params(t, 0);
  s.heads[0][0].weights(0, 0) = w;
  s.heads[0][0].bias(0) = b;
  return s;
}

ModelState random_model(std::uint64_t seed) {
  NetworkTopology t;
  t.input_dim = 4;
  t.shared_layers = {5};
  t.heads.push_back({"a", {3}, {TaskKind::classification, 2}});
  t.heads.push_back({"b", {}, {TaskKind::regression, 0}});
  return init_params(t, seed);
}

Gradients random_grads(const ModelState& like, std::uint64_t seed) {
  Rng rng(seed);
  Gradients g = zeros(like.topology);
  for (auto* l : g.layers()) {
    for (Eigen::Index i = 0; i < l->weights.size(); ++i) l->weights.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < l->bias.size(); ++i) l->bias.data()[i] = rng.normal();
  }
  return g;
}

}  // namespace

TEST_CASE("cosine_lr examples") {
  const ScheduleConfig cfg{0.02, 0.001, 100};
  CHECK(cosine_lr(0, cfg) == 0.02);
  CHECK(cosine_lr(100, cfg) == 0.001);
  const ScheduleConfig zero_min{0.02, 0.0, 100};
  CHECK(cosine_lr(50, zero_min) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_lr(-1, cfg), std::out_of_range);
  CHECK_THROWS_AS(cosine_lr(101, cfg), std::out_of_range);
  CHECK_THROWS_AS(cosine_lr(0, ScheduleConfig{0.01, 0.02, 10}), std::invalid_argument);
  CHECK_THROWS_AS(cosine_lr(0, ScheduleConfig{0.01, 0.0, 0}), std::invalid_argument);
}

TEST_CASE("cosine_lr is non-increasing") {
  for (std::int64_t total : {1, 2, 7, 64, 1000}) {
    const ScheduleConfig cfg{0.05, 0.002, total};
    for (std::int64_t t = 1; t <= total; ++t) CHECK(cosine_lr(t, cfg) <= cosine_lr(t - 1, cfg));
  }
}

TEST_CASE("adam: zero gradient without decay changes nothing") {
  const auto p = random_model(1);
  const auto r = adam_step(p, zeros(p.topology), AdamState::init(p), 0.01, 0.0);
  for (std::size_t l = 0; l < p.layers().size(); ++l) {
    CHECK(r.params.layers()[l]->weights == p.layers()[l]->weights);
    CHECK(r.params.layers()[l]->bias == p.layers()[l]->bias);
  }
  CHECK(r.state.step_count == 1);
}

TEST_CASE("adam: hand-computed first step") {
  const auto p = scalar_model(0.0);
  Gradients g = zeros(p.topology);
  g.heads[0][0].weights(0, 0) = 4.0;
  const auto r = adam_step(p, g, AdamState::init(p), 0.01, 0.0);
  // m = 0.4, v = 0.016; m_hat = 4, v_hat = 16; step = 0.01 * 4 / (4 + 1e-8).
  const double expect = -0.01 * 4.0 / (4.0 + 1e-8);
  CHECK(std::abs(r.params.heads[0][0].weights(0, 0) - expect) < 1e-9);
  CHECK(r.params.heads[0][0].weights(0, 0) == doctest::Approx(-0.01).epsilon(1e-8));
  CHECK(r.state.first_moment.heads[0][0].weights(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.state.second_moment.heads[0][0].weights(0, 0) == doctest::Approx(0.016).epsilon(1e-15));
}

TEST_CASE("adam: decoupled decay, biases exempt") {
  const auto p = scalar_model(1.0, 1.0);
  const auto r = adam_step(p, zeros(p.topology), AdamState::init(p), 0.01, 0.1);
  CHECK(r.params.heads[0][0].weights(0, 0) == doctest::Approx(0.999).epsilon(1e-15));
  CHECK(r.params.heads[0][0].bias(0) == 1.0);
}

TEST_CASE("adam: first step bounded by lr, deterministic, shape preserving") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = random_model(seed);
    const auto g = random_grads(p, seed + 100);
    const double lr = 0.02;
    const auto a = adam_step(p, g, AdamState::init(p), lr, 0.0);
    const auto b = adam_step(p, g, AdamState::init(p), lr, 0.0);
    REQUIRE(a.params.same_shape(p));
    CHECK(a.state.first_moment.same_shape(p));
    CHECK(a.state.first_moment.all_finite());
    CHECK(a.state.second_moment.all_finite());
    for (std::size_t l = 0; l < p.layers().size(); ++l) {
      CHECK(a.params.layers()[l]->weights == b.params.layers()[l]->weights);
      const Matrix delta = a.params.layers()[l]->weights - p.layers()[l]->weights;
      CHECK(delta.cwiseAbs().maxCoeff() <= lr * (1 + 1e-12));
    }
  }
}

TEST_CASE("adam: in-place form matches the value form over several steps") {
  auto p = random_model(3);
  auto state = AdamState::init(p);
  ModelState q = p;
  AdamState qs = state;
  for (int t = 0; t < 5; ++t) {
    const auto g = random_grads(p, 50 + static_cast<std::uint64_t>(t));
    adam_update(p, g, state, 0.01, 0.01);
    auto r = adam_step(q, g, qs, 0.01, 0.01);
    q = std::move(r.params);
    qs = std::move(r.state);
  }
  CHECK(state.step_count == 5);
  for (std::size_t l = 0; l < p.layers().size(); ++l) CHECK(p.layers()[l]->weights == q.layers()[l]->weights);
}

TEST_CASE("adam: shape mismatch is an error") {
  const auto p = random_model(1);
  const auto other = scalar_model(0.0);
  CHECK_THROWS_AS(adam_step(p, zeros(other.topology), AdamState::init(p), 0.01, 0.0),
                  std::invalid_argument);
}
