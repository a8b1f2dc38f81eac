#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "xrcn/optim.hpp"

using namespace xrcn;

namespace {

ParamSet scalar_set(float v) {
  ParamSet p;
  p.add("w", Tensor(Shape{1}, v));
  return p;
}

}  // namespace

TEST_CASE("one step from w=1, g=1, s=0 with default hyperparameters") {
  const RmsPropConfig cfg;
  CHECK(cfg.learning_rate == 0.001f);
  CHECK(cfg.decay_rho == 0.9f);
  CHECK(cfg.epsilon == 1e-8f);
  const RmsPropResult r = rmsprop_step(scalar_set(1.0f), scalar_set(1.0f), RmsPropState::zeros_like(scalar_set(0)), cfg);
  CHECK(std::abs(r.state.mean_square[0].value[0] - 0.1) < 1e-7);
  CHECK(std::abs(r.params[0].value[0] - 0.99683772) < 1e-7);
  CHECK(r.state.step == 1);

  oracle::ScalarRmsProp o{1.0, 0.0};
  o.step(1.0);
  CHECK(std::abs(o.w - 0.99683772) < 1e-8);
  CHECK(std::abs(r.params[0].value[0] - o.w) < 1e-7);
}

TEST_CASE("zero gradient leaves w and decays s") {
  RmsPropState st = RmsPropState::zeros_like(scalar_set(0));
  st.mean_square[0].value[0] = 0.5f;
  const RmsPropResult r = rmsprop_step(scalar_set(0.25f), scalar_set(0.0f), st, RmsPropConfig{});
  CHECK(r.params[0].value[0] == 0.25f);
  CHECK(r.state.mean_square[0].value[0] == 0.9f * 0.5f);
}

TEST_CASE("two successive steps match the scalar oracle") {
  for (auto [g1, g2] : {std::pair{1.0f, 1.0f}, std::pair{0.5f, -2.0f}, std::pair{-0.03f, 0.7f}}) {
    ParamSet p = scalar_set(1.0f);
    RmsPropState st = RmsPropState::zeros_like(p);
    // Same hyperparameters as the float config, so only the arithmetic differs.
    oracle::ScalarRmsProp o{1.0, 0.0, double(0.001f), double(0.9f), double(1e-8f)};
    for (float g : {g1, g2}) {
      RmsPropResult r = rmsprop_step(p, scalar_set(g), st, RmsPropConfig{});
      p = r.params;
      st = r.state;
      o.step(g);
    }
    CHECK(std::abs(p[0].value[0] - o.w) < 1e-7);
    CHECK(std::abs(st.mean_square[0].value[0] - o.s) < 1e-7);
    CHECK(st.step == 2);
  }
}

TEST_CASE("accumulator stays non-negative and updates stay finite") {
  Rng rng(4);
  ParamSet p;
  p.add("a", oracle::random_tensor<float>(Shape{3, 4}, rng));
  p.add("b", oracle::random_tensor<float>(Shape{5}, rng));
  RmsPropState st = RmsPropState::zeros_like(p);
  for (int step = 0; step < 200; ++step) {
    ParamSet g = p.zeros_like();
    for (auto& e : g) {
      for (float& v : e.value.data()) {
        const double mag = std::pow(10.0, -8.0 + 14.0 * rng.uniform01_double());
        v = static_cast<float>(rng.bernoulli(0.5f) ? mag : -mag);
      }
    }
    RmsPropResult r = rmsprop_step(p, g, st, RmsPropConfig{});
    p = std::move(r.params);
    st = std::move(r.state);
    for (const auto& e : st.mean_square)
      for (float v : e.value.data()) CHECK(v >= 0.0f);
    for (const auto& e : p)
      for (float v : e.value.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("update is elementwise independent of element order") {
  Rng rng(12);
  const Tensor w = oracle::random_tensor<float>(Shape{10}, rng);
  const Tensor g = oracle::random_tensor<float>(Shape{10}, rng);
  const Tensor s = oracle::random_tensor<float>(Shape{10}, rng, 0.0, 2.0);
  std::vector<std::size_t> perm(10);
  for (std::size_t i = 0; i < 10; ++i) perm[i] = i;
  rng.shuffle(perm);

  auto permute = [&](const Tensor& t) {
    Tensor o(t.shape());
    for (std::size_t i = 0; i < 10; ++i) o[i] = t[perm[i]];
    return o;
  };
  auto run = [](const Tensor& wt, const Tensor& gt, const Tensor& st) {
    ParamSet p, gs;
    p.add("w", wt);
    gs.add("w", gt);
    RmsPropState state{ParamSet{}, 0};
    state.mean_square.add("w", st);
    return rmsprop_step(p, gs, state, RmsPropConfig{});
  };
  const RmsPropResult plain = run(w, g, s);
  const RmsPropResult shuffled = run(permute(w), permute(g), permute(s));
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(shuffled.params[0].value[i] == plain.params[0].value[perm[i]]);
    CHECK(shuffled.state.mean_square[0].value[i] == plain.state.mean_square[0].value[perm[i]]);
  }
}

TEST_CASE("rmsprop errors") {
  const ParamSet p = scalar_set(1.0f);
  const RmsPropState st = RmsPropState::zeros_like(p);
  ParamSet two;
  two.add("w", Tensor(Shape{2}));
  CHECK_THROWS_AS(rmsprop_step(p, two, st, RmsPropConfig{}), ShapeError);
  ParamSet renamed;
  renamed.add("v", Tensor(Shape{1}));
  CHECK_THROWS_AS(rmsprop_step(p, renamed, st, RmsPropConfig{}), ShapeError);
  CHECK_THROWS_AS(rmsprop_step(p, p, RmsPropState::zeros_like(two), RmsPropConfig{}), ShapeError);

  ParamSet bad = p;
  bad[0].value.data()[0] = NAN;
  try {
    rmsprop_step(p, bad, st, RmsPropConfig{});
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }

  CHECK_THROWS_AS(rmsprop_step(p, p, st, RmsPropConfig{-1.0f, 0.9f, 1e-8f}), InvalidArgument);
  CHECK_THROWS_AS(rmsprop_step(p, p, st, RmsPropConfig{0.001f, 1.0f, 1e-8f}), InvalidArgument);
  CHECK_THROWS_AS(rmsprop_step(p, p, st, RmsPropConfig{0.001f, 0.9f, 0.0f}), InvalidArgument);
}
