#include <doctest.h>

#include <cmath>

#include "stdpavg/discrete.hpp"
#include "stdpavg/errors.hpp"
#include "stdpavg/invariant.hpp"

using namespace stdpavg;

TEST_CASE("no potentiation source keeps W at zero") {
  DiscreteParams p;
  SimConfig cfg;
  cfg.epsilon = 0.01;
  cfg.horizon = 20.0;
  cfg.sample_grid = uniform_grid(20.0, 21);
  auto tr = simulate_discrete_scaled(make_threshold_drive(kInf, kInf), p, DiscreteState{}, cfg);
  REQUIRE(tr.samples.size() == 21);
  for (const auto& s : tr.samples) {
    CHECK(s.w == 0);
    CHECK(s.omega_p == 0.0);
    CHECK(s.x == 0);
  }
  CHECK(tr.event_count > 0);
}

TEST_CASE("calcium at zero weight is Poisson(lambda/gamma)") {
  DiscreteParams p;
  InvariantConfig cfg;
  cfg.horizon = 4e5;
  cfg.sample_dt = 1.0;
  cfg.seed = 5;
  std::vector<DiscreteFunctional> fs;
  for (int n = 0; n <= 2; ++n)
    fs.push_back({"eq" + std::to_string(n), [n](std::int64_t, std::int64_t c) { return c == n ? 1.0 : 0.0; }});
  fs.push_back({"mean_c", [](std::int64_t, std::int64_t c) { return static_cast<double>(c); }});
  auto est = mc_invariant_discrete(p, 0, fs, cfg);
  const double m = p.lambda / p.gamma;
  double pmf = std::exp(-m);
  for (int n = 0; n <= 2; ++n) {
    const auto& e = est["eq" + std::to_string(n)];
    CAPTURE(n);
    CHECK(std::abs(e.mean - pmf) <= 3.0 * e.se + 1e-12);
    pmf *= m / (n + 1);
  }
  CHECK(std::abs(est["mean_c"].mean - m) <= 3.0 * est["mean_c"].se);
}

TEST_CASE("event log replays to the final state") {
  DiscreteParams p;
  p.mu = 0.05;
  DiscreteState init;
  init.w = 10;
  SimConfig cfg;
  cfg.epsilon = 0.1;
  cfg.horizon = 30.0;
  cfg.seed = 3;
  cfg.log_events = true;
  cfg.sample_grid = {30.0};
  auto tr = simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, init, cfg);
  REQUIRE(tr.terminated.kind == Termination::Kind::completed);
  REQUIRE(tr.samples.size() == 1);
  auto end = replay_discrete(p, init, tr.events);
  CHECK(end.x == tr.samples[0].x);
  CHECK(end.c == tr.samples[0].c);
  CHECK(end.w == tr.samples[0].w);
  CHECK(tr.events.size() == tr.event_count);
  bool saw_p = false, saw_leak = false;
  for (const auto& e : tr.events) {
    saw_p = saw_p || e.kind == EventKind::potentiation_jump;
    saw_leak = saw_leak || e.kind == EventKind::weight_leak;
  }
  CHECK(saw_p);
  CHECK(saw_leak);
}

TEST_CASE("filter intensities stay under their bound") {
  DiscreteParams p;
  DiscreteState init;
  init.w = 10;
  init.omega_p = 3.0;
  SimConfig cfg;
  cfg.epsilon = 0.05;
  cfg.horizon = 50.0;
  cfg.seed = 8;
  cfg.sample_grid = uniform_grid(50.0, 501);
  auto tr = simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, init, cfg);
  for (const auto& s : tr.samples) {
    CHECK(s.omega_p <= std::max(3.0, 1.0 / p.alpha) + 1e-12);
    CHECK(s.omega_d <= 1.0 / p.alpha + 1e-12);
    CHECK(s.w >= 0);
  }
}

TEST_CASE("same seed gives the same discrete path") {
  DiscreteParams p;
  DiscreteState init;
  init.w = 10;
  SimConfig cfg;
  cfg.epsilon = 0.01;
  cfg.horizon = 10.0;
  cfg.seed = 17;
  cfg.sample_grid = uniform_grid(10.0, 11);
  auto a = simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, init, cfg);
  auto b = simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, init, cfg);
  CHECK(a.event_count == b.event_count);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].w == b.samples[i].w);
    CHECK(a.samples[i].omega_p == b.samples[i].omega_p);
  }
}

TEST_CASE("discrete inputs are checked") {
  DiscreteParams p;
  SimConfig cfg;
  cfg.horizon = 1.0;
  DiscreteState bad;
  bad.w = -1;
  CHECK_THROWS_AS(simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, bad, cfg), SpecError);
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(simulate_discrete_scaled(make_threshold_drive(0.5, 1.5), p, DiscreteState{}, cfg),
                  SpecError);
}
