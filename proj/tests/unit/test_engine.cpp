#include <doctest.h>

#include <cmath>
#include <vector>

#include "stdpavg/engine.hpp"
#include "stdpavg/model.hpp"

using namespace stdpavg;

namespace {

PlasticityMapSpec linear_map(double mu, double alpha = 1.0) {
  PlasticityMapSpec m;
  m.form = PlasticityForm::linear;
  m.mu = mu;
  m.alpha = alpha;
  return m;
}

PlasticityMapSpec instantaneous_map(double mu) {
  PlasticityMapSpec m;
  m.form = PlasticityForm::instantaneous;
  m.mu = mu;
  return m;
}

SystemState rest(std::size_t ell, double w, double x = 0.0) {
  SystemState s;
  s.z.assign(ell, 0.0);
  s.w = w;
  s.x = x;
  return s;
}

}  // namespace

TEST_CASE("no input gives the deterministic decay") {
  PAParams p;
  p.lambda = 0.0;
  p.B1 = {1.0, 1.0};
  p.B2 = {1.0, 1.0};
  auto k = make_pa_kernel(p);
  SimConfig cfg;
  cfg.epsilon = 0.1;
  cfg.horizon = 2.0;
  cfg.sample_grid = uniform_grid(2.0, 41);
  cfg.log_events = true;
  auto tr = simulate_scaled(k, ActivationSpec{0.0, 1.0}, ResetSpec{}, linear_map(0.0),
                            rest(4, 1.5, 2.0), cfg);
  CHECK(tr.terminated.kind == Termination::Kind::completed);
  REQUIRE(tr.samples.size() == 41);
  for (const auto& s : tr.samples) {
    CHECK(s.x == doctest::Approx(2.0 * std::exp(-s.t / 0.1)).epsilon(1e-14));
    CHECK(s.w == 1.5);
  }
  // beta(x0 e^{-t/eps}) > 0 so postsynaptic spikes can occur; with empty
  // traces they carry no plasticity and X has no reset.
  for (const auto& e : tr.events) CHECK(e.kind != EventKind::presyn);

  auto silent = simulate_scaled(k, ActivationSpec{0.0, 0.0}, ResetSpec{}, linear_map(0.0),
                                rest(4, 1.5, 2.0), cfg);
  CHECK(silent.event_count == 0);
  CHECK(silent.events.empty());
  CHECK(silent.samples.back().w == 1.5);
}

TEST_CASE("uniform grid") {
  auto g = uniform_grid(10.0, 11);
  REQUIRE(g.size() == 11);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 10.0);
  CHECK(g[3] == doctest::Approx(3.0));
}

TEST_CASE("zero potential and no offset never fires") {
  PhiloxStream rng({1, 0, 0, StreamRole::thinning});
  auto d = thinning_next_postsyn(0.0, ActivationSpec{0.0, 1.0}, 1.0, rng);
  CHECK(std::isinf(d.elapsed));
  CHECK_FALSE(d.accepted);
  CHECK_FALSE(next_postsyn(0.0, ActivationSpec{0.0, 1.0}, 1.0, 100.0, rng).has_value());
}

TEST_CASE("frozen potential gives a homogeneous Poisson stream") {
  PhiloxStream rng({2, 0, 0, StreamRole::thinning});
  ActivationSpec act{0.0, 1.0};
  const double x = 2.0, eps = 0.5;
  const int n = 1000000;
  double sum = 0.0;
  bool all_accepted = true;
  for (int i = 0; i < n; ++i) {
    auto d = thinning_next_postsyn(x, act, eps, rng, 0.0);
    all_accepted = all_accepted && d.accepted;
    sum += d.elapsed;
  }
  CHECK(all_accepted);
  CHECK(std::abs(sum / n - eps / x) < 0.01 * eps / x);
}

TEST_CASE("decaying potential matches the mean count") {
  ActivationSpec act{0.0, 1.0};
  const double t_end = 2.0;
  const int reps = 100000;
  double sum = 0.0;
  for (int r = 0; r < reps; ++r) {
    PhiloxStream rng({3, static_cast<std::uint32_t>(r), 0, StreamRole::thinning});
    double t = 0.0, x = 1.0;
    int count = 0;
    for (;;) {
      auto dt = next_postsyn(x, act, 1.0, t_end - t, rng);
      if (!dt) break;
      t += *dt;
      x *= std::exp(-*dt);
      ++count;
    }
    sum += count;
  }
  double m = 1.0 - std::exp(-t_end);
  CHECK(std::abs(sum / reps - m) < 3.0 * std::sqrt(m / reps));
}

TEST_CASE("z flow") {
  CHECK(z_flow(2.0, 1.0, 0.0, 0.5, 0.1) == doctest::Approx(2.0 * std::exp(-5.0)));
  CHECK(z_flow(0.0, 2.0, 1.0, 1.0, 1.0) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))));
  CHECK(z_flow(3.0, 0.0, 1.0, 0.5, 0.1) == doctest::Approx(8.0));
}

TEST_CASE("instantaneous form: pure leak") {
  PAParams p;
  auto k = make_pa_kernel(p);
  SimConfig cfg;
  cfg.epsilon = 0.01;
  cfg.horizon = 3.0;
  cfg.sample_grid = uniform_grid(3.0, 31);
  auto tr = simulate_nofilter_scaled(k, ActivationSpec{0.5, 1.0}, ResetSpec{}, instantaneous_map(0.7),
                                     rest(4, 2.0), cfg);
  REQUIRE(tr.samples.size() == 31);
  for (const auto& s : tr.samples) CHECK(s.w == doctest::Approx(2.0 * std::exp(-0.7 * s.t)).epsilon(1e-12));
}

TEST_CASE("instantaneous form: one forced presynaptic jump") {
  PAParams p;
  p.B1 = {1.0, 1.0};
  p.B2 = {1.0, 1.0};
  auto k = make_pa_kernel(p);
  const double eps = 0.1, t0 = 0.05, w0 = 1.0;
  auto init = rest(4, w0);
  init.z[pa_coord(Branch::p, 2)] = 2.0;
  init.z[pa_coord(Branch::d, 2)] = 0.5;
  SimConfig cfg;
  cfg.epsilon = eps;
  cfg.horizon = t0 * 1.001;
  cfg.sample_grid = {t0 * 0.999, t0 * 1.00001};
  cfg.forced_presyn = std::vector<double>{t0};
  cfg.log_events = true;
  auto tr = simulate_nofilter_scaled(k, ActivationSpec{0.0, 1.0}, ResetSpec{}, instantaneous_map(0.0),
                                     init, cfg);
  REQUIRE(tr.samples.size() == 2);
  int presyn = 0, postsyn_before = 0;
  for (const auto& e : tr.events) {
    if (e.kind == EventKind::presyn) ++presyn;
    if (e.kind == EventKind::postsyn && e.t <= cfg.sample_grid[1]) ++postsyn_before;
  }
  CHECK(presyn == 1);
  REQUIRE(postsyn_before == 0);
  double decay = std::exp(-t0 / eps);
  double expected = eps * (2.0 * decay - 0.5 * decay);
  CHECK(tr.samples[0].w == w0);
  CHECK(tr.samples[1].w - w0 == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("same seed reproduces the path, state stays nonnegative") {
  PAParams p;
  p.B1 = {1.0, 0.5};
  p.B2 = {0.5, 0.5};
  auto k = make_pa_kernel(p);
  SimConfig cfg;
  cfg.epsilon = 0.01;
  cfg.horizon = 2.0;
  cfg.seed = 42;
  cfg.sample_grid = uniform_grid(2.0, 201);
  ActivationSpec act{0.5, 1.0};
  auto a = simulate_scaled(k, act, ResetSpec{}, linear_map(1.0), rest(4, 2.0), cfg);
  auto b = simulate_scaled(k, act, ResetSpec{}, linear_map(1.0), rest(4, 2.0), cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.event_count == b.event_count);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].w == b.samples[i].w);
    CHECK(a.samples[i].x >= 0.0);
    for (double z : a.samples[i].z) CHECK(z >= 0.0);
  }
  cfg.seed = 43;
  auto c = simulate_scaled(k, act, ResetSpec{}, linear_map(1.0), rest(4, 2.0), cfg);
  CHECK(c.samples.back().w != a.samples.back().w);
}

TEST_CASE("event budget stops the run") {
  PAParams p;
  p.B1 = {1.0, 1.0};
  auto k = make_pa_kernel(p);
  SimConfig cfg;
  cfg.epsilon = 1e-3;
  cfg.horizon = 5.0;
  cfg.max_events = 100;
  cfg.sample_grid = uniform_grid(5.0, 11);
  auto tr = simulate_scaled(k, ActivationSpec{0.5, 1.0}, ResetSpec{}, linear_map(1.0), rest(4, 1.0), cfg);
  CHECK(tr.terminated.kind == Termination::Kind::budget_exhausted);
  CHECK(tr.samples.size() < 11);
}

TEST_CASE("fast process sampling and reset") {
  auto k = make_simple_kernel(SimpleModelParams{1.0, 1.0, 1.0, 0.5});
  FastConfig cfg;
  cfg.sample_dt = 0.5;
  auto tr = simulate_fast_fixed_w(k, ActivationSpec{0.0, 1.0}, ResetSpec{ResetForm::custom, 0.5, 0.0},
                                  1.0, 100.0, 9, cfg);
  REQUIRE(tr.samples.size() == 201);
  CHECK(tr.samples[10].t == doctest::Approx(5.0));
  for (const auto& s : tr.samples) {
    CHECK(s.w == 1.0);
    CHECK(s.x >= 0.0);
  }
}
