#include <doctest.h>

#include <cmath>

#include "stdpavg/errors.hpp"
#include "stdpavg/harness.hpp"

using namespace stdpavg;

namespace {

SimpleRegimeParams simple(double nu, double B1, double B2) {
  SimpleRegimeParams p;
  p.model = SimpleModelParams{1.0, 1.0, B1, B2};
  p.activation = ActivationSpec{nu, 1.0};
  p.mu = 1.0;
  return p;
}

}  // namespace

TEST_CASE("frozen weight sweep has no error and no spread") {
  PAParams pa;
  pa.B1 = {1.0, 1.0};
  pa.B2 = {0.5, 0.5};
  PlasticityMapSpec m;
  m.form = PlasticityForm::decomposed;
  m.alpha = 1.0;
  m.dep_p.scale = 0.0;
  m.dep_d.scale = 0.0;
  ContinuousBundle b;
  b.name = "frozen";
  b.kernel = make_pa_kernel(pa);
  b.activation = ActivationSpec{0.5, 1.0};
  b.plasticity = m;
  b.init.z.assign(4, 0.0);
  b.init.w = 1.3;
  b.limit = [](const std::vector<double>& g) { return std::vector<double>(g.size(), 1.3); };
  auto grid = uniform_grid(1.0, 11);
  auto r = eps_sweep(b, {0.1, 0.01}, 8, 3, grid);
  REQUIRE(r.per_eps.size() == 2);
  for (const auto& e : r.per_eps) {
    CHECK(e.sup_err == 0.0);
    CHECK(e.stats.used == 8);
    for (double sd : e.stats.sd) CHECK(sd == 0.0);
  }
}

TEST_CASE("sweep refuses a bundle that fails validation") {
  ContinuousBundle b;
  b.kernel = make_simple_kernel({});
  b.kernel.gamma[0] = 0.0;
  b.init.z.assign(1, 0.0);
  b.init.w = 1.0;
  b.plasticity.alpha = 1.0;
  b.limit = [](const std::vector<double>& g) { return std::vector<double>(g.size(), 1.0); };
  CHECK_THROWS_AS(eps_sweep(b, {0.1}, 2, 1, uniform_grid(1.0, 3)), SpecError);
}

TEST_CASE("sweep reduction is independent of scheduling") {
  ReplicaFn fn = [](double eps, std::size_t, std::uint32_t r) {
    ReplicaRun run;
    run.w = {1.0, 1.0 + eps * r, 1.0 + 2.0 * eps * r};
    if (r == 3) run.terminated.kind = Termination::Kind::blowup;
    if (r == 4) {
      run.terminated.kind = Termination::Kind::budget_exhausted;
      run.w.resize(1);
    }
    return run;
  };
  auto a = run_sweep(fn, {0.5, 0.25}, 6, {0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, "toy");
  REQUIRE(a.per_eps.size() == 2);
  const auto& e = a.per_eps[0];
  CHECK(e.blowups == 1);
  CHECK(e.budget_exhausted == 1);
  CHECK(e.stats.used == 4);
  // replicas 0, 1, 2, 5 at eps 0.5
  CHECK(e.stats.mean[2] == doctest::Approx(1.0 + 2.0 * 0.5 * 8.0 / 4.0));
  CHECK(e.blowup_frac() == doctest::Approx(1.0 / 6.0));
  auto b = run_sweep(fn, {0.5, 0.25}, 6, {0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, "toy");
  CHECK(b.per_eps[1].stats.mean == a.per_eps[1].stats.mean);
}

TEST_CASE("ensemble statistics") {
  auto s = ensemble_stats({{1.0, 2.0}, {3.0, 6.0}}, 2);
  CHECK(s.mean[0] == 2.0);
  CHECK(s.mean[1] == 4.0);
  CHECK(s.sd[1] == doctest::Approx(std::sqrt(8.0)));
  CHECK(s.se[1] == doctest::Approx(2.0));
  CHECK(s.used == 2);
}

TEST_CASE("zero drive with leak is stable at 0") {
  auto r = classify_drive([](double) { return 0.0; }, 1.0, std::nullopt, {1.0, 3.0});
  CHECK(r.regime == Regime::stable);
  REQUIRE(r.w_eq.has_value());
  CHECK(*r.w_eq == 0.0);
}

TEST_CASE("w' = w^2 is explosive with t_exp = 1/w0") {
  auto r = classify_drive([](double w) { return w * w; }, 0.0, std::nullopt, {1.0, 3.0}, 40.0);
  CHECK(r.regime == Regime::explosive);
  REQUIRE(r.limits.size() == 2);
  CHECK(r.limits[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.limits[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  for (auto f : r.fates) CHECK(f == Fate::explodes);
}

TEST_CASE("committed simple-model regimes") {
  const std::vector<double> w0{1.0, 3.0};
  auto ex = classify_regime(simple(0.0, 1.0, 0.5), w0);
  CHECK(ex.regime == Regime::explosive);
  REQUIRE(ex.limits.size() == 2);
  // explosion time decreases with w0
  CHECK(ex.limits[1] < ex.limits[0]);

  auto dv = classify_regime(simple(0.0, 1.0, 0.0), w0);
  CHECK(dv.regime == Regime::divergent);

  auto bi = classify_regime(simple(0.0, 0.5, 0.1), w0);
  CHECK(bi.regime == Regime::bistable);
  REQUIRE(bi.w_eq.has_value());
  CHECK(*bi.w_eq == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(w0[0] < *bi.w_eq);
  CHECK(w0[1] > *bi.w_eq);
  CHECK(bi.fates[0] == Fate::converges);
  CHECK(bi.fates[1] == Fate::explodes);

  auto st = classify_regime(simple(1.0, 0.5, 0.0), w0);
  CHECK(st.regime == Regime::stable);
  REQUIRE(st.w_eq.has_value());
  CHECK(*st.w_eq == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("classification is stable under a longer horizon") {
  const std::vector<double> w0{1.0, 3.0};
  for (auto p : {simple(0.0, 1.0, 0.5), simple(0.0, 1.0, 0.0), simple(0.0, 0.5, 0.1), simple(1.0, 0.5, 0.0)}) {
    auto a = classify_regime(p, w0, 40.0);
    auto b = classify_regime(p, w0, 80.0);
    CHECK(a.regime == b.regime);
  }
}

TEST_CASE("filtered simple model shares the equilibrium at alpha = 1") {
  // The filter converges more slowly than the instantaneous form, so the
  // horizon is longer.
  auto p = simple(1.0, 0.5, 0.0);
  p.alpha = 1.0;
  auto r = classify_regime(p, {1.0, 3.0}, 200.0);
  CHECK(r.regime == Regime::stable);
  REQUIRE(r.w_eq.has_value());
  CHECK(*r.w_eq == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("regime search finds every regime") {
  std::vector<double> B1{0.5, 1.0}, B2{0.0, 0.1, 0.5};
  auto base = simple(0.0, 0.0, 0.0);
  auto hits = regime_search(base, B1, B2, {1.0, 3.0});
  CHECK(hits.count(Regime::explosive) == 1);
  CHECK(hits.count(Regime::divergent) == 1);
  CHECK(hits.count(Regime::bistable) == 1);
  CHECK(hits.at(Regime::bistable) == std::pair<double, double>{0.5, 0.1});
  auto base_nu = simple(1.0, 0.0, 0.0);
  auto hits_nu = regime_search(base_nu, B1, B2, {1.0, 3.0});
  CHECK(hits_nu.count(Regime::stable) == 1);
}

TEST_CASE("regime names round-trip") {
  for (auto r : {Regime::explosive, Regime::divergent, Regime::bistable, Regime::stable, Regime::undetermined})
    CHECK(regime_from_string(to_string(r)) == r);
  CHECK_THROWS_AS(regime_from_string("chaotic"), SpecError);
}

TEST_CASE("simple bundle follows its limit at small eps") {
  auto p = simple(1.0, 0.5, 0.0);
  auto b = simple_bundle(p, 1.0);
  auto grid = uniform_grid(2.0, 11);
  auto r = eps_sweep(b, {0.01}, 40, 5, grid);
  const auto& e = r.per_eps[0];
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(e.stats.mean[i] - r.limit_w[i]) <= 3.0 * e.stats.se[i] + 1e-2);
}
