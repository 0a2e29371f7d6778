#include <doctest.h>

#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <numbers>

#include "stdpavg/errors.hpp"
#include "stdpavg/invariant.hpp"

using namespace stdpavg;

namespace {

// Ein(x) = int_0^x (1 - e^{-s}) / s ds = E1(x) + ln x + Euler gamma.
double ein(double x) { return boost::math::expint(1, x) + std::log(x) + std::numbers::egamma; }

bool within(const FunctionalEstimate& e, double exact, double k = 3.0) {
  return std::abs(e.mean - exact) <= k * e.se;
}

InvariantConfig mc(double horizon, std::uint64_t seed, double dt = 0.5) {
  InvariantConfig c;
  c.horizon = horizon;
  c.sample_dt = dt;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("pair rule coefficients") {
  PAParams p;
  p.B1 = {1.0, 1.0};
  p.B2 = {1.0, 1.0};
  auto c = pa_coeffs(make_pa_kernel(p), ActivationSpec{0.0, 1.0}, 1.0);
  CHECK(c.lambda1[0] == doctest::Approx(2.0));
  CHECK(c.lambda2[0] == doctest::Approx(0.5));
  CHECK(c.lambda1[1] == doctest::Approx(2.0));

  auto z = pa_coeffs(make_pa_kernel(PAParams{}), ActivationSpec{0.0, 1.0}, 1.0);
  CHECK(z.lambda1[0] == 0.0);
  CHECK(z.lambda2[1] == 0.0);

  CHECK_THROWS_AS(pa_coeffs(make_simple_kernel({}), ActivationSpec{}, 1.0), SpecError);
}

TEST_CASE("pair rule drive against Monte Carlo") {
  PAParams p;
  p.lambda = 1.5;
  p.B1 = {1.0, 0.4};
  p.B2 = {0.5, 0.8};
  p.gamma1 = {1.0, 2.0};
  p.gamma2 = {0.5, 1.5};
  ActivationSpec act{0.5, 0.8};
  auto k = make_pa_kernel(p);
  auto c = pa_coeffs(k, act, p.lambda);
  const double w = 1.2;
  auto est = mc_invariant(k, act, ResetSpec{}, w, drive_functionals(k, act), mc(4e4, 21));
  for (Branch a : kBranches) {
    double exact = c.drive(a, w, act.nu, act.slope, p.lambda);
    const auto& e = est[a == Branch::p ? "drive_p" : "drive_d"];
    CAPTURE(exact);
    CAPTURE(e.mean);
    CAPTURE(e.se);
    CHECK(within(e, exact));
  }
}

TEST_CASE("instantaneous pair drive adds the constants") {
  PAParams p;
  p.B1 = {1.0, 1.0};
  p.B2 = {1.0, 1.0};
  p.D1 = {0.3, 0.0};
  p.D2 = {0.0, 0.2};
  ActivationSpec act{0.5, 1.0};
  auto d = pa_nofilter_drive(p, act);
  // lambda E[z_2 + D1] + E[beta(X)(z_1 + D2)], E[beta(X)] = nu + slope lambda w
  CHECK(d.intercept[0] == doctest::Approx(0.5 * 2.0 + 0.3));
  CHECK(d.gain[0] == doctest::Approx(2.5));
  CHECK(d.intercept[1] == doctest::Approx(1.0 + 0.2 * 0.5));
  CHECK(d.gain[1] == doctest::Approx(2.5 + 0.2));
}

TEST_CASE("simple model drive") {
  SimpleModelParams p{1.0, 1.0, 1.0, 0.0};
  auto d = simple_model_drive(p, ActivationSpec{0.0, 1.0});
  CHECK(d.c0 == 0.0);
  CHECK(d.c1 == doctest::Approx(1.5));
  CHECK(d.c2 == 0.0);
  auto e = simple_model_drive(SimpleModelParams{1.0, 1.0, 0.0, 1.0}, ActivationSpec{0.0, 1.0});
  CHECK(e.c2 == doctest::Approx(1.25));

  SimpleModelParams q{0.8, 1.3, 0.6, 0.4};
  ActivationSpec act{0.3, 0.7};
  auto k = make_simple_kernel(q);
  auto dq = simple_model_drive(q, act);
  const double w = 1.5;
  auto est = mc_invariant(k, act, ResetSpec{}, w, drive_functionals(k, act), mc(4e4, 4));
  CHECK(within(est["drive_p"], dq.eval(w)));
}

TEST_CASE("X and trace means") {
  PAParams p;
  p.lambda = 2.0;
  p.B1 = {0.5, 1.0};
  p.gamma1 = {2.0, 1.0};
  auto k = make_pa_kernel(p);
  ActivationSpec act{0.0, 1.0};
  std::vector<Functional> fs{named_functional("mean_x", k, act), named_functional("mean_z1", k, act),
                             named_functional("mean_xz1", k, act)};
  const double w = 0.7;
  auto est = mc_invariant(k, act, ResetSpec{}, w, fs, mc(4e4, 2));
  CHECK(within(est["mean_x"], p.lambda * w));
  CHECK(within(est["mean_z1"], p.lambda * 0.5 / 2.0));
  double xz = p.lambda * p.lambda * 0.5 * w / 2.0 + p.lambda * w * 0.5 / 3.0;
  CHECK(within(est["mean_xz1"], xz));
  CHECK(est.samples > 0);
  CHECK_THROWS_AS(named_functional("mean_z9", k, act), SpecError);
  CHECK_THROWS_AS(named_functional("bogus", k, act), SpecError);
}

TEST_CASE("postsynaptic count Laplace transform") {
  PNSModel m{1.0, 0.7, 1.3};
  CHECK(postsyn_count_laplace(2.0, 0.0, 1.5, m) == doctest::Approx(1.0));
  for (double xi : {0.3, 1.0, 4.0})
    for (double a : {0.5, 2.0})
      CHECK(postsyn_count_laplace(0.0, xi, a, m) ==
            doctest::Approx(std::exp(-m.nu * a * (1.0 - std::exp(-xi)))).epsilon(1e-12));
  for (double w : {0.5, 2.0})
    for (double a : {0.3, 1.0, 3.0})
      CHECK(std::abs(postsyn_count_laplace(w, 40.0, a, m) - pns_tail(w, a, m)) < 1e-9);
  // more spikes with larger w
  CHECK(postsyn_count_laplace(2.0, 1.0, 1.0, m) < postsyn_count_laplace(1.0, 1.0, 1.0, m));
}

TEST_CASE("nearest-neighbour tail") {
  PNSModel m{1.0, 1.0, 1.0};
  CHECK(pns_tail(1.0, 0.0, m) == doctest::Approx(1.0));
  for (double a : {0.5, 1.0, 4.0}) CHECK(pns_tail(0.0, a, m) == doctest::Approx(std::exp(-a)).epsilon(1e-12));

  PNSParams curves;
  curves.lambda = 1.0;
  curves.phi1 = {StdpCurve{1.0, 1.0}, StdpCurve{0.0, 1.0}};
  auto k = make_pns_kernel(curves);
  ActivationSpec act{1.0, 1.0};
  Functional age{"age", [](double, std::span<const double> z) { return z[1] >= 1.0 ? 1.0 : 0.0; }};
  auto est = mc_invariant(k, act, ResetSpec{}, 1.0, {age}, mc(4e4, 6));
  CHECK(within(est["age"], pns_tail(1.0, 1.0, m)));
}

TEST_CASE("nearest-neighbour drive") {
  PNSModel m{1.5, 0.0, 2.0};
  CHECK(pns_drive(1.0, StdpCurve{0.0, 1.0}, StdpCurve{0.0, 1.0}, m) == 0.0);
  const double w = 1.5, l = m.lambda;
  double exact = m.slope * w * (1.0 + l) * l / (l + 2.0);
  CHECK(pns_drive(w, StdpCurve{1.0, 1.0}, StdpCurve{0.0, 1.0}, m) == doctest::Approx(exact).epsilon(1e-9));

  PNSParams curves;
  curves.lambda = 1.2;
  curves.phi1 = {StdpCurve{1.0, 0.8}, StdpCurve{0.6, 1.5}};
  curves.phi2 = {StdpCurve{0.5, 2.0}, StdpCurve{1.1, 0.7}};
  ActivationSpec act{0.4, 0.9};
  PNSModel mm{curves.lambda, act.nu, act.slope};
  auto k = make_pns_kernel(curves);
  const double ww = 0.8;
  auto est = mc_invariant(k, act, ResetSpec{}, ww, drive_functionals(k, act), mc(4e4, 7));
  for (Branch a : kBranches) {
    double v = pns_drive(ww, curves.phi1[idx(a)], curves.phi2[idx(a)], mm);
    CHECK(within(est[a == Branch::p ? "drive_p" : "drive_d"], v));
  }
}

TEST_CASE("calcium Laplace transform") {
  CalciumModel m{1.0, 1.0, 1.0, 1.0, ActivationSpec{0.0, 1.0}};
  CHECK(calcium_laplace(1.0, 0.0, 0.0, m) == doctest::Approx(1.0));
  for (double a : {0.5, 1.0, 2.0})
    for (double w : {0.5, 1.5}) {
      CAPTURE(a);
      CAPTURE(w);
      CHECK(calcium_laplace(w, a, 0.0, m) ==
            doctest::Approx(std::exp(-m.lambda * ein(a * w))).epsilon(1e-9));
    }

  CalciumParams cp;
  auto k = make_calcium_kernel(cp);
  Functional f{"lap", [](double x, std::span<const double> z) { return std::exp(-x - z[0]); }};
  auto est = mc_invariant(k, m.activation, ResetSpec{}, 1.0, {f}, mc(4e4, 8));
  CHECK(within(est["lap"], calcium_laplace(1.0, 1.0, 1.0, m)));
}

TEST_CASE("calcium threshold exceedance grows with w") {
  CalciumParams cp;
  cp.drive = make_threshold_drive(1.5, kInf);
  auto k = make_calcium_kernel(cp);
  ActivationSpec act{0.0, 1.0};
  Functional f{"exceed", [](double, std::span<const double> z) { return z[0] >= 1.5 ? 1.0 : 0.0; }};
  auto lo = mc_invariant(k, act, ResetSpec{}, 0.5, {f}, mc(2e4, 9))["exceed"];
  auto hi = mc_invariant(k, act, ResetSpec{}, 2.0, {f}, mc(2e4, 10))["exceed"];
  CHECK(hi.mean >= lo.mean - 3.0 * std::hypot(lo.se, hi.se));
}

TEST_CASE("discrete calcium pgf") {
  CQModel m = cq_model(DiscreteParams{});
  CHECK(m.gamma == 2.0);
  CHECK(m.beta == 0.01);
  for (std::int64_t w : {0, 3, 20}) CHECK(cq_pgf(1.0, w, m) == doctest::Approx(1.0).epsilon(1e-12));
  for (double u : {0.0, 0.3, 0.8})
    CHECK(cq_pgf(u, 0, m) == doctest::Approx(std::exp(-m.lambda * (1.0 - u) / m.gamma)).epsilon(1e-12));
  for (std::int64_t w : {1, 5, 10, 40, 100})
    for (double u : {0.0, 0.25, 0.5, 0.9}) {
      double g = cq_pgf_general(u, w, m), s = cq_pgf_unit(u, w, m);
      CHECK(std::abs(g - s) <= 1e-9 * std::abs(g));
    }
  // monotone in u, decreasing in w at fixed u < 1
  CHECK(cq_pgf(0.3, 5, m) < cq_pgf(0.6, 5, m));
  CHECK(cq_pgf(0.5, 10, m) < cq_pgf(0.5, 5, m));
}

TEST_CASE("pgf is continuous through the pole gamma = beta + 1") {
  CQModel m;
  m.beta = 0.5;
  m.gamma = 1.5;
  m.lambda = 0.4;
  CQModel n = m;
  n.gamma = 1.5 + 1e-4;
  for (std::int64_t w : {1, 4}) {
    double a = cq_pgf(0.4, w, m), b = cq_pgf(0.4, w, n);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) < 1e-3);
    CHECK(std::abs(cq_pgf_general(0.4, w, m) - cq_pgf_unit(0.4, w, m)) <= 1e-9 * a);
  }
}

TEST_CASE("discrete calcium tails") {
  CQModel m = cq_model(DiscreteParams{});
  for (std::int64_t w : {0, 1, 7, 30}) CHECK(cq_tail(w, 0, m) == 1.0);
  CHECK(cq_tail(0, 1, m) == doctest::Approx(1.0 - std::exp(-m.lambda / m.gamma)).epsilon(1e-12));
  double r = m.lambda / m.gamma;
  CHECK(cq_tail(0, 2, m) == doctest::Approx(1.0 - std::exp(-r) * (1.0 + r)).epsilon(1e-9));
  for (std::int64_t w : {1, 10}) {
    CHECK(cq_tail(w, 1, m) == doctest::Approx(1.0 - cq_pgf(0.0, w, m)).epsilon(1e-12));
    CHECK(cq_tail(w, 2, m) <= cq_tail(w, 1, m));
    CHECK(cq_tail(w + 1, 1, m) >= cq_tail(w, 1, m));
  }
  CHECK_THROWS(cq_tail(1, 3, m));
}

TEST_CASE("discrete calcium against the SSA") {
  DiscreteParams p;
  CQModel m = cq_model(p);
  InvariantConfig cfg = mc(2e5, 12, 1.0);
  std::vector<DiscreteFunctional> fs{
      {"pgf", [](std::int64_t, std::int64_t c) { return std::pow(0.5, static_cast<double>(c)); }},
      {"ge1", [](std::int64_t, std::int64_t c) { return c >= 1 ? 1.0 : 0.0; }},
      {"ge2", [](std::int64_t, std::int64_t c) { return c >= 2 ? 1.0 : 0.0; }}};
  for (std::int64_t w : {1, 5, 10}) {
    CAPTURE(w);
    auto est = mc_invariant_discrete(p, w, fs, cfg);
    CHECK(within(est["pgf"], cq_pgf(0.5, w, m)));
    CHECK(within(est["ge1"], cq_tail(w, 1, m)));
    CHECK(within(est["ge2"], cq_tail(w, 2, m)));
  }
}

TEST_CASE("batch means bookkeeping") {
  DiscreteParams p;
  InvariantConfig cfg = mc(2e4, 1, 1.0);
  cfg.batches = 16;
  std::vector<DiscreteFunctional> fs{{"one", [](std::int64_t, std::int64_t) { return 1.0; }}};
  auto est = mc_invariant_discrete(p, 5, fs, cfg);
  CHECK(est["one"].mean == 1.0);
  CHECK(est["one"].se == 0.0);
  CHECK(est.burn_in_fraction == doctest::Approx(0.1));

  cfg.replicas = 8;
  auto rep = mc_invariant_discrete(p, 5, {{"c", [](std::int64_t, std::int64_t c) { return double(c); }}}, cfg);
  CHECK(rep["c"].se > 0.0);
  auto again = mc_invariant_discrete(p, 5, {{"c", [](std::int64_t, std::int64_t c) { return double(c); }}}, cfg);
  CHECK(rep["c"].mean == again["c"].mean);
}

TEST_CASE("analytic tables") {
  PAParams p;
  p.B1 = {1.0, 1.0};
  p.B2 = {1.0, 1.0};
  auto c = pa_coeffs(make_pa_kernel(p), ActivationSpec{0.0, 1.0}, 1.0);
  auto t = pa_drive_table(c, {0.0, 1.0, 2.0}, 0.0, 1.0, 1.0);
  CHECK(t.drive_p[2] == doctest::Approx(5.0));
  CHECK(t.eval(1.5)[1] == doctest::Approx(3.75));
  CHECK_THROWS_AS(t.eval(2.5, 7.0), RangeError);
}
