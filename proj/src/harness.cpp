#include "stdpavg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stdpavg/discrete.hpp"
#include "stdpavg/errors.hpp"
#include "stdpavg/parallel.hpp"

namespace stdpavg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

EnsembleStats ensemble_stats(const std::vector<std::vector<double>>& paths, std::size_t points) {
  EnsembleStats s;
  s.used = paths.size();
  s.mean.assign(points, 0.0);
  s.sd.assign(points, kNaN);
  s.se.assign(points, kNaN);
  if (paths.empty()) {
    std::fill(s.mean.begin(), s.mean.end(), kNaN);
    return s;
  }
  const double n = static_cast<double>(paths.size());
  for (std::size_t i = 0; i < points; ++i) {
    double sum = 0.0;
    for (const auto& p : paths) sum += p[i];
    double m = sum / n, ss = 0.0;
    for (const auto& p : paths) ss += (p[i] - m) * (p[i] - m);
    s.mean[i] = m;
    if (paths.size() > 1) {
      s.sd[i] = std::sqrt(ss / (n - 1.0));
      s.se[i] = s.sd[i] / std::sqrt(n);
    }
  }
  return s;
}

SweepReport run_sweep(const ReplicaFn& run, const std::vector<double>& eps_list, std::size_t replicas,
                      const std::vector<double>& grid, std::vector<double> limit_w,
                      std::string limit_id) {
  if (eps_list.empty()) throw SpecError("sweep: empty eps list");
  if (replicas < 2) throw SpecError("sweep: need at least 2 replicas");
  if (limit_w.size() != grid.size()) throw SpecError("sweep: limit does not match the grid");
  SweepReport rep;
  rep.grid = grid;
  rep.limit_w = std::move(limit_w);
  rep.limit_id = std::move(limit_id);

  const std::size_t ne = eps_list.size();
  std::vector<ReplicaRun> runs(ne * replicas);
  parallel_for(runs.size(), [&](std::size_t k) {
    std::size_t e = k / replicas, r = k % replicas;
    runs[k] = run(eps_list[e], e, static_cast<std::uint32_t>(r));
  });

  for (std::size_t e = 0; e < ne; ++e) {
    EpsStats st;
    st.eps = eps_list[e];
    st.replicas = replicas;
    std::vector<std::vector<double>> ok;
    double t_exp_sum = 0.0;
    for (std::size_t r = 0; r < replicas; ++r) {
      const ReplicaRun& rr = runs[e * replicas + r];
      switch (rr.terminated.kind) {
        case Termination::Kind::completed:
          if (rr.w.size() != grid.size()) throw NumericError("sweep: replica missed grid points");
          ok.push_back(rr.w);
          break;
        case Termination::Kind::blowup:
          ++st.blowups;
          t_exp_sum += rr.terminated.time;
          break;
        case Termination::Kind::budget_exhausted:
          ++st.budget_exhausted;
          break;
      }
    }
    st.mean_t_exp = st.blowups ? t_exp_sum / static_cast<double>(st.blowups) : kNaN;
    st.stats = ensemble_stats(ok, grid.size());
    st.sup_err = ok.empty() ? kNaN : 0.0;
    for (std::size_t i = 0; i < grid.size() && !ok.empty(); ++i)
      st.sup_err = std::max(st.sup_err, std::abs(st.stats.mean[i] - rep.limit_w[i]));
    rep.per_eps.push_back(std::move(st));
  }
  return rep;
}

SweepReport eps_sweep(const ContinuousBundle& b, const std::vector<double>& eps_list,
                      std::size_t replicas, std::uint64_t seed, const std::vector<double>& grid) {
  if (!b.limit) throw SpecError("sweep: bundle has no limit reference");
  ValidationReport vr = validate(b.kernel, b.activation, b.reset, b.plasticity, b.init);
  if (!vr.passed()) throw SpecError("sweep: bundle fails validation: " + vr.summary());
  auto run = [&](double eps, std::size_t e, std::uint32_t r) {
    SimConfig cfg;
    cfg.epsilon = eps;
    cfg.horizon = grid.back();
    cfg.seed = seed;
    cfg.replica = r;
    cfg.group = static_cast<std::uint16_t>(e);
    cfg.sample_grid = grid;
    Trajectory tr = simulate_scaled(b.kernel, b.activation, b.reset, b.plasticity, b.init, cfg);
    ReplicaRun rr;
    rr.terminated = tr.terminated;
    for (const auto& s : tr.samples) rr.w.push_back(s.w);
    return rr;
  };
  return run_sweep(run, eps_list, replicas, grid, b.limit(grid), b.name);
}

SweepReport eps_sweep(const DiscreteBundle& b, const std::vector<double>& eps_list,
                      std::size_t replicas, std::uint64_t seed, const std::vector<double>& grid) {
  if (!b.limit) throw SpecError("sweep: bundle has no limit reference");
  auto run = [&](double eps, std::size_t e, std::uint32_t r) {
    SimConfig cfg;
    cfg.epsilon = eps;
    cfg.horizon = grid.back();
    cfg.seed = seed;
    cfg.replica = r;
    cfg.group = static_cast<std::uint16_t>(e);
    cfg.sample_grid = grid;
    DiscreteTrajectory tr = simulate_discrete_scaled(b.calcium, b.params, b.init, cfg);
    ReplicaRun rr;
    rr.terminated = tr.terminated;
    for (const auto& s : tr.samples) rr.w.push_back(static_cast<double>(s.w));
    return rr;
  };
  return run_sweep(run, eps_list, replicas, grid, b.limit(grid), b.name);
}

ContinuousBundle pa_bundle(const PAParams& pa, const ActivationSpec& act,
                           const PlasticityMapSpec& plasticity, double w0) {
  ContinuousBundle b;
  b.name = "pa_exact_affine";
  b.kernel = make_pa_kernel(pa);
  b.activation = act;
  b.plasticity = plasticity;
  b.init.z.assign(b.kernel.ell, 0.0);
  b.init.w = w0;
  KernelSpec k = b.kernel;
  b.limit = [k, act, plasticity, w0, lambda = pa.lambda](const std::vector<double>& grid) {
    PACoefficients c = pa_coeffs(k, act, lambda);
    return exact_limit_pa(c, plasticity, {act.nu, act.slope, lambda}, w0, grid).w;
  };
  return b;
}

ContinuousBundle pa_nofilter_bundle(const PAParams& pa, const ActivationSpec& act,
                                    const PlasticityMapSpec& plasticity, double w0) {
  ContinuousBundle b;
  b.name = "pa_nofilter_affine";
  b.kernel = make_pa_kernel(pa);
  b.activation = act;
  b.plasticity = plasticity;
  b.init.z.assign(b.kernel.ell, 0.0);
  b.init.w = w0;
  b.limit = [pa, act, plasticity, w0](const std::vector<double>& grid) {
    return exact_nofilter_affine(pa_nofilter_drive(pa, act), plasticity, w0, grid);
  };
  return b;
}

EnsembleStats limit_ensemble(const TailProvider& tails, const CalciumDriveSpec& calcium,
                             const DiscreteLimitParams& params, const DiscreteState& init,
                             std::size_t replicas, std::uint64_t seed, std::uint16_t group,
                             const std::vector<double>& grid, double* w_max,
                             std::vector<std::vector<double>>* paths_out) {
  std::vector<std::vector<double>> paths(replicas);
  std::vector<double> peaks(replicas, 0.0);
  parallel_for(replicas, [&](std::size_t r) {
    SimConfig cfg;
    cfg.horizon = grid.back();
    cfg.seed = seed;
    cfg.replica = static_cast<std::uint32_t>(r);
    cfg.group = group;
    cfg.sample_grid = grid;
    auto tr = simulate_limit_discrete(tails, calcium, params, init, cfg);
    if (tr.terminated.kind != Termination::Kind::completed)
      throw NumericError("discrete limit replica did not complete");
    for (const auto& s : tr.samples) {
      paths[r].push_back(static_cast<double>(s.w));
      peaks[r] = std::max(peaks[r], static_cast<double>(s.w));
    }
  });
  if (w_max) *w_max = *std::max_element(peaks.begin(), peaks.end());
  auto stats = ensemble_stats(paths, grid.size());
  if (paths_out) *paths_out = std::move(paths);
  return stats;
}

// --- regimes -------------------------------------------------------------------

const char* to_string(Regime r) {
  switch (r) {
    case Regime::explosive: return "explosive";
    case Regime::divergent: return "divergent";
    case Regime::bistable: return "bistable";
    case Regime::stable: return "stable";
    case Regime::undetermined: return "undetermined";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  for (Regime r : {Regime::explosive, Regime::divergent, Regime::bistable, Regime::stable,
                   Regime::undetermined})
    if (s == to_string(r)) return r;
  throw SpecError("unknown regime " + s);
}

const char* to_string(Fate f) {
  switch (f) {
    case Fate::explodes: return "explodes";
    case Fate::diverges: return "diverges";
    case Fate::converges: return "converges";
    case Fate::unresolved: return "unresolved";
  }
  return "?";
}

namespace {

// Positive zeros of F on (0, w_hi], by sign scan then bisection.
std::vector<double> positive_roots(const std::function<double(double)>& F, double w_hi) {
  std::vector<double> roots;
  const int n = 4000;
  double lo = 1e-9, prev_w = lo, prev_f = F(lo);
  for (int i = 1; i <= n; ++i) {
    double w = lo * std::pow(w_hi / lo, static_cast<double>(i) / n);
    double f = F(w);
    if (f == 0.0) {
      roots.push_back(w);
    } else if ((prev_f < 0.0 && f > 0.0) || (prev_f > 0.0 && f < 0.0)) {
      double a = prev_w, b = w, fa = prev_f;
      for (int it = 0; it < 200 && b - a > 1e-14 * b; ++it) {
        double m = 0.5 * (a + b), fm = F(m);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_w = w;
    prev_f = f;
  }
  return roots;
}

}  // namespace

RegimeResult classify_drive(const std::function<double(double)>& D, double mu,
                            std::optional<double> alpha, const std::vector<double>& w0_list,
                            double horizon, std::size_t grid_points) {
  if (w0_list.empty()) throw SpecError("classify: empty w0 list");
  if (alpha && !(*alpha > 0.0)) throw SpecError("classify: alpha must be > 0");
  RegimeResult res;
  auto F = [&](double w) { return (alpha ? D(w) / *alpha : D(w)) - mu * w; };
  double w_top = 1e3 * std::max(1.0, *std::max_element(w0_list.begin(), w0_list.end()));
  res.roots = positive_roots(F, w_top);
  const bool zero_eq = std::abs(F(0.0)) <= 1e-14;

  PlasticityMapSpec m;
  m.mu = mu;
  DriveOfW drive = [&](double w, double) { return std::array<double, 2>{D(std::max(w, 0.0)), 0.0}; };
  std::vector<double> grid = uniform_grid(horizon, grid_points);
  std::ostringstream diag;
  for (double w0 : w0_list) {
    LimitSolution s;
    if (alpha) {
      m.form = PlasticityForm::linear;
      m.alpha = *alpha;
      s = solve_filtered(drive, m, w0, grid);
    } else {
      m.form = PlasticityForm::instantaneous;
      s = solve_nofilter(drive, m, w0, grid);
    }
    Fate f = Fate::unresolved;
    double wT = s.w.back();
    double value = wT;
    if (s.blowup) {
      f = Fate::explodes;
      value = s.t_exp;
    } else {
      double top = res.roots.empty() ? 0.0 : res.roots.back();
      std::vector<double> eqs = res.roots;
      if (zero_eq) eqs.insert(eqs.begin(), 0.0);
      for (double e : eqs)
        if (std::abs(wT - e) <= 1e-3 * std::max(1.0, e)) f = Fate::converges;
      if (f == Fate::unresolved && wT > 10.0 * std::max(w0, top) && F(wT) > 0.0) f = Fate::diverges;
    }
    diag << "w0=" << w0 << ":" << to_string(f) << "(" << value << ") ";
    res.fates.push_back(f);
    res.limits.push_back(value);
    res.solutions.push_back(std::move(s));
  }

  auto all = [&](Fate f) {
    return std::all_of(res.fates.begin(), res.fates.end(), [f](Fate g) { return g == f; });
  };
  if (all(Fate::explodes)) {
    res.regime = Regime::explosive;
  } else if (all(Fate::diverges)) {
    res.regime = Regime::divergent;
  } else if (all(Fate::converges)) {
    double first = res.limits.front();
    bool common = std::all_of(res.limits.begin(), res.limits.end(), [&](double v) {
      return std::abs(v - first) <= 2e-3 * std::max(1.0, std::abs(first));
    });
    if (common) {
      res.regime = Regime::stable;
      // nearest equilibrium
      double best = 0.0, gap = kInf;
      std::vector<double> eqs = res.roots;
      if (zero_eq) eqs.insert(eqs.begin(), 0.0);
      for (double e : eqs)
        if (std::abs(first - e) < gap) {
          gap = std::abs(first - e);
          best = e;
        }
      res.w_eq = best;
    }
  } else {
    // explode-or-vanish split by an unstable root
    bool split = false;
    for (double r : res.roots) {
      bool ok = true, below = false, above = false;
      for (std::size_t i = 0; i < w0_list.size(); ++i) {
        if (w0_list[i] < r) {
          below = true;
          ok = ok && res.fates[i] == Fate::converges && std::abs(res.limits[i]) <= 1e-3;
        } else if (w0_list[i] > r) {
          above = true;
          ok = ok && res.fates[i] == Fate::explodes;
        } else {
          ok = false;
        }
      }
      if (ok && below && above && zero_eq) {
        split = true;
        res.w_eq = r;
        break;
      }
    }
    if (split) res.regime = Regime::bistable;
  }
  res.diagnostics = diag.str();
  return res;
}

RegimeResult classify_regime(const SimpleRegimeParams& p, const std::vector<double>& w0_list,
                             double horizon, std::size_t grid_points) {
  QuadraticDrive q = simple_model_drive(p.model, p.activation);
  return classify_drive([q](double w) { return q.eval(w); }, p.mu, p.alpha, w0_list, horizon,
                        grid_points);
}

std::map<Regime, std::pair<double, double>> regime_search(const SimpleRegimeParams& base,
                                                          const std::vector<double>& B1_grid,
                                                          const std::vector<double>& B2_grid,
                                                          const std::vector<double>& w0_list,
                                                          double horizon) {
  std::vector<std::pair<double, double>> pts;
  for (double b1 : B1_grid)
    for (double b2 : B2_grid) pts.push_back({b1, b2});
  std::vector<Regime> found(pts.size(), Regime::undetermined);
  parallel_for(pts.size(), [&](std::size_t i) {
    SimpleRegimeParams p = base;
    p.model.B1 = pts[i].first;
    p.model.B2 = pts[i].second;
    found[i] = classify_regime(p, w0_list, horizon).regime;
  });
  std::map<Regime, std::pair<double, double>> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (found[i] != Regime::undetermined && !out.count(found[i])) out[found[i]] = pts[i];
  return out;
}

ContinuousBundle simple_bundle(const SimpleRegimeParams& p, double w0) {
  if (p.alpha) throw SpecError("simple bundle uses the instantaneous form");
  ContinuousBundle b;
  b.name = "simple_model";
  b.kernel = make_simple_kernel(p.model);
  b.activation = p.activation;
  b.plasticity.form = PlasticityForm::instantaneous;
  b.plasticity.mu = p.mu;
  b.init.z.assign(1, 0.0);
  b.init.w = w0;
  QuadraticDrive q = simple_model_drive(p.model, p.activation);
  b.limit = [q, mu = p.mu, w0](const std::vector<double>& grid) {
    PlasticityMapSpec m;
    m.form = PlasticityForm::instantaneous;
    m.mu = mu;
    LimitSolution s = solve_nofilter(
        [q](double w, double) { return std::array<double, 2>{q.eval(w), 0.0}; }, m, w0, grid);
    std::vector<double> w = s.w;
    w.resize(grid.size(), kNaN);  // after explosion
    return w;
  };
  return b;
}

// --- Figure 2 --------------------------------------------------------------------

Figure2Result reproduce_figure2(const Figure2Config& cfg) {
  check_structure(cfg.params);
  if (cfg.params.C1 != 1 || cfg.params.C2 != 1) throw SpecError("figure 2 analytics need C1 = C2 = 1");
  Figure2Result out;
  out.grid = uniform_grid(cfg.horizon, cfg.grid_points);
  const auto& P = cfg.params;
  CalciumDriveSpec calcium = make_threshold_drive(cfg.theta_p, cfg.theta_d);
  DiscreteLimitParams lp{P.alpha, P.mu, P.B_p, P.B_d};
  DiscreteState init;
  init.w = cfg.w0;

  // Analytic-tail limit first; its range sizes the Monte Carlo tables.
  AnalyticTails ar(cq_model(P), calcium);
  double w_peak = 0.0;
  std::vector<std::vector<double>> ar_paths, mc_paths;
  out.limit_ar = limit_ensemble(ar, calcium, lp, init, cfg.replicas, cfg.seed, 1, out.grid, &w_peak, &ar_paths);
  std::int64_t w_hi = static_cast<std::int64_t>(std::ceil(1.5 * w_peak)) + 2 * cfg.mc_step;
  w_hi = (w_hi / cfg.mc_step + 1) * cfg.mc_step;

  InvariantConfig ic;
  ic.horizon = cfg.mc_horizon;
  ic.seed = cfg.seed;
  ic.group = 1000;
  std::vector<std::int64_t> wi;
  for (std::int64_t w = 0; w <= w_hi; w += cfg.mc_step) wi.push_back(w);

  // Pooled table from K independent pieces. Every limit ensemble below reuses
  // the w_AR replica streams: paired differences isolate the drive, and the
  // spread over the K pieces isolates table error.
  const std::size_t K = cfg.table_batches;
  if (K < 2) throw SpecError("figure 2: table_batches must be >= 2");
  if (1000 + K * wi.size() > 3000) throw SpecError("figure 2: too many table knots for the stream layout");
  InvariantConfig bc = ic;
  bc.horizon = cfg.mc_horizon / static_cast<double>(K);
  std::vector<DriveTable> pieces;
  for (std::size_t k = 0; k < K; ++k) {
    // the table spends one group per knot
    bc.group = static_cast<std::uint16_t>(1000 + k * wi.size());
    pieces.push_back(mc_discrete_drive_table(P, calcium, wi, bc));
  }
  out.discrete_table = pool_tables(pieces);
  out.limit_mc = limit_ensemble(TableTails(out.discrete_table), calcium, lp, init, cfg.replicas, cfg.seed, 1,
                                out.grid, nullptr, &mc_paths);
  std::vector<std::vector<double>> piece_means;
  for (const auto& t : pieces)
    piece_means.push_back(limit_ensemble(TableTails(t), calcium, lp, init, cfg.replicas, cfg.seed, 1, out.grid).mean);
  std::vector<std::vector<double>> diff(cfg.replicas);
  for (std::size_t r = 0; r < cfg.replicas; ++r)
    for (std::size_t i = 0; i < out.grid.size(); ++i) diff[r].push_back(mc_paths[r][i] - ar_paths[r][i]);
  auto paired = ensemble_stats(diff, out.grid.size());
  out.limit_gap_se.resize(out.grid.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    double m = 0.0, ss = 0.0;
    for (const auto& pm : piece_means) m += pm[i];
    m /= static_cast<double>(K);
    for (const auto& pm : piece_means) ss += (pm[i] - m) * (pm[i] - m);
    double table_se = std::sqrt(ss / static_cast<double>(K - 1) / static_cast<double>(K));
    out.limit_mc.se[i] = std::hypot(out.limit_mc.se[i], table_se);
    out.limit_gap_se[i] = std::hypot(paired.se[i], table_se);
  }

  DiscreteBundle db;
  db.name = "discrete_limit_ar";
  db.params = P;
  db.calcium = calcium;
  db.init = init;
  std::vector<double> ar_mean = out.limit_ar.mean;
  db.limit = [ar_mean](const std::vector<double>&) { return ar_mean; };
  out.discrete = eps_sweep(db, cfg.eps_list, cfg.replicas, cfg.seed, out.grid);

  if (cfg.continuous) {
    CalciumParams cp{P.lambda, P.gamma, static_cast<double>(P.C1), static_cast<double>(P.C2), calcium};
    ContinuousBundle cb;
    cb.name = "continuous_limit_mc";
    cb.kernel = make_calcium_kernel(cp);
    cb.activation = P.activation;
    cb.plasticity.form = PlasticityForm::decomposed;
    cb.plasticity.alpha = P.alpha;
    cb.plasticity.mu = P.mu;
    cb.plasticity.dep_p.scale = static_cast<double>(P.B_p);
    cb.plasticity.dep_d.scale = static_cast<double>(P.B_d);
    cb.plasticity.C_M = static_cast<double>(std::max(P.B_p, P.B_d));
    cb.init.z = {0.0};
    cb.init.w = static_cast<double>(cfg.w0);
    std::vector<double> wg;
    for (std::int64_t w : wi) wg.push_back(static_cast<double>(w));
    InvariantConfig cc = ic;
    cc.group = 3000;
    out.continuous_table = mc_drive_table(cb.kernel, cb.activation, cb.reset, wg, cc);
    out.continuous_limit = solve_limit_table(out.continuous_table, cb.plasticity,
                                             static_cast<double>(cfg.w0), out.grid);
    std::vector<double> lw = out.continuous_limit.w;
    cb.limit = [lw](const std::vector<double>&) { return lw; };
    out.continuous = eps_sweep(cb, cfg.eps_list, cfg.replicas, cfg.seed + 1, out.grid);
  }
  return out;
}

}  // namespace stdpavg
