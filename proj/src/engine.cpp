#include "stdpavg/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stdpavg/errors.hpp"
#include "stdpavg/expfun.hpp"

namespace stdpavg {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::presyn: return "presyn";
    case EventKind::postsyn: return "postsyn";
    case EventKind::decay_token: return "decay-token";
    case EventKind::calcium_decay: return "calcium-decay";
    case EventKind::weight_leak: return "weight-leak";
    case EventKind::potentiation_jump: return "potentiation-jump";
    case EventKind::depression_jump: return "depression-jump";
  }
  return "?";
}

std::vector<double> uniform_grid(double horizon, std::size_t points) {
  if (points < 2) return {horizon};
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = horizon * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = horizon;
  return g;
}

double z_flow(double z, double gamma, double k0, double tau, double eps) {
  if (gamma == 0.0) return z + k0 * tau / eps;
  double zbar = k0 / gamma;
  return zbar + (z - zbar) * std::exp(-gamma * tau / eps);
}

ThinningDecision thinning_next_postsyn(double x, const ActivationSpec& act, double eps,
                                       PhiloxStream& rng, double decay) {
  double bound = act.rate(x);
  if (!(bound > 0.0)) return {kInf, false};
  double tau = eps * rng.exp1() / bound;
  double xn = decay == 0.0 ? x : x * std::exp(-decay * tau / eps);
  bool accept = rng.uniform() * bound < act.rate(xn);
  return {tau, accept};
}

std::optional<double> next_postsyn(double x, const ActivationSpec& act, double eps, double window,
                                   PhiloxStream& rng, double decay) {
  double elapsed = 0.0;
  for (;;) {
    double bound = act.rate(x);
    if (!(bound > 0.0)) return std::nullopt;
    double tau = eps * rng.exp1() / bound;
    elapsed += tau;
    if (elapsed > window) return std::nullopt;
    if (decay != 0.0) x *= std::exp(-decay * tau / eps);
    if (rng.uniform() * bound < act.rate(x)) return elapsed;
  }
}

namespace {

enum class Mode { filtered, instantaneous, fast };

// Ω and W between events, given Z at the start of the interval.
class SlowFlow {
 public:
  SlowFlow(const KernelSpec& k, const PlasticityMapSpec* m, Mode mode, double eps, bool numeric)
      : k_(k), m_(m), mode_(mode), eps_(eps), buf_(k.ell) {
    piecewise_ = true;
    for (Branch a : kBranches) {
      const DriveFn& f = k.n(a, 0);
      bool threshold = f.kind == DriveFn::Kind::calcium &&
                       f.calcium.form == CalciumDriveSpec::Form::threshold;
      if (!f.is_constant() && !threshold) piecewise_ = false;
      if (!f.is_constant()) inputs_zero_ = false;
      if (f.kind == DriveFn::Kind::affine && f.constant != 0.0) inputs_zero_ = false;
    }
    closed_ = piecewise_ && m_ && m_->affine_weight() && !numeric;
    numeric_forced_ = numeric;
  }

  void advance(SystemState& s, double tau) {
    if (mode_ == Mode::fast || tau <= 0.0) return;
    if (inputs_zero_ && !numeric_forced_ && (mode_ == Mode::instantaneous || closed_)) {
      apply_piece(s, tau, 0.0, 0.0);
      return;
    }
    if (!piecewise_) {
      rk_piece(s, 0.0, tau, nullptr);
      return;
    }
    // Split at threshold crossings; inputs constant on each piece.
    double cuts[4];
    int nc = 0;
    for (Branch a : kBranches) {
      const DriveFn& f = k_.n(a, 0);
      if (f.kind != DriveFn::Kind::calcium) continue;
      double c = crossing(s.z[f.coord], k_.gamma[f.coord], k_.k0[f.coord], f.calcium.theta[idx(a)]);
      if (c > 0.0 && c < tau) cuts[nc++] = c;
    }
    std::sort(cuts, cuts + nc);
    double start = 0.0;
    for (int i = 0; i <= nc; ++i) {
      double end = i < nc ? cuts[i] : tau;
      if (end > start) {
        double mid = 0.5 * (start + end);
        double u[2];
        inputs_at(s.z, mid, u);
        if (closed_ || (mode_ == Mode::instantaneous && m_->affine_weight() && !numeric_forced_))
          apply_piece(s, end - start, u[0], u[1]);
        else
          rk_piece(s, start, end, u);
      }
      start = end;
    }
  }

 private:
  // Elapsed time at which coordinate z crosses theta, or -1.
  double crossing(double z, double gamma, double k0, double theta) const {
    if (gamma == 0.0) {
      if (k0 > 0.0 && z < theta) return (theta - z) * eps_ / k0;
      return -1.0;
    }
    double zbar = k0 / gamma;
    if (z >= theta && zbar < theta) return (eps_ / gamma) * std::log((z - zbar) / (theta - zbar));
    if (z < theta && zbar > theta) return (eps_ / gamma) * std::log((zbar - z) / (zbar - theta));
    return -1.0;
  }

  void inputs_at(const std::vector<double>& z0, double r, double u[2]) {
    for (std::size_t i = 0; i < k_.ell; ++i) buf_[i] = z_flow(z0[i], k_.gamma[i], k_.k0[i], r, eps_);
    u[0] = k_.n(Branch::p, 0).eval(buf_);
    u[1] = k_.n(Branch::d, 0).eval(buf_);
  }

  // Closed form with constant inputs and constant weight factors.
  void apply_piece(SystemState& s, double tau, double up, double ud) {
    const double mu = m_->mu;
    if (mode_ == Mode::instantaneous) {
      double net = m_->dep_p.scale * up - m_->dep_d.scale * ud;
      if (up == 0.0 && ud == 0.0) net = 0.0;
      s.w = s.w * std::exp(-mu * tau) + net * expm1_ratio(mu, tau);
      return;
    }
    const double al = m_->alpha;
    double e1 = exp_conv(al, mu, tau);
    double e2 = exp_conv2(al, mu, tau);
    double kp = m_->dep_p.scale, kd = m_->dep_d.scale;
    double w = s.w * std::exp(-mu * tau) + kp * (s.omega_p * e1 + up * e2) -
               kd * (s.omega_d * e1 + ud * e2);
    double decay = std::exp(-al * tau), gr = expm1_ratio(al, tau);
    s.omega_p = s.omega_p * decay + up * gr;
    s.omega_d = s.omega_d * decay + ud * gr;
    s.w = w;
  }

  void rhs(const std::vector<double>& z0, double r, const double y[3], const double* u,
           double dy[3]) {
    double in[2];
    if (u) {
      in[0] = u[0];
      in[1] = u[1];
    } else {
      inputs_at(z0, r, in);
    }
    if (mode_ == Mode::instantaneous) {
      dy[0] = dy[1] = 0.0;
      dy[2] = m_->coefficient(Branch::p, y[2]) * in[0] - m_->coefficient(Branch::d, y[2]) * in[1] -
              m_->mu * y[2];
    } else {
      dy[0] = -m_->alpha * y[0] + in[0];
      dy[1] = -m_->alpha * y[1] + in[1];
      dy[2] = m_->rate(y[0], y[1], y[2]);
    }
  }

  void rk_run(const std::vector<double>& z0, double r0, double r1, const double* u, int n,
              double y[3]) {
    double h = (r1 - r0) / n;
    for (int step = 0; step < n; ++step) {
      double r = r0 + step * h;
      double k1[3], k2[3], k3[3], k4[3], t[3];
      rhs(z0, r, y, u, k1);
      for (int i = 0; i < 3; ++i) t[i] = y[i] + 0.5 * h * k1[i];
      rhs(z0, r + 0.5 * h, t, u, k2);
      for (int i = 0; i < 3; ++i) t[i] = y[i] + 0.5 * h * k2[i];
      rhs(z0, r + 0.5 * h, t, u, k3);
      for (int i = 0; i < 3; ++i) t[i] = y[i] + h * k3[i];
      rhs(z0, r + h, t, u, k4);
      for (int i = 0; i < 3; ++i) y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
  }

  // Classical RK4 with h_sub = min(gap, eps/10), halved until two successive
  // refinements agree to 1e-9 relative.
  void rk_piece(SystemState& s, double r0, double r1, const double* u) {
    const std::vector<double> z0 = s.z;
    double h_sub = eps_ / 10.0;
    int n = std::max(1, static_cast<int>(std::ceil((r1 - r0) / h_sub)));
    double y0[3] = {s.omega_p, s.omega_d, s.w};
    double coarse[3] = {y0[0], y0[1], y0[2]};
    rk_run(z0, r0, r1, u, n, coarse);
    for (int iter = 0; iter < 20; ++iter) {
      double fine[3] = {y0[0], y0[1], y0[2]};
      rk_run(z0, r0, r1, u, 2 * n, fine);
      bool ok = true;
      for (int i = 0; i < 3; ++i) {
        double scale = std::max(std::abs(fine[i]), std::abs(coarse[i]));
        if (std::abs(fine[i] - coarse[i]) > 1e-9 * scale + 1e-300) ok = false;
      }
      std::copy(fine, fine + 3, coarse);
      n *= 2;
      if (ok) break;
    }
    s.omega_p = coarse[0];
    s.omega_d = coarse[1];
    s.w = coarse[2];
  }

  const KernelSpec& k_;
  const PlasticityMapSpec* m_;
  Mode mode_;
  double eps_;
  std::vector<double> buf_;
  bool piecewise_ = true;
  bool inputs_zero_ = true;
  bool closed_ = false;
  bool numeric_forced_ = false;
};

struct EngineSetup {
  const KernelSpec& kernel;
  const ActivationSpec& act;
  const ResetSpec& reset;
  const PlasticityMapSpec* plast;
  Mode mode;
  double eps;
  double horizon;
  std::uint64_t max_events;
  double blowup;
  bool log_events;
  const std::vector<double>* forced;
  bool force_numeric;
  StreamId stream;
};

struct RunResult {
  Termination term;
  std::uint64_t events = 0;
  std::vector<Event> log;
};

struct GridSink {
  const std::vector<double>& grid;
  std::vector<SystemState>& out;
  std::size_t i = 0;
  double next() const { return i < grid.size() ? grid[i] : kInf; }
  void record(const SystemState& s) {
    out.push_back(s);
    ++i;
  }
};

struct PeriodicSink {
  double dt;
  const FastSampleFn& fn;
  std::uint64_t k = 0;
  double next() const { return dt * static_cast<double>(k); }
  void record(const SystemState& s) {
    fn(s.t, s.x, s.z);
    ++k;
  }
};

void check_finite(const SystemState& s) {
  bool ok = std::isfinite(s.x) && std::isfinite(s.w) && std::isfinite(s.omega_p) &&
            std::isfinite(s.omega_d);
  for (double v : s.z) ok = ok && std::isfinite(v);
  if (!ok) throw NumericError("non-finite state at t = " + std::to_string(s.t));
}

template <class Sink>
RunResult run_engine(const EngineSetup& e, SystemState s, Sink& sink) {
  const KernelSpec& k = e.kernel;
  SlowFlow slow(k, e.plast, e.mode, e.eps, e.force_numeric);
  StreamId pre_id = e.stream, thin_id = e.stream;
  pre_id.role = StreamRole::presyn;
  thin_id.role = StreamRole::thinning;
  PhiloxStream pre_rng(pre_id), thin_rng(thin_id);
  RunResult res;
  const double lam_rate = k.presyn_rate / e.eps;
  std::size_t forced_i = 0;
  auto draw_pre = [&](double now) {
    if (e.forced) return forced_i < e.forced->size() ? (*e.forced)[forced_i++] : kInf;
    return lam_rate > 0.0 ? now + pre_rng.exp1() / lam_rate : kInf;
  };

  auto flow = [&](SystemState& st, double target) {
    double tau = target - st.t;
    if (tau > 0.0) {
      slow.advance(st, tau);
      st.x *= std::exp(-tau / e.eps);
      for (std::size_t i = 0; i < k.ell; ++i) st.z[i] = z_flow(st.z[i], k.gamma[i], k.k0[i], tau, e.eps);
    }
    st.t = target;
  };

  SystemState anchor = s;
  auto crossed = [&](const SystemState& st) { return e.mode != Mode::fast && st.w > e.blowup; };
  // W continuous along the flow: bisect for the crossing time.
  auto locate = [&](double t_hi) {
    double lo = anchor.t, hi = t_hi;
    SystemState probe = anchor;
    for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      double mid = 0.5 * (lo + hi);
      probe = anchor;
      flow(probe, mid);
      if (probe.w > e.blowup) hi = mid; else lo = mid;
    }
    return hi;
  };

  std::vector<double> zpre(k.ell);
  double next_pre = draw_pre(s.t);
  for (;;) {
    double pre_or_end = std::min(next_pre, e.horizon);
    double window = pre_or_end - s.t;
    auto post = next_postsyn(s.x, e.act, e.eps, window, thin_rng);
    double t_ev = post ? s.t + *post : pre_or_end;
    if (post && t_ev > pre_or_end) t_ev = pre_or_end;
    bool is_post = post.has_value();
    bool is_pre = !is_post && next_pre <= e.horizon;

    while (sink.next() <= t_ev) {
      anchor = s;
      flow(s, sink.next());
      if (crossed(s)) {
        res.term = {Termination::Kind::blowup, locate(s.t)};
        return res;
      }
      sink.record(s);
    }
    anchor = s;
    flow(s, t_ev);
    check_finite(s);
    if (crossed(s)) {
      res.term = {Termination::Kind::blowup, locate(s.t)};
      return res;
    }
    if (!is_post && !is_pre) break;

    if (e.log_events) res.log.push_back({s.t, is_pre ? EventKind::presyn : EventKind::postsyn});
    ++res.events;
    const int j = is_pre ? 1 : 2;
    const double w_minus = s.w;
    if (e.mode != Mode::fast) {
      std::copy(s.z.begin(), s.z.end(), zpre.begin());
      double np = k.n(Branch::p, j).eval(zpre), nd = k.n(Branch::d, j).eval(zpre);
      if (e.mode == Mode::filtered) {
        s.omega_p += e.eps * np;
        s.omega_d += e.eps * nd;
      } else {
        s.w += e.eps * (e.plast->coefficient(Branch::p, s.w) * np -
                        e.plast->coefficient(Branch::d, s.w) * nd);
      }
    }
    if (is_pre) {
      s.x += w_minus;
      k.k1.apply(s.z);
      next_pre = draw_pre(s.t);
    } else {
      s.x -= e.reset.drop(s.x);
      k.k2.apply(s.z);
    }
    if (crossed(s)) {
      res.term = {Termination::Kind::blowup, s.t};
      return res;
    }
    if (res.events >= e.max_events) {
      res.term = {Termination::Kind::budget_exhausted, s.t};
      return res;
    }
  }
  res.term = {Termination::Kind::completed, s.t};
  return res;
}

double default_blowup(const SimConfig& cfg, double w0) {
  return cfg.blowup_threshold ? *cfg.blowup_threshold : 1e6 * std::max(1.0, std::abs(w0));
}

void check_config(const SimConfig& cfg) {
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) throw SpecError("epsilon must be > 0");
  if (!(cfg.horizon >= 0.0) || !std::isfinite(cfg.horizon)) throw SpecError("horizon must be >= 0");
  if (cfg.max_events == 0) throw SpecError("max_events must be > 0");
  for (std::size_t i = 0; i < cfg.sample_grid.size(); ++i) {
    double t = cfg.sample_grid[i];
    if (t < 0.0 || t > cfg.horizon) throw SpecError("sample grid outside [0, horizon]");
    if (i > 0 && !(t > cfg.sample_grid[i - 1])) throw SpecError("sample grid must increase");
  }
}

Trajectory run_scaled(const KernelSpec& kernel, const ActivationSpec& activation,
                      const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                      const SystemState& init, const SimConfig& cfg, Mode mode) {
  check_config(cfg);
  check_structure(kernel);
  check_structure(activation);
  check_structure(plasticity);
  if (init.z.size() != kernel.ell) throw SpecError("init: z size != ell");
  if (init.w < plasticity.weight_lo || init.w > plasticity.weight_hi)
    throw SpecError("init: w outside K_W");
  StreamId id{cfg.seed, cfg.replica, cfg.group, StreamRole::presyn};
  EngineSetup e{kernel, activation, reset, &plasticity, mode, cfg.epsilon, cfg.horizon,
                cfg.max_events, default_blowup(cfg, init.w), cfg.log_events,
                cfg.forced_presyn ? &*cfg.forced_presyn : nullptr, cfg.force_numeric_flow, id};
  Trajectory tr;
  tr.samples.reserve(cfg.sample_grid.size());
  GridSink sink{cfg.sample_grid, tr.samples};
  SystemState s = init;
  s.t = 0.0;
  RunResult r = run_engine(e, s, sink);
  tr.terminated = r.term;
  tr.event_count = r.events;
  tr.events = std::move(r.log);
  return tr;
}

}  // namespace

Trajectory simulate_scaled(const KernelSpec& kernel, const ActivationSpec& activation,
                           const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                           const SystemState& init, const SimConfig& cfg) {
  if (plasticity.form == PlasticityForm::instantaneous)
    return simulate_nofilter_scaled(kernel, activation, reset, plasticity, init, cfg);
  return run_scaled(kernel, activation, reset, plasticity, init, cfg, Mode::filtered);
}

Trajectory simulate_nofilter_scaled(const KernelSpec& kernel, const ActivationSpec& activation,
                                    const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                                    const SystemState& init, const SimConfig& cfg) {
  if (plasticity.form != PlasticityForm::instantaneous)
    throw SpecError("simulate_nofilter_scaled needs the instantaneous form");
  return run_scaled(kernel, activation, reset, plasticity, init, cfg, Mode::instantaneous);
}

namespace {

template <class Sink>
RunResult run_fast(const KernelSpec& kernel, const ActivationSpec& activation,
                   const ResetSpec& reset, double w, double horizon, std::uint64_t seed,
                   const FastConfig& cfg, Sink& sink) {
  check_structure(kernel);
  check_structure(activation);
  if (!(horizon >= 0.0)) throw SpecError("horizon must be >= 0");
  if (!(cfg.sample_dt > 0.0)) throw SpecError("sample_dt must be > 0");
  StreamId id{seed, cfg.replica, cfg.group, StreamRole::presyn};
  EngineSetup e{kernel, activation, reset, nullptr, Mode::fast, 1.0, horizon, cfg.max_events,
                kInf, cfg.log_events, nullptr, false, id};
  SystemState s;
  s.x = cfg.x0;
  s.z = cfg.z0.empty() ? std::vector<double>(kernel.ell, 0.0) : cfg.z0;
  if (s.z.size() != kernel.ell) throw SpecError("fast: z0 size != ell");
  s.w = w;
  return run_engine(e, s, sink);
}

}  // namespace

Trajectory simulate_fast_fixed_w(const KernelSpec& kernel, const ActivationSpec& activation,
                                 const ResetSpec& reset, double w, double horizon,
                                 std::uint64_t seed, const FastConfig& cfg) {
  std::size_t n = static_cast<std::size_t>(std::floor(horizon / cfg.sample_dt)) + 1;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = cfg.sample_dt * static_cast<double>(i);
  Trajectory tr;
  tr.samples.reserve(n);
  GridSink sink{grid, tr.samples};
  RunResult r = run_fast(kernel, activation, reset, w, horizon, seed, cfg, sink);
  tr.terminated = r.term;
  tr.event_count = r.events;
  tr.events = std::move(r.log);
  return tr;
}

std::uint64_t run_fast_fixed_w(const KernelSpec& kernel, const ActivationSpec& activation,
                               const ResetSpec& reset, double w, double horizon,
                               std::uint64_t seed, const FastConfig& cfg,
                               const FastSampleFn& sample) {
  PeriodicSink sink{cfg.sample_dt, sample};
  RunResult r = run_fast(kernel, activation, reset, w, horizon, seed, cfg, sink);
  if (r.term.kind == Termination::Kind::budget_exhausted)
    throw BudgetError("fast process: event budget exhausted");
  return r.events;
}

}  // namespace stdpavg
