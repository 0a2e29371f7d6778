#include "stdpavg/limit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "stdpavg/errors.hpp"
#include "stdpavg/expfun.hpp"
#include "stdpavg/rng.hpp"

namespace stdpavg {

BlowupReport detect_blowup(const LimitSolution& s) {
  if (!s.blowup) return {};
  return {true, s.t_exp, s.bracket_lo, s.bracket_hi};
}

namespace {

OdeOptions ode_options(const LimitOptions& opt, double w0) {
  OdeOptions o = opt.ode;
  o.watch = 2;
  o.blowup_threshold = opt.blowup_threshold.value_or(1e6 * std::max(1.0, std::abs(w0)));
  return o;
}

LimitSolution from_ode(const OdeResult& r) {
  LimitSolution s;
  s.t = r.t;
  for (const auto& y : r.y) {
    s.omega_p.push_back(y[0]);
    s.omega_d.push_back(y[1]);
    s.w.push_back(y[2]);
  }
  s.blowup = r.blowup;
  s.t_exp = r.t_exp;
  s.bracket_lo = r.bracket_lo;
  s.bracket_hi = r.bracket_hi;
  s.steps = r.steps;
  s.max_error = r.max_error;
  return s;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty() || grid.front() != 0.0) throw SpecError("limit grid must start at 0");
}

}  // namespace

LimitSolution solve_filtered(const DriveOfW& drive, const PlasticityMapSpec& m, double w0,
                             const std::vector<double>& grid, const LimitOptions& opt) {
  check_structure(m);
  if (!m.filtered()) throw SpecError("solve_filtered needs a filtered plasticity form");
  if (!(m.alpha > 0.0)) throw SpecError("solve_filtered: alpha must be > 0");
  check_grid(grid);
  const double alpha = m.alpha;
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    auto d = drive(y[2], t);
    dy[0] = -alpha * y[0] + d[0];
    dy[1] = -alpha * y[1] + d[1];
    dy[2] = m.rate(y[0], y[1], y[2]);
  };
  OdeResult r = integrate_ode(rhs, {opt.omega0[0], opt.omega0[1], w0}, grid, ode_options(opt, w0));
  return from_ode(r);
}

LimitSolution exact_limit_pa(const PACoefficients& c, const PlasticityMapSpec& m,
                             const PALimitParams& p, double w0, const std::vector<double>& grid,
                             std::array<double, 2> omega0) {
  if (!m.filtered() || !m.affine_weight()) throw SpecError("exact_limit_pa needs constant weight factors");
  check_grid(grid);
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A(0, 0) = -m.alpha;
  A(1, 1) = -m.alpha;
  A(0, 2) = c.gain(Branch::p);
  A(1, 2) = c.gain(Branch::d);
  A(2, 0) = m.dep_p.scale;
  A(2, 1) = -m.dep_d.scale;
  A(2, 2) = -m.mu;
  A(0, 3) = c.intercept(Branch::p, p.nu, p.slope, p.lambda);
  A(1, 3) = c.intercept(Branch::d, p.nu, p.slope, p.lambda);
  Eigen::Vector4d y0(omega0[0], omega0[1], w0, 1.0);
  LimitSolution s;
  for (double t : grid) {
    Eigen::Matrix4d E = (A * t).exp();
    Eigen::Vector4d y = E * y0;
    s.t.push_back(t);
    s.omega_p.push_back(y(0));
    s.omega_d.push_back(y(1));
    s.w.push_back(y(2));
  }
  return s;
}

namespace {

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// sup |a - b| relative to scale (absolute when scale is 0).
double sup_gap(const std::vector<double>& a, const std::vector<double>& b, double scale) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num = std::max(num, std::abs(a[i] - b[i]));
  return scale > 0.0 ? num / scale : num;
}

}  // namespace

LimitSolution solve_limit_pa(const PACoefficients& c, const PlasticityMapSpec& m,
                             const PALimitParams& p, double w0, const std::vector<double>& grid,
                             const LimitOptions& opt) {
  if (!(p.slope > 0.0) || !(p.lambda > 0.0)) throw SpecError("solve_limit_pa: slope and lambda must be > 0");
  DriveOfW drive = [&](double w, double) {
    return std::array<double, 2>{c.drive(Branch::p, w, p.nu, p.slope, p.lambda),
                                 c.drive(Branch::d, w, p.nu, p.slope, p.lambda)};
  };
  LimitSolution s = solve_filtered(drive, m, w0, grid, opt);
  if (m.affine_weight() && !s.blowup) {
    LimitSolution e = exact_limit_pa(c, m, p, w0, grid, opt.omega0);
    // One scale for all three components so a vanishing filter is not
    // measured against itself.
    double scale = std::max({sup_abs(e.w), sup_abs(e.omega_p), sup_abs(e.omega_d)});
    double gap = std::max({sup_gap(s.w, e.w, scale), sup_gap(s.omega_p, e.omega_p, scale),
                           sup_gap(s.omega_d, e.omega_d, scale)});
    s.exact_gap = gap;
    if (gap > 1e-8)
      throw NumericError("solve_limit_pa: integrator and exact solution differ by " +
                         std::to_string(gap));
  }
  return s;
}

LimitSolution solve_limit_table(const DriveTable& table, const PlasticityMapSpec& m, double w0,
                                const std::vector<double>& grid, const LimitOptions& opt) {
  table.check();
  if (!table.covers(w0)) throw RangeError("w0 outside drive table", 0.0);
  DriveOfW drive = [&](double w, double t) { return table.eval(w, t); };
  return solve_filtered(drive, m, w0, grid, opt);
}

LimitSolution solve_nofilter(const DriveOfW& drive, const PlasticityMapSpec& m, double w0,
                             const std::vector<double>& grid, const LimitOptions& opt) {
  check_structure(m);
  if (m.filtered()) throw SpecError("solve_nofilter needs the instantaneous form");
  check_grid(grid);
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    auto d = drive(y[2], t);
    dy[0] = 0.0;
    dy[1] = 0.0;
    dy[2] = m.coefficient(Branch::p, y[2]) * d[0] - m.coefficient(Branch::d, y[2]) * d[1] - m.mu * y[2];
  };
  OdeResult r = integrate_ode(rhs, {0.0, 0.0, w0}, grid, ode_options(opt, w0));
  return from_ode(r);
}

std::vector<double> exact_nofilter_affine(const AffineDrive& d, const PlasticityMapSpec& m, double w0,
                                          const std::vector<double>& grid) {
  if (m.filtered() || !m.affine_weight()) throw SpecError("exact_nofilter_affine needs constant Mbar");
  // w' = a + b w
  double a = m.dep_p.scale * d.intercept[0] - m.dep_d.scale * d.intercept[1];
  double b = m.dep_p.scale * d.gain[0] - m.dep_d.scale * d.gain[1] - m.mu;
  std::vector<double> out;
  for (double t : grid) {
    // (e^{bt} - 1) / b, stable at b = 0
    double g = b == 0.0 ? t : std::expm1(b * t) / b;
    out.push_back(w0 * std::exp(b * t) + a * g);
  }
  return out;
}

// --- discrete limit ------------------------------------------------------------

namespace {

int threshold_index(double theta) {
  if (std::isinf(theta)) return -1;
  if (theta <= 0.0) return 0;
  return static_cast<int>(std::ceil(theta));
}

}  // namespace

AnalyticTails::AnalyticTails(const CQModel& model, const CalciumDriveSpec& calcium) : model_(model) {
  if (calcium.form != CalciumDriveSpec::Form::threshold)
    throw SpecError("analytic tails need threshold drives");
  for (Branch a : kBranches) {
    n_[idx(a)] = threshold_index(calcium.theta[idx(a)]);
    if (n_[idx(a)] > 2) throw SpecError("analytic tails cover thresholds up to 2");
  }
}

std::array<double, 2> AnalyticTails::expected_drive(std::int64_t w, double) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(w);
    if (it != cache_.end()) return it->second;
  }
  std::array<double, 2> v{};
  for (std::size_t a = 0; a < 2; ++a) v[a] = n_[a] < 0 ? 0.0 : cq_tail(w, n_[a], model_);
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(w, v);
  return v;
}

TableTails::TableTails(DriveTable table) : table_(std::move(table)) { table_.check(); }

std::array<double, 2> TableTails::expected_drive(std::int64_t w, double t) const {
  return table_.eval(static_cast<double>(w), t);
}

DiscreteTrajectory simulate_limit_discrete(const TailProvider& tails, const CalciumDriveSpec& calcium,
                                           const DiscreteLimitParams& p, const DiscreteState& init,
                                           const SimConfig& cfg) {
  if (!(p.alpha > 0.0)) throw SpecError("discrete limit: alpha must be > 0");
  if (!(p.mu >= 0.0) || p.B_p < 0 || p.B_d < 0) throw SpecError("discrete limit: bad parameters");
  if (init.w < 0 || init.omega_p < 0.0 || init.omega_d < 0.0)
    throw SpecError("discrete limit: initial state must be nonnegative");
  if (!(cfg.horizon > 0.0)) throw SpecError("discrete limit: horizon must be > 0");
  for (std::size_t i = 0; i < cfg.sample_grid.size(); ++i)
    if (cfg.sample_grid[i] < 0.0 || cfg.sample_grid[i] > cfg.horizon ||
        (i > 0 && !(cfg.sample_grid[i] > cfg.sample_grid[i - 1])))
      throw SpecError("discrete limit: bad sample grid");

  PhiloxStream rng({cfg.seed, cfg.replica, cfg.group, StreamRole::limit_jumps});
  const double threshold =
      cfg.blowup_threshold.value_or(1e6 * std::max(1.0, static_cast<double>(init.w)));
  const std::array<double, 2> bound{
      std::max(init.omega_p, calcium.max_value(Branch::p) / p.alpha),
      std::max(init.omega_d, calcium.max_value(Branch::d) / p.alpha)};

  DiscreteTrajectory out;
  double t = 0.0, op = init.omega_p, od = init.omega_d;
  std::int64_t w = init.w;
  std::size_t next_sample = 0;

  while (true) {
    auto h = tails.expected_drive(w, t);
    FilterPath pp{op, h[0], p.alpha}, pd{od, h[1], p.alpha};
    double wr = static_cast<double>(w);
    double tl = p.mu * wr > 0.0 ? rng.exp1() / (p.mu * wr) : kInf;
    double tp = pp.invert(rng.exp1());
    double td = w >= p.B_d ? pd.invert(rng.exp1()) : kInf;
    double tau = std::min({tl, tp, td});
    double t_next = t + tau;

    while (next_sample < cfg.sample_grid.size() && cfg.sample_grid[next_sample] < t_next) {
      double s = cfg.sample_grid[next_sample] - t;
      out.samples.push_back({cfg.sample_grid[next_sample], 0, 0, pp.value(s), pd.value(s), w});
      ++next_sample;
    }
    if (t_next > cfg.horizon) break;

    op = pp.value(tau);
    od = pd.value(tau);
    if (op > bound[0] * (1.0 + 1e-12) || od > bound[1] * (1.0 + 1e-12))
      throw NumericError("discrete limit: filter bound violated");
    t = t_next;
    EventKind kind;
    if (tau == tp) {
      w += p.B_p;
      kind = EventKind::potentiation_jump;
    } else if (tau == td) {
      w -= p.B_d;
      kind = EventKind::depression_jump;
    } else {
      w -= 1;
      kind = EventKind::weight_leak;
    }
    ++out.event_count;
    if (cfg.log_events) out.events.push_back({t, kind});
    if (static_cast<double>(w) > threshold) {
      out.terminated = {Termination::Kind::blowup, t};
      return out;
    }
    if (out.event_count >= cfg.max_events) {
      out.terminated = {Termination::Kind::budget_exhausted, t};
      return out;
    }
  }
  out.terminated = {Termination::Kind::completed, cfg.horizon};
  return out;
}

}  // namespace stdpavg
