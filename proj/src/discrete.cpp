#include "stdpavg/discrete.hpp"

#include <cmath>
#include <string>

#include "stdpavg/errors.hpp"
#include "stdpavg/expfun.hpp"
#include "stdpavg/rng.hpp"

namespace stdpavg {

namespace {

void apply(const DiscreteParams& p, DiscreteState& s, EventKind k) {
  switch (k) {
    case EventKind::presyn:
      s.x += s.w;
      s.c += p.C1;
      break;
    case EventKind::decay_token:
      s.x -= 1;
      break;
    case EventKind::postsyn:
      s.x -= 1;
      s.c += p.C2;
      break;
    case EventKind::calcium_decay:
      s.c -= 1;
      break;
    case EventKind::weight_leak:
      s.w -= 1;
      break;
    case EventKind::potentiation_jump:
      s.w += p.B_p;
      break;
    case EventKind::depression_jump:
      s.w -= p.B_d;
      break;
  }
}

constexpr EventKind kConstChannels[5] = {EventKind::presyn, EventKind::decay_token,
                                         EventKind::postsyn, EventKind::calcium_decay,
                                         EventKind::weight_leak};

}  // namespace

DiscreteState replay_discrete(const DiscreteParams& params, const DiscreteState& init,
                              const std::vector<Event>& events) {
  DiscreteState s = init;
  for (const Event& e : events) {
    apply(params, s, e.kind);
    s.t = e.t;
  }
  return s;
}

DiscreteTrajectory simulate_discrete_scaled(const CalciumDriveSpec& calcium,
                                            const DiscreteParams& p, const DiscreteState& init,
                                            const SimConfig& cfg) {
  check_structure(p);
  if (init.x < 0 || init.c < 0 || init.w < 0 || init.omega_p < 0.0 || init.omega_d < 0.0)
    throw SpecError("discrete init must be nonnegative");
  if (!(cfg.epsilon > 0.0)) throw SpecError("epsilon must be > 0");
  for (std::size_t i = 0; i < cfg.sample_grid.size(); ++i)
    if (cfg.sample_grid[i] < 0.0 || cfg.sample_grid[i] > cfg.horizon ||
        (i > 0 && !(cfg.sample_grid[i] > cfg.sample_grid[i - 1])))
      throw SpecError("bad sample grid");

  const double eps = cfg.epsilon;
  const double threshold = cfg.blowup_threshold ? *cfg.blowup_threshold
                                                : 1e6 * std::max<double>(1.0, static_cast<double>(init.w));
  PhiloxStream rng(StreamId{cfg.seed, cfg.replica, cfg.group, StreamRole::discrete_clocks});
  DiscreteTrajectory tr;
  tr.samples.reserve(cfg.sample_grid.size());
  DiscreteState s = init;
  s.t = 0.0;
  std::size_t gi = 0;
  double e0 = rng.exp1(), ep = rng.exp1(), ed = rng.exp1();

  for (;;) {
    const double xr = static_cast<double>(s.x);
    // beta(X) = slope X since nu = 0.
    double rates[5] = {p.lambda / eps, xr / eps, p.activation.slope * xr / eps,
                       p.gamma * static_cast<double>(s.c) / eps, p.mu * static_cast<double>(s.w)};
    double r0 = rates[0] + rates[1] + rates[2] + rates[3] + rates[4];
    FilterPath pp{s.omega_p, calcium.eval(Branch::p, static_cast<double>(s.c)), p.alpha};
    FilterPath pd{s.omega_d, calcium.eval(Branch::d, static_cast<double>(s.c)), p.alpha};
    const bool guard = s.w >= p.B_d;

    double to_end = cfg.horizon - s.t;
    double tau0 = r0 > 0.0 ? e0 / r0 : kInf;
    double tau = std::min(tau0, to_end);
    int which = tau0 <= to_end ? 0 : -1;  // 0 const, 1 p, 2 d, -1 end
    double tp = pp.integral(tau) >= ep ? pp.invert(ep) : kInf;
    if (tp < tau) {
      tau = tp;
      which = 1;
    }
    if (guard) {
      double td = pd.integral(tau) >= ed ? pd.invert(ed) : kInf;
      if (td < tau) {
        tau = td;
        which = 2;
      }
    }
    const double t_next = s.t + tau;
    while (gi < cfg.sample_grid.size() && cfg.sample_grid[gi] <= t_next) {
      DiscreteState q = s;
      double dt = cfg.sample_grid[gi] - s.t;
      q.t = cfg.sample_grid[gi];
      q.omega_p = pp.value(dt);
      q.omega_d = pd.value(dt);
      tr.samples.push_back(q);
      ++gi;
    }
    e0 -= r0 * tau;
    ep -= pp.integral(tau);
    if (guard) ed -= pd.integral(tau);
    s.omega_p = pp.value(tau);
    s.omega_d = pd.value(tau);
    s.t = t_next;
    if (which < 0) break;

    EventKind kind;
    if (which == 0) {
      double u = rng.uniform() * r0, acc = 0.0;
      int c = 0;
      for (; c < 4; ++c) {
        acc += rates[c];
        if (u < acc) break;
      }
      while (rates[c] == 0.0 && c > 0) --c;  // rounding at the top edge
      kind = kConstChannels[c];
      e0 = rng.exp1();
    } else if (which == 1) {
      kind = EventKind::potentiation_jump;
      ep = rng.exp1();
    } else {
      kind = EventKind::depression_jump;
      ed = rng.exp1();
    }
    apply(p, s, kind);
    if (s.x < 0 || s.c < 0 || s.w < 0) throw NumericError("discrete state went negative");
    if (cfg.log_events) tr.events.push_back({s.t, kind});
    ++tr.event_count;
    if (static_cast<double>(s.w) > threshold) {
      tr.terminated = {Termination::Kind::blowup, s.t};
      return tr;
    }
    if (tr.event_count >= cfg.max_events) {
      tr.terminated = {Termination::Kind::budget_exhausted, s.t};
      return tr;
    }
  }
  tr.terminated = {Termination::Kind::completed, s.t};
  return tr;
}

std::uint64_t run_discrete_fast(const DiscreteParams& p, std::int64_t w, double horizon,
                                std::uint64_t seed, double sample_dt,
                                const DiscreteSampleFn& sample, std::uint32_t replica,
                                std::uint16_t group) {
  check_structure(p);
  if (w < 0) throw SpecError("w must be >= 0");
  if (!(sample_dt > 0.0)) throw SpecError("sample_dt must be > 0");
  PhiloxStream rng(StreamId{seed, replica, group, StreamRole::invariant});
  std::int64_t x = 0, c = 0;
  double t = 0.0;
  std::uint64_t k = 0, events = 0;
  for (;;) {
    const double xr = static_cast<double>(x);
    double rates[4] = {p.lambda, xr, p.activation.slope * xr, p.gamma * static_cast<double>(c)};
    double r0 = rates[0] + rates[1] + rates[2] + rates[3];
    double tn = r0 > 0.0 ? t + rng.exp1() / r0 : kInf;
    double stop = std::min(tn, horizon);
    while (sample_dt * static_cast<double>(k) <= stop) {
      sample(sample_dt * static_cast<double>(k), x, c);
      ++k;
    }
    if (tn > horizon) break;
    t = tn;
    double u = rng.uniform() * r0, acc = 0.0;
    int ch = 0;
    for (; ch < 3; ++ch) {
      acc += rates[ch];
      if (u < acc) break;
    }
    while (rates[ch] == 0.0 && ch > 0) --ch;
    switch (ch) {
      case 0: x += w; c += p.C1; break;
      case 1: x -= 1; break;
      case 2: x -= 1; c += p.C2; break;
      default: c -= 1; break;
    }
    ++events;
  }
  return events;
}

}  // namespace stdpavg
