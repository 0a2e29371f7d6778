#include "stdpavg/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stdpavg/discrete.hpp"
#include "stdpavg/engine.hpp"
#include "stdpavg/errors.hpp"
#include "stdpavg/expfun.hpp"
#include "stdpavg/parallel.hpp"
#include "stdpavg/quadrature.hpp"

namespace stdpavg {

namespace {

const QuadOptions kTight{1e-12, 1e-13, 18};

}  // namespace

// --- pair rule -------------------------------------------------------------

PACoefficients pa_coeffs(const KernelSpec& k, const ActivationSpec& act, double lambda) {
  check_structure(k);
  if (k.family != KernelFamily::PA) throw SpecError("pa_coeffs needs a PA kernel");
  if (!(act.slope > 0.0)) throw SpecError("pa_coeffs needs slope > 0");
  PACoefficients c;
  for (Branch a : kBranches) {
    std::size_t i1 = pa_coord(a, 1), i2 = pa_coord(a, 2);
    double B1 = k.k1.offset[i1], B2 = k.k2.offset[i2];
    double g1 = k.gamma[i1], g2 = k.gamma[i2];
    if (!(g1 > 0.0) || !(g2 > 0.0)) throw SpecError("pa_coeffs: zero decay rate");
    c.lambda1[idx(a)] = act.slope * lambda * lambda * (B1 / g1 + B2 / g2);
    c.lambda2[idx(a)] = act.slope * lambda * B1 / (1.0 + g1);
  }
  return c;
}

AffineDrive pa_nofilter_drive(const PAParams& p, const ActivationSpec& act) {
  PAParams plain = p;
  plain.D1 = {0.0, 0.0};
  plain.D2 = {0.0, 0.0};
  PACoefficients c = pa_coeffs(make_pa_kernel(plain), act, p.lambda);
  AffineDrive d;
  for (Branch a : kBranches) {
    std::size_t i = idx(a);
    // lambda E[D1 + z_{a,2}] + E[beta(X) (D2 + z_{a,1})]
    d.intercept[i] = c.intercept(a, act.nu, act.slope, p.lambda) + p.lambda * p.D1[i] +
                     p.D2[i] * act.nu;
    d.gain[i] = c.gain(a) + p.D2[i] * act.slope * p.lambda;
  }
  return d;
}

QuadraticDrive simple_model_drive(const SimpleModelParams& p, const ActivationSpec& act) {
  const double l = p.lambda, g = p.gamma, b = act.slope, nu = act.nu;
  if (!(g > 0.0)) throw SpecError("simple model: gamma must be > 0");
  double z0 = (l * p.B1 + p.B2 * nu) / g;
  double z1 = p.B2 * b * l / g;
  // (1 + gamma) E[XZ] = lambda w E[Z] + lambda B1 E[X] + lambda w B1 + B2 E[beta(X) X]
  double xz1 = (l * z0 + l * l * p.B1 + l * p.B1 + p.B2 * nu * l) / (1.0 + g);
  double xz2 = (l * z1 + p.B2 * b * (l * l + 0.5 * l)) / (1.0 + g);
  return {nu * z0, nu * z1 + b * xz1, b * xz2};
}

// --- nearest-neighbour rule --------------------------------------------------

namespace {

void check_pns(double w, const PNSModel& m) {
  if (!(w >= 0.0) || !(m.lambda >= 0.0) || !(m.nu >= 0.0) || !(m.slope >= 0.0))
    throw SpecError("PNS analytics: w, lambda, nu, slope must be >= 0");
}

}  // namespace

double postsyn_count_laplace(double w, double xi, double a, const PNSModel& m) {
  check_pns(w, m);
  if (!(xi >= 0.0) || !(a >= 0.0)) throw SpecError("postsyn_count_laplace: xi, a must be >= 0");
  double q = -std::expm1(-xi);  // 1 - e^{-xi}
  double K = m.slope * w * q;
  double first = 0.0, second = 0.0;
  if (K > 0.0 && a > 0.0)
    first = integrate([&](double s) { return -std::expm1(-K * -std::expm1(-s)); }, 0.0, a, kTight);
  double c = K * -std::expm1(-a);
  if (c > 0.0)
    second = integrate_tail([&](double s) { return -std::expm1(-c * std::exp(-s)); }, 0.0, c, 1.0,
                            kTight);
  return std::exp(-(m.nu * a * q + m.lambda * (first + second)));
}

double pns_tail(double w, double a, const PNSModel& m) {
  check_pns(w, m);
  if (!(a >= 0.0)) throw SpecError("pns_tail: a must be >= 0");
  if (a == 0.0) return 1.0;
  double K = m.slope * w;
  double first = 0.0, second = 0.0;
  if (K > 0.0)
    first = integrate([&](double s) { return -std::expm1(-K * -std::expm1(-s)); }, 0.0, a, kTight);
  double c = K * -std::expm1(-a);
  if (c > 0.0)
    second = integrate_tail([&](double s) { return -std::expm1(-c * std::exp(-s)); }, 0.0, c, 1.0,
                            kTight);
  return std::exp(-(m.nu * a + m.lambda * (first + second)));
}

double pns_drive(double w, const StdpCurve& phi1, const StdpCurve& phi2, const PNSModel& m) {
  check_pns(w, m);
  for (const StdpCurve* c : {&phi1, &phi2})
    if (!(c->amplitude >= 0.0) || (c->amplitude > 0.0 && !(c->rate > 0.0)))
      throw SpecError("pns_drive: curves must be nonnegative and integrable");
  const double l = m.lambda;
  double pre = 0.0;
  if (phi1.amplitude > 0.0 && l > 0.0) {
    // E_lambda ~ Exp(lambda); E[S] = lambda.
    double e_phi = integrate_tail([&](double u) { return l * std::exp(-l * u) * phi1.value(u); },
                                  0.0, l * phi1.amplitude, l + phi1.rate, kTight);
    double e_phi_decay =
        integrate_tail([&](double u) { return l * std::exp(-(l + 1.0) * u) * phi1.value(u); }, 0.0,
                       l * phi1.amplitude, l + 1.0 + phi1.rate, kTight);
    pre = m.nu * e_phi + m.slope * w * (1.0 + l) * e_phi_decay;
  }
  double post = 0.0;
  if (phi2.amplitude > 0.0) {
    // E[Phi(Z2)] = -int Phi'(u) P(Z2 <= u) du
    double scale = phi2.amplitude * phi2.rate;
    post = integrate_tail([&](double u) { return -phi2.derivative(u) * (1.0 - pns_tail(w, u, m)); },
                          0.0, scale, phi2.rate, QuadOptions{1e-11, 1e-12, 25});
  }
  return pre + l * post;
}

// --- calcium -----------------------------------------------------------------

double calcium_laplace(double w, double a, double b, const CalciumModel& m) {
  if (!(w >= 0.0) || !(a >= 0.0) || !(b >= 0.0)) throw SpecError("calcium_laplace: negative input");
  if (!(m.gamma > 0.0) || !(m.lambda >= 0.0) || m.C1 < 0.0 || m.C2 < 0.0)
    throw SpecError("calcium_laplace: bad parameters");
  const double g = m.gamma, nu = m.activation.nu, beta = m.activation.slope;
  const double kC2 = b * m.C2, kC1 = b * m.C1;

  double base = 0.0;
  if (nu > 0.0 && kC2 > 0.0)
    base = integrate_tail([&](double s) { return -std::expm1(-kC2 * std::exp(-g * s)); }, 0.0, kC2,
                          g, kTight);

  // phi(v) at v = -s.
  auto phi = [&](double s) {
    double v = a * w * std::exp(-s) + kC1 * std::exp(-g * s);
    if (beta > 0.0 && w > 0.0 && kC2 > 0.0 && s > 0.0) {
      double inner = integrate(
          [&](double r) { return std::exp(-r) * -std::expm1(-kC2 * std::exp(g * (r - s))); }, 0.0,
          s, QuadOptions{1e-13, 1e-13, 20});
      v += beta * w * inner;
    }
    return v;
  };
  double shot = 0.0;
  if (m.lambda > 0.0) {
    double scale = a * w + kC1 + beta * w * kC2 * (1.0 + 1.0 / std::abs(g - 1.0 + 1e-3));
    double rate = std::min(1.0, g);
    shot = integrate_tail([&](double s) { return -std::expm1(-phi(s)); }, 0.0, scale, rate,
                          QuadOptions{1e-11, 1e-12, 25});
  }
  return std::exp(-(nu * base + m.lambda * shot));
}

// --- discrete calcium ----------------------------------------------------------

CQModel cq_model(const DiscreteParams& p) {
  return CQModel{static_cast<int>(p.C1), static_cast<int>(p.C2), p.gamma, p.lambda, p.activation.slope};
}

namespace {

void check_cq(double u, std::int64_t w, const CQModel& m) {
  if (!(u >= 0.0 && u <= 1.0)) throw SpecError("cq_pgf: u must be in [0, 1]");
  if (w < 0) throw SpecError("cq_pgf: w must be >= 0");
  if (!(m.gamma > 0.0) || !(m.lambda >= 0.0) || !(m.beta >= 0.0) || m.C1 < 0 || m.C2 < 0)
    throw SpecError("cq_pgf: bad parameters");
}

// (e^{-gk s} - e^{-(beta+1) s}) / (beta + 1 - gk), series near the pole.
double pole_ratio(double gk, double beta, double s) {
  double delta = beta + 1.0 - gk;
  if (std::abs(delta) < 1e-6) {
    double ds = delta * s;
    return std::exp(-gk * s) * s * (1.0 - ds / 2.0 + ds * ds / 6.0);
  }
  return std::exp(-gk * s) * -std::expm1(-delta * s) / delta;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double cq_scale(std::int64_t w, const CQModel& m) {
  return m.lambda * (m.C1 + static_cast<double>(w) * std::pow(2.0, m.C2) * std::max(1.0, m.beta));
}
double cq_rate(const CQModel& m) { return std::min(m.gamma, m.beta + 1.0); }

// One token's postsynaptic factor p(s) for C2 = 1.
double unit_p(double s, const CQModel& m) { return m.beta * pole_ratio(m.gamma, m.beta, s); }

}  // namespace

double cq_pgf_general(double u, std::int64_t w, const CQModel& m) {
  check_cq(u, w, m);
  if (u == 1.0 || m.lambda == 0.0) return 1.0;
  const double wr = static_cast<double>(w);
  auto one_minus_delta = [&](double s) {
    double pre = (u - 1.0) * std::exp(-m.gamma * s);
    double log_delta = pre > -1.0 ? m.C1 * std::log1p(pre) : (m.C1 > 0 ? -kInf : 0.0);
    if (w > 0) {
      double sum = 0.0, um = 1.0;
      for (int k = 1; k <= m.C2; ++k) {
        um *= (u - 1.0);
        sum += um * m.beta * binom(m.C2, k) * pole_ratio(m.gamma * k, m.beta, s);
      }
      log_delta += wr * std::log1p(sum);
    }
    return -std::expm1(log_delta);
  };
  double I = integrate_tail(one_minus_delta, 0.0, cq_scale(w, m), cq_rate(m), kTight);
  return std::exp(-m.lambda * I);
}

double cq_pgf_unit(double u, std::int64_t w, const CQModel& m) {
  check_cq(u, w, m);
  if (m.C1 != 1 || m.C2 != 1) throw SpecError("cq_pgf_unit needs C1 = C2 = 1");
  if (u == 1.0 || m.lambda == 0.0) return 1.0;
  const double wr = static_cast<double>(w);
  auto one_minus_delta = [&](double s) {
    // 1 - A B^w with A = 1 + (u-1) e, B = 1 + (u-1) p, in log form so the
    // tail keeps its relative accuracy.
    double e = std::exp(-m.gamma * s);
    double p = unit_p(s, m);
    double la = e < 1.0 || u > 0.0 ? std::log1p((u - 1.0) * e) : -kInf;
    double lb = w > 0 ? wr * std::log1p((u - 1.0) * p) : 0.0;
    return -std::expm1(la + lb);
  };
  double I = integrate_tail(one_minus_delta, 0.0, cq_scale(w, m), cq_rate(m), kTight);
  return std::exp(-m.lambda * I);
}

double cq_pgf(double u, std::int64_t w, const CQModel& m) {
  double g = cq_pgf_general(u, w, m);
  if (m.C1 == 1 && m.C2 == 1) {
    double g1 = cq_pgf_unit(u, w, m);
    if (std::abs(g - g1) > 1e-9 * std::max(std::abs(g), 1e-300))
      throw NumericError("cq_pgf: general and C1 = C2 = 1 paths disagree");
  }
  return g;
}

double cq_tail(std::int64_t w, int n, const CQModel& m) {
  check_cq(0.0, w, m);
  if (m.C1 != 1 || m.C2 != 1) throw SpecError("cq_tail needs C1 = C2 = 1");
  if (n < 0 || n > 2) throw SpecError("cq_tail: n must be 0, 1 or 2");
  if (n == 0) return 1.0;
  double g0 = cq_pgf_unit(0.0, w, m);
  if (n == 1) return 1.0 - g0;
  const double wr = static_cast<double>(w);
  auto dlog = [&](double s) {
    double e = std::exp(-m.gamma * s);
    double p = unit_p(s, m);
    double v = e * std::pow(1.0 - p, wr);
    if (w > 0) v += wr * p * (1.0 - e) * std::pow(1.0 - p, wr - 1.0);
    return v;
  };
  double I = integrate_tail(dlog, 0.0, cq_scale(w, m), cq_rate(m), kTight);
  double g1 = m.lambda * I * g0;
  return 1.0 - g0 - g1;
}

// --- Monte Carlo -------------------------------------------------------------

const FunctionalEstimate& InvariantEstimate::operator[](const std::string& name) const {
  for (const auto& v : values)
    if (v.name == name) return v;
  throw SpecError("no functional named " + name);
}

namespace {

// Post-burn-in samples split into equal batches.
class BatchMeans {
 public:
  BatchMeans(std::size_t nfun, std::size_t total, double burn_frac, std::size_t batches)
      : nfun_(nfun), batches_(batches) {
    burn_ = static_cast<std::size_t>(std::ceil(burn_frac * static_cast<double>(total)));
    std::size_t usable = total > burn_ ? total - burn_ : 0;
    per_batch_ = usable / batches;
    if (per_batch_ < 2) throw SpecError("mc_invariant: horizon too short for the batch count");
    sums_.assign(batches * nfun, 0.0);
    sq_.assign(nfun, 0.0);
    tot_.assign(nfun, 0.0);
  }
  void add(const double* v) {
    if (count_ >= burn_) {
      std::size_t b = (count_ - burn_) / per_batch_;
      if (b < batches_) {
        for (std::size_t f = 0; f < nfun_; ++f) {
          sums_[b * nfun_ + f] += v[f];
          sq_[f] += v[f] * v[f];
          tot_[f] += v[f];
        }
        ++used_;
      }
    }
    ++count_;
  }
  std::size_t used() const { return used_; }
  std::size_t burn() const { return burn_; }
  std::vector<double> batch_means(std::size_t f) const {
    std::vector<double> m(batches_);
    for (std::size_t b = 0; b < batches_; ++b) m[b] = sums_[b * nfun_ + f] / per_batch_;
    return m;
  }
  double sample_var(std::size_t f) const {
    double n = static_cast<double>(used_);
    double mean = tot_[f] / n;
    return std::max(0.0, (sq_[f] - n * mean * mean) / (n - 1.0));
  }
  std::size_t per_batch() const { return per_batch_; }

 private:
  std::size_t nfun_, batches_, burn_ = 0, per_batch_ = 0, count_ = 0, used_ = 0;
  std::vector<double> sums_, sq_, tot_;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}
double var_of(const std::vector<double>& v) {
  double m = mean_of(v), s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

FunctionalEstimate from_batches(const std::string& name, const std::vector<double>& bm,
                                double sample_var, double threshold) {
  FunctionalEstimate e;
  e.name = name;
  e.mean = mean_of(bm);
  double vb = var_of(bm);
  e.se = std::sqrt(vb / static_cast<double>(bm.size()));
  e.ess = e.se > 0.0 ? sample_var / (e.se * e.se) : static_cast<double>(bm.size());
  if (bm.size() >= 4 && vb > 0.0) {
    std::vector<double> merged;
    for (std::size_t i = 0; i + 1 < bm.size(); i += 2) merged.push_back(0.5 * (bm[i] + bm[i + 1]));
    e.mixing_ratio = 2.0 * var_of(merged) / vb;
    e.mixing_warning = e.mixing_ratio > threshold;
  }
  return e;
}

std::size_t sample_count(const InvariantConfig& cfg) {
  if (!(cfg.sample_dt > 0.0) || !(cfg.horizon > 0.0)) throw SpecError("mc_invariant: bad horizon");
  if (cfg.batches < 2) throw SpecError("mc_invariant: need at least 2 batches");
  return static_cast<std::size_t>(std::floor(cfg.horizon / cfg.sample_dt)) + 1;
}

template <class RunOne>
InvariantEstimate estimate(std::size_t nfun, const std::vector<std::string>& names,
                           const InvariantConfig& cfg, RunOne run_one) {
  const std::size_t total = sample_count(cfg);
  InvariantEstimate out;
  out.burn_in_fraction = cfg.burn_in;
  if (cfg.replicas <= 1) {
    BatchMeans bm(nfun, total, cfg.burn_in, cfg.batches);
    run_one(0u, bm);
    out.samples = bm.used();
    for (std::size_t f = 0; f < nfun; ++f)
      out.values.push_back(from_batches(names[f], bm.batch_means(f), bm.sample_var(f),
                                        cfg.mixing_threshold));
  } else {
    // One batch per replica.
    std::vector<std::vector<double>> means(cfg.replicas), vars(cfg.replicas);
    std::vector<std::size_t> used(cfg.replicas);
    parallel_for(cfg.replicas, [&](std::size_t r) {
      BatchMeans bm(nfun, total, cfg.burn_in, 1);
      run_one(static_cast<std::uint32_t>(r), bm);
      used[r] = bm.used();
      for (std::size_t f = 0; f < nfun; ++f) {
        means[r].push_back(bm.batch_means(f)[0]);
        vars[r].push_back(bm.sample_var(f));
      }
    });
    for (std::size_t r = 0; r < cfg.replicas; ++r) out.samples += used[r];
    for (std::size_t f = 0; f < nfun; ++f) {
      std::vector<double> bmv;
      double sv = 0.0;
      for (std::size_t r = 0; r < cfg.replicas; ++r) {
        bmv.push_back(means[r][f]);
        sv += vars[r][f] / static_cast<double>(cfg.replicas);
      }
      out.values.push_back(from_batches(names[f], bmv, sv, cfg.mixing_threshold));
    }
  }
  for (const auto& v : out.values) out.mixing_warning = out.mixing_warning || v.mixing_warning;
  return out;
}

}  // namespace

InvariantEstimate mc_invariant(const KernelSpec& kernel, const ActivationSpec& activation,
                               const ResetSpec& reset, double w,
                               const std::vector<Functional>& functionals,
                               const InvariantConfig& cfg) {
  if (functionals.empty()) throw SpecError("mc_invariant: no functionals");
  std::vector<std::string> names;
  for (const auto& f : functionals) names.push_back(f.name);
  const std::size_t nf = functionals.size();
  return estimate(nf, names, cfg, [&](std::uint32_t replica, BatchMeans& bm) {
    FastConfig fc;
    fc.sample_dt = cfg.sample_dt;
    fc.replica = replica;
    fc.group = cfg.group;
    std::vector<double> vals(nf);
    run_fast_fixed_w(kernel, activation, reset, w, cfg.horizon, cfg.seed, fc,
                     [&](double, double x, std::span<const double> z) {
                       for (std::size_t f = 0; f < nf; ++f) vals[f] = functionals[f].f(x, z);
                       bm.add(vals.data());
                     });
  });
}

InvariantEstimate mc_invariant_discrete(const DiscreteParams& params, std::int64_t w,
                                        const std::vector<DiscreteFunctional>& functionals,
                                        const InvariantConfig& cfg) {
  if (functionals.empty()) throw SpecError("mc_invariant_discrete: no functionals");
  std::vector<std::string> names;
  for (const auto& f : functionals) names.push_back(f.name);
  const std::size_t nf = functionals.size();
  return estimate(nf, names, cfg, [&](std::uint32_t replica, BatchMeans& bm) {
    std::vector<double> vals(nf);
    run_discrete_fast(params, w, cfg.horizon, cfg.seed, cfg.sample_dt,
                      [&](double, std::int64_t x, std::int64_t c) {
                        for (std::size_t f = 0; f < nf; ++f) vals[f] = functionals[f].f(x, c);
                        bm.add(vals.data());
                      },
                      replica, cfg.group);
  });
}

std::vector<Functional> drive_functionals(const KernelSpec& kernel, const ActivationSpec& act) {
  std::vector<Functional> out;
  for (Branch a : kBranches) {
    out.push_back({a == Branch::p ? "drive_p" : "drive_d",
                   [&kernel, act, a](double x, std::span<const double> z) {
                     return kernel.n(a, 0).eval(z) + kernel.presyn_rate * kernel.n(a, 1).eval(z) +
                            act.rate(x) * kernel.n(a, 2).eval(z);
                   }});
  }
  return out;
}

Functional named_functional(const std::string& name, const KernelSpec& kernel,
                            const ActivationSpec& act) {
  if (name == "mean_x") return {name, [](double x, std::span<const double>) { return x; }};
  if (name == "drive_p") return drive_functionals(kernel, act)[0];
  if (name == "drive_d") return drive_functionals(kernel, act)[1];
  auto coord = [&](const std::string& prefix) -> std::size_t {
    std::size_t i = std::stoul(name.substr(prefix.size()));
    if (i < 1 || i > kernel.ell) throw SpecError("functional " + name + ": coordinate out of range");
    return i - 1;
  };
  try {
    if (name.rfind("mean_xz", 0) == 0) {
      std::size_t i = coord("mean_xz");
      return {name, [i](double x, std::span<const double> z) { return x * z[i]; }};
    }
    if (name.rfind("mean_z", 0) == 0) {
      std::size_t i = coord("mean_z");
      return {name, [i](double, std::span<const double> z) { return z[i]; }};
    }
  } catch (const std::invalid_argument&) {
  }
  throw SpecError("unknown functional " + name);
}

// --- drive tables --------------------------------------------------------------

DriveTable pa_drive_table(const PACoefficients& c, const std::vector<double>& grid, double nu,
                          double slope, double lambda) {
  DriveTable t;
  for (double w : grid) {
    t.w.push_back(w);
    t.drive_p.push_back(c.drive(Branch::p, w, nu, slope, lambda));
    t.drive_d.push_back(c.drive(Branch::d, w, nu, slope, lambda));
    t.se_p.push_back(0.0);
    t.se_d.push_back(0.0);
  }
  t.check();
  return t;
}

DriveTable pns_drive_table(const std::vector<double>& grid, const PNSParams& curves,
                           const PNSModel& m) {
  DriveTable t;
  t.w = grid;
  t.drive_p.resize(grid.size());
  t.drive_d.resize(grid.size());
  t.se_p.assign(grid.size(), 0.0);
  t.se_d.assign(grid.size(), 0.0);
  parallel_for(grid.size(), [&](std::size_t i) {
    t.drive_p[i] = pns_drive(grid[i], curves.phi1[0], curves.phi2[0], m);
    t.drive_d[i] = pns_drive(grid[i], curves.phi1[1], curves.phi2[1], m);
  });
  t.check();
  return t;
}

DriveTable mc_drive_table(const KernelSpec& kernel, const ActivationSpec& act,
                          const ResetSpec& reset, const std::vector<double>& grid,
                          const InvariantConfig& cfg) {
  DriveTable t;
  t.w = grid;
  t.drive_p.resize(grid.size());
  t.drive_d.resize(grid.size());
  t.se_p.resize(grid.size());
  t.se_d.resize(grid.size());
  auto fns = drive_functionals(kernel, act);
  parallel_for(grid.size(), [&](std::size_t i) {
    InvariantConfig c = cfg;
    c.group = static_cast<std::uint16_t>(cfg.group + i);
    InvariantEstimate e = mc_invariant(kernel, act, reset, grid[i], fns, c);
    t.drive_p[i] = e.values[0].mean;
    t.drive_d[i] = e.values[1].mean;
    t.se_p[i] = e.values[0].se;
    t.se_d[i] = e.values[1].se;
  });
  t.check();
  return t;
}

DriveTable mc_discrete_drive_table(const DiscreteParams& params, const CalciumDriveSpec& calcium,
                                   const std::vector<std::int64_t>& grid,
                                   const InvariantConfig& cfg) {
  DriveTable t;
  const std::size_t n = grid.size();
  t.w.resize(n);
  t.drive_p.resize(n);
  t.drive_d.resize(n);
  t.se_p.resize(n);
  t.se_d.resize(n);
  std::vector<DiscreteFunctional> fns = {
      {"h_p", [&](std::int64_t, std::int64_t c) { return calcium.eval(Branch::p, static_cast<double>(c)); }},
      {"h_d", [&](std::int64_t, std::int64_t c) { return calcium.eval(Branch::d, static_cast<double>(c)); }}};
  parallel_for(n, [&](std::size_t i) {
    InvariantConfig c = cfg;
    c.group = static_cast<std::uint16_t>(cfg.group + i);
    InvariantEstimate e = mc_invariant_discrete(params, grid[i], fns, c);
    t.w[i] = static_cast<double>(grid[i]);
    t.drive_p[i] = e.values[0].mean;
    t.drive_d[i] = e.values[1].mean;
    t.se_p[i] = e.values[0].se;
    t.se_d[i] = e.values[1].se;
  });
  t.check();
  return t;
}

}  // namespace stdpavg
