#include "stdpavg/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stdpavg/errors.hpp"

namespace stdpavg {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw SpecError(what);
}

double table_eval(const CalciumDriveSpec::Table& t, double c) {
  if (t.c.empty()) return 0.0;
  if (c <= t.c.front()) return t.h.front();
  if (c >= t.c.back()) return t.h.back();
  auto it = std::upper_bound(t.c.begin(), t.c.end(), c);
  std::size_t k = static_cast<std::size_t>(it - t.c.begin());
  double c0 = t.c[k - 1], c1 = t.c[k];
  double s = (c - c0) / (c1 - c0);
  return t.h[k - 1] + s * (t.h[k] - t.h[k - 1]);
}

void check_table(const CalciumDriveSpec::Table& t) {
  require(t.c.size() == t.h.size(), "calcium table: knot/value size mismatch");
  require(!t.c.empty(), "calcium table: no knots");
  for (std::size_t i = 0; i < t.c.size(); ++i) {
    require(std::isfinite(t.c[i]) && finite_nonneg(t.h[i]), "calcium table: bad entry");
    if (i > 0) require(t.c[i] > t.c[i - 1], "calcium table: knots must increase");
  }
}

double table_lipschitz(const CalciumDriveSpec::Table& t) {
  double L = 0.0;
  for (std::size_t i = 1; i < t.c.size(); ++i)
    L = std::max(L, std::abs(t.h[i] - t.h[i - 1]) / (t.c[i] - t.c[i - 1]));
  return L;
}

}  // namespace

// --- calcium drives --------------------------------------------------------

double CalciumDriveSpec::eval(Branch a, double c) const {
  if (form == Form::threshold) return c >= theta[idx(a)] ? 1.0 : 0.0;
  return table_eval(table[idx(a)], c);
}

double CalciumDriveSpec::max_value(Branch a) const {
  if (form == Form::threshold) return std::isfinite(theta[idx(a)]) ? 1.0 : 0.0;
  const auto& h = table[idx(a)].h;
  return h.empty() ? 0.0 : *std::max_element(h.begin(), h.end());
}

CalciumDriveSpec make_threshold_drive(double theta_p, double theta_d) {
  require(theta_p >= 0.0 && theta_d >= 0.0, "calcium thresholds must be nonnegative");
  CalciumDriveSpec s;
  s.form = CalciumDriveSpec::Form::threshold;
  s.theta = {theta_p, theta_d};
  return s;
}

CalciumDriveSpec make_table_drive(CalciumDriveSpec::Table p, CalciumDriveSpec::Table d) {
  check_table(p);
  check_table(d);
  CalciumDriveSpec s;
  s.form = CalciumDriveSpec::Form::lipschitz_table;
  s.lipschitz = std::max(table_lipschitz(p), table_lipschitz(d));
  s.table = {std::move(p), std::move(d)};
  return s;
}

// --- curves and drive functions ---------------------------------------------

double StdpCurve::value(double u) const { return amplitude * std::exp(-rate * u); }
double StdpCurve::derivative(double u) const { return -rate * amplitude * std::exp(-rate * u); }

double DriveFn::eval(std::span<const double> z) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::affine: {
      double v = constant;
      for (std::size_t i = 0; i < coef.size(); ++i) v += coef[i] * z[i];
      return v;
    }
    case Kind::curve:
      return curve.value(z[coord]);
    case Kind::calcium:
      return calcium.eval(branch, z[coord]);
  }
  return 0.0;
}

bool DriveFn::is_constant() const {
  if (kind == Kind::zero) return true;
  if (kind == Kind::affine)
    return std::all_of(coef.begin(), coef.end(), [](double c) { return c == 0.0; });
  if (kind == Kind::curve) return curve.amplitude == 0.0 || curve.rate == 0.0;
  return false;
}

DriveFn zero_drive() { return DriveFn{}; }

DriveFn constant_drive(double c) {
  DriveFn f;
  f.kind = DriveFn::Kind::affine;
  f.constant = c;
  return f;
}

DriveFn coordinate_drive(std::size_t ell, std::size_t i, double scale, double offset) {
  DriveFn f;
  f.kind = DriveFn::Kind::affine;
  f.constant = offset;
  f.coef.assign(ell, 0.0);
  f.coef.at(i) = scale;
  return f;
}

DriveFn curve_drive(std::size_t coord, StdpCurve curve) {
  DriveFn f;
  f.kind = DriveFn::Kind::curve;
  f.coord = coord;
  f.curve = curve;
  return f;
}

DriveFn calcium_drive(std::size_t coord, Branch a, const CalciumDriveSpec& spec) {
  DriveFn f;
  f.kind = DriveFn::Kind::calcium;
  f.coord = coord;
  f.branch = a;
  f.calcium = spec;
  return f;
}

void JumpMap::apply(std::span<double> z) const {
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += offset[i] + gain[i] * z[i];
}

// --- plasticity ------------------------------------------------------------

double WeightDependence::operator()(double w) const {
  switch (kind) {
    case Kind::constant:
      return scale;
    case Kind::soft_upper:
      return scale * std::max(0.0, 1.0 - w / w_max);
    case Kind::soft_lower:
      return scale * std::clamp(w / w_max, 0.0, 1.0);
  }
  return scale;
}

double PlasticityMapSpec::rate(double omega_p, double omega_d, double w) const {
  return dep_p(w) * omega_p - dep_d(w) * omega_d - mu * w;
}

double PlasticityMapSpec::coefficient(Branch a, double w) const {
  return a == Branch::p ? dep_p(w) : dep_d(w);
}

// --- structure -------------------------------------------------------------

void check_structure(const ActivationSpec& a) {
  require(finite_nonneg(a.nu), "activation: nu must be finite and >= 0");
  require(finite_nonneg(a.slope), "activation: slope must be finite and >= 0");
}

void check_structure(const PlasticityMapSpec& m) {
  require(finite_nonneg(m.mu), "plasticity: mu must be >= 0");
  require(finite_nonneg(m.C_M), "plasticity: C_M must be >= 0");
  require(!std::isnan(m.weight_lo) && !std::isnan(m.weight_hi) && m.weight_lo <= m.weight_hi,
          "plasticity: K_W must be a nonempty interval");
  if (m.filtered())
    require(std::isfinite(m.alpha) && m.alpha > 0.0, "plasticity: filtered forms need alpha > 0");
  for (const auto* dep : {&m.dep_p, &m.dep_d}) {
    require(finite_nonneg(dep->scale), "plasticity: weight dependence scale must be >= 0");
    if (!dep->is_constant())
      require(dep->w_max > 0.0, "plasticity: soft bounds need w_max > 0");
  }
  if (m.form == PlasticityForm::linear)
    require(m.dep_p.is_constant() && m.dep_d.is_constant() && m.dep_p.scale == 1.0 &&
                m.dep_d.scale == 1.0,
            "plasticity: linear form is omega_p - omega_d - mu w");
}

void check_structure(const KernelSpec& k) {
  require(k.ell > 0, "kernel: ell must be positive");
  require(finite_nonneg(k.presyn_rate), "kernel: presynaptic rate must be >= 0");
  require(k.gamma.size() == k.ell && k.k0.size() == k.ell, "kernel: gamma/k0 size != ell");
  for (const JumpMap* j : {&k.k1, &k.k2}) {
    require(j->offset.size() == k.ell && j->gain.size() == k.ell, "kernel: jump map size != ell");
    for (std::size_t i = 0; i < k.ell; ++i) {
      require(finite_nonneg(j->offset[i]), "kernel: jump offsets must be >= 0");
      require(std::isfinite(j->gain[i]) && j->gain[i] >= -1.0,
              "kernel: jump gains below -1 leave the orthant");
    }
  }
  for (std::size_t i = 0; i < k.ell; ++i) {
    require(finite_nonneg(k.gamma[i]), "kernel: gamma must be >= 0");
    require(finite_nonneg(k.k0[i]), "kernel: k0 must be >= 0");
  }
  for (const auto& row : k.drive)
    for (const auto& f : row) {
      if (f.kind == DriveFn::Kind::affine)
        require(f.coef.empty() || f.coef.size() == k.ell, "kernel: affine drive size != ell");
      if (f.kind == DriveFn::Kind::curve || f.kind == DriveFn::Kind::calcium)
        require(f.coord < k.ell, "kernel: drive coordinate out of range");
      if (f.kind == DriveFn::Kind::curve)
        require(finite_nonneg(f.curve.amplitude) && finite_nonneg(f.curve.rate),
                "kernel: curve must be nonnegative");
      if (f.kind == DriveFn::Kind::curve && f.curve.amplitude > 0.0)
        require(f.curve.rate > 0.0, "kernel: curve must be integrable");
    }

  if (k.family == KernelFamily::PA) {
    require(k.ell == 4, "PA kernel: ell must be 4");
    for (Branch a : kBranches) {
      auto is_coord = [&](const DriveFn& f, std::size_t c) {
        if (f.kind != DriveFn::Kind::affine || f.constant != 0.0 || f.coef.size() != 4) return false;
        for (std::size_t i = 0; i < 4; ++i)
          if (f.coef[i] != (i == c ? 1.0 : 0.0)) return false;
        return true;
      };
      require(k.n(a, 0).kind == DriveFn::Kind::zero, "PA kernel: n_{a,0} must vanish");
      require(is_coord(k.n(a, 1), pa_coord(a, 2)), "PA kernel: n_{a,1}(z) must be z_{a,2}");
      require(is_coord(k.n(a, 2), pa_coord(a, 1)), "PA kernel: n_{a,2}(z) must be z_{a,1}");
    }
  }
  if (k.family == KernelFamily::PNS) {
    require(k.ell == 2, "PNS kernel: ell must be 2");
    require(k.gamma[0] == 0.0 && k.gamma[1] == 0.0 && k.k0[0] == 1.0 && k.k0[1] == 1.0,
            "PNS kernel: z are ages (gamma = 0, k0 = 1)");
  }
  if (k.family == KernelFamily::Calcium) require(k.ell == 1, "calcium kernel: ell must be 1");
}

void check_structure(const DiscreteParams& p) {
  require(finite_nonneg(p.lambda) && std::isfinite(p.gamma) && p.gamma > 0.0,
          "discrete: lambda >= 0 and gamma > 0 required");
  require(p.C1 >= 0 && p.C2 >= 0 && p.B_p >= 0 && p.B_d > 0, "discrete: bad jump sizes");
  require(finite_nonneg(p.mu) && std::isfinite(p.alpha) && p.alpha > 0.0,
          "discrete: mu >= 0 and alpha > 0 required");
  check_structure(p.activation);
  require(p.activation.nu == 0.0, "discrete: the token model needs nu = 0");
}

// --- validation ------------------------------------------------------------

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::exempt: return "exempt";
    case CheckStatus::not_applicable: return "n/a";
    case CheckStatus::certified: return "certified";
  }
  return "?";
}

bool ValidationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const AssumptionCheck& c) { return c.status == CheckStatus::fail; });
}

CheckStatus ValidationReport::status(const std::string& id) const {
  for (const auto& c : checks)
    if (c.id == id) return c.status;
  throw SpecError("unknown assumption id " + id);
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.id << '=' << to_string(c.status);
    if (!c.detail.empty()) os << " (" << c.detail << ')';
    os << '\n';
  }
  return os.str();
}

namespace {

// Sample points for the growth-bound spot checks: the origin, each axis at
// a few magnitudes, and the diagonal.
std::vector<std::vector<double>> sample_points(std::size_t ell) {
  const double mags[] = {0.25, 1.0, 3.0, 10.0, 100.0};
  std::vector<std::vector<double>> pts;
  pts.emplace_back(ell, 0.0);
  for (double m : mags) {
    pts.emplace_back(ell, m);
    for (std::size_t i = 0; i < ell; ++i) {
      std::vector<double> z(ell, 0.0);
      z[i] = m;
      pts.push_back(std::move(z));
    }
  }
  return pts;
}

std::vector<double> sample_weights(const PlasticityMapSpec& m) {
  std::vector<double> ws;
  double hi = std::isfinite(m.weight_hi) ? m.weight_hi : m.weight_lo + 1000.0;
  for (int i = 0; i <= 20; ++i) ws.push_back(m.weight_lo + (hi - m.weight_lo) * i / 20.0);
  return ws;
}

}  // namespace

ValidationReport validate(const KernelSpec& kernel, const ActivationSpec& activation,
                          const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                          const std::optional<SystemState>& init) {
  check_structure(kernel);
  check_structure(activation);
  check_structure(plasticity);
  require(finite_nonneg(reset.c_g), "reset: c_g must be >= 0");
  if (reset.form == ResetForm::custom)
    require(std::isfinite(reset.fraction), "reset: fraction must be finite");
  if (init) {
    require(init->z.size() == kernel.ell, "init: z size != ell");
    require(init->w >= plasticity.weight_lo && init->w <= plasticity.weight_hi, "init: w not in K_W");
  }

  ValidationReport r;
  auto add = [&](std::string id, CheckStatus s, std::string detail = {}) {
    r.checks.push_back({std::move(id), s, std::move(detail)});
  };
  const bool never_negative_x = plasticity.weight_lo >= 0.0 &&
                                (reset.form == ResetForm::none || reset.fraction <= 1.0);

  // A-a: beta nonnegative and continuous (by form); zero below -c_beta.
  if (activation.nu == 0.0)
    add("A-a", CheckStatus::pass);
  else if (never_negative_x)
    add("A-a", CheckStatus::pass, "nu > 0 but X never goes below 0");
  else
    add("A-a", CheckStatus::fail, "nu > 0 and X can become negative");

  // A-b: 0 <= g(x) <= max(c_g, x).
  if (reset.form == ResetForm::none)
    add("A-b", CheckStatus::pass);
  else if (reset.fraction >= 0.0 && reset.fraction <= 1.0)
    add("A-b", CheckStatus::pass);
  else
    add("A-b", CheckStatus::fail, "drop fraction outside [0, 1]");

  // A-c: well-posed weight ODE with K_W invariant.
  {
    bool lipschitz = plasticity.form == PlasticityForm::linear || plasticity.affine_weight() ||
                     plasticity.form == PlasticityForm::instantaneous;
    bool soft_lo = !plasticity.dep_p.is_constant() || !plasticity.dep_d.is_constant();
    if (plasticity.certify_domain)
      add("A-c", CheckStatus::certified, "K_W invariance certified by config");
    else if (plasticity.form == PlasticityForm::linear)
      add("A-c", CheckStatus::pass,
          "globally Lipschitz; lower boundary of K_W depends on the inputs and is not enforced");
    else if (lipschitz || soft_lo)
      add("A-c", CheckStatus::pass, "locally Lipschitz in w");
    else
      add("A-c", CheckStatus::fail);
  }

  add("B-a", CheckStatus::pass, "beta(x) <= C_beta (1 + |x|) with C_beta = max(nu, slope)");

  // B-b: gamma > 0, 0 <= k0 <= C_k, jumps bounded above by C_k.
  {
    bool jumps_ok = true;
    for (const JumpMap* j : {&kernel.k1, &kernel.k2})
      for (std::size_t i = 0; i < kernel.ell; ++i)
        if (j->gain[i] > 0.0 || j->offset[i] > kernel.C_k) jumps_ok = false;
    bool k0_ok = std::all_of(kernel.k0.begin(), kernel.k0.end(),
                             [&](double v) { return v <= kernel.C_k; });
    bool gamma_ok = std::all_of(kernel.gamma.begin(), kernel.gamma.end(),
                                [](double g) { return g > 0.0; });
    if (kernel.family == KernelFamily::PNS)
      add("B-b", CheckStatus::exempt, "ages have no decay; family-specific Lyapunov function");
    else if (!gamma_ok)
      add("B-b", CheckStatus::fail, "some gamma_i = 0");
    else if (!jumps_ok || !k0_ok)
      add("B-b", CheckStatus::fail, "k0 or jump maps exceed C_k");
    else
      add("B-b", CheckStatus::pass);
  }

  // B-c: 0 <= n_{a,j}(z) <= C_n (1 + |z|_1) on the sample grid.
  {
    bool ok = true;
    std::string why;
    for (const auto& z : sample_points(kernel.ell)) {
      double norm = 0.0;
      for (double v : z) norm += v;
      for (Branch a : kBranches)
        for (int j = 0; j < 3; ++j) {
          double v = kernel.n(a, j).eval(z);
          if (!(v >= 0.0) || v > kernel.C_n * (1.0 + norm) * (1.0 + 1e-12)) {
            ok = false;
            why = "drive outside [0, C_n (1 + |z|)] at a sample point";
          }
        }
    }
    add("B-c", ok ? CheckStatus::pass : CheckStatus::fail, why);
  }

  // B-d: M_a(omega, w) <= C_M (1 + omega).
  if (plasticity.form == PlasticityForm::instantaneous) {
    add("B-d", CheckStatus::not_applicable);
  } else {
    bool ok = true;
    for (double w : sample_weights(plasticity))
      for (Branch a : kBranches)
        if (plasticity.coefficient(a, w) > plasticity.C_M) ok = false;
    add("B-d", ok ? CheckStatus::pass : CheckStatus::fail);
  }

  // B*-d: instantaneous coefficients bounded by C_M.
  if (plasticity.form == PlasticityForm::instantaneous) {
    bool ok = true;
    for (double w : sample_weights(plasticity))
      for (Branch a : kBranches) {
        double c = plasticity.coefficient(a, w);
        if (!(c >= 0.0) || c > plasticity.C_M) ok = false;
      }
    add("B*-d", ok ? CheckStatus::pass : CheckStatus::fail);
  } else {
    add("B*-d", CheckStatus::not_applicable);
  }

  // L-1: fast and filter variables start at 0; w0 is the experiment's input.
  if (!init) {
    add("L-1", CheckStatus::not_applicable, "no initial condition given");
  } else {
    bool zero = init->x == 0.0 && init->omega_p == 0.0 && init->omega_d == 0.0 &&
                std::all_of(init->z.begin(), init->z.end(), [](double v) { return v == 0.0; });
    add("L-1", zero ? CheckStatus::pass : CheckStatus::fail, "w0 is not constrained");
  }
  add("L-2", reset.form == ResetForm::none ? CheckStatus::pass : CheckStatus::fail);
  add("L-3", plasticity.weight_lo == 0.0 ? CheckStatus::pass : CheckStatus::fail,
      "0 in K_W, K_W in [0, inf)");
  {
    bool lip = plasticity.form == PlasticityForm::linear ||
               (plasticity.form == PlasticityForm::decomposed && plasticity.affine_weight());
    bool ok = lip && r.status("A-c") != CheckStatus::fail && r.status("B-d") == CheckStatus::pass;
    if (plasticity.form == PlasticityForm::instantaneous)
      add("L-4", CheckStatus::not_applicable);
    else
      add("L-4", ok ? CheckStatus::pass : CheckStatus::fail,
          "L_M = " + std::to_string(plasticity.lipschitz()));
  }
  add("L-5", activation.slope > 0.0 ? CheckStatus::pass : CheckStatus::fail,
      "beta(x) = nu + slope x");
  return r;
}

// --- factories ---------------------------------------------------------------

namespace {

KernelSpec blank_kernel(std::size_t ell, double lambda) {
  KernelSpec k;
  k.ell = ell;
  k.presyn_rate = lambda;
  k.gamma.assign(ell, 1.0);
  k.k0.assign(ell, 0.0);
  k.k1 = JumpMap{std::vector<double>(ell, 0.0), std::vector<double>(ell, 0.0)};
  k.k2 = k.k1;
  return k;
}

}  // namespace

KernelSpec make_pa_kernel(const PAParams& p) {
  KernelSpec k = blank_kernel(4, p.lambda);
  bool offsets = false;
  for (Branch a : kBranches) {
    std::size_t a1 = pa_coord(a, 1), a2 = pa_coord(a, 2);
    k.gamma[a1] = p.gamma1[idx(a)];
    k.gamma[a2] = p.gamma2[idx(a)];
    k.k1.offset[a1] = p.B1[idx(a)];  // z_{a,1} counts presynaptic spikes
    k.k2.offset[a2] = p.B2[idx(a)];  // z_{a,2} counts postsynaptic spikes
    k.drive[idx(a)][0] = zero_drive();
    k.drive[idx(a)][1] = coordinate_drive(4, a2, 1.0, p.D1[idx(a)]);
    k.drive[idx(a)][2] = coordinate_drive(4, a1, 1.0, p.D2[idx(a)]);
    offsets = offsets || p.D1[idx(a)] != 0.0 || p.D2[idx(a)] != 0.0;
  }
  k.family = offsets ? KernelFamily::CustomContinuous : KernelFamily::PA;
  double bmax = std::max({p.B1[0], p.B1[1], p.B2[0], p.B2[1], 1.0});
  double dmax = std::max({p.D1[0], p.D1[1], p.D2[0], p.D2[1], 0.0});
  k.C_k = bmax;
  k.C_n = 1.0 + dmax;
  return k;
}

KernelSpec make_pns_kernel(const PNSParams& p) {
  KernelSpec k = blank_kernel(2, p.lambda);
  k.family = KernelFamily::PNS;
  k.gamma = {0.0, 0.0};
  k.k0 = {1.0, 1.0};
  k.k1.gain = {-1.0, 0.0};
  k.k2.gain = {0.0, -1.0};
  double amax = 0.0;
  for (Branch a : kBranches) {
    k.drive[idx(a)][0] = zero_drive();
    k.drive[idx(a)][1] = curve_drive(1, p.phi2[idx(a)]);
    k.drive[idx(a)][2] = curve_drive(0, p.phi1[idx(a)]);
    amax = std::max({amax, p.phi1[idx(a)].amplitude, p.phi2[idx(a)].amplitude});
  }
  k.C_k = 1.0;
  k.C_n = std::max(1.0, amax);
  return k;
}

KernelSpec make_calcium_kernel(const CalciumParams& p) {
  KernelSpec k = blank_kernel(1, p.lambda);
  k.family = KernelFamily::Calcium;
  k.gamma = {p.gamma};
  k.k1.offset = {p.C1};
  k.k2.offset = {p.C2};
  for (Branch a : kBranches) k.drive[idx(a)][0] = calcium_drive(0, a, p.drive);
  k.C_k = std::max({1.0, p.C1, p.C2});
  k.C_n = std::max({1.0, p.drive.max_value(Branch::p), p.drive.max_value(Branch::d)});
  return k;
}

KernelSpec make_simple_kernel(const SimpleModelParams& p) {
  KernelSpec k = blank_kernel(1, p.lambda);
  k.family = KernelFamily::CustomContinuous;
  k.gamma = {p.gamma};
  k.k1.offset = {p.B1};
  k.k2.offset = {p.B2};
  k.drive[0][2] = coordinate_drive(1, 0);
  k.C_k = std::max({1.0, p.B1, p.B2});
  k.C_n = 1.0;
  return k;
}

}  // namespace stdpavg
