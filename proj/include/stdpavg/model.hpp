#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stdpavg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Branch : std::size_t { p = 0, d = 1 };
inline constexpr std::array<Branch, 2> kBranches{Branch::p, Branch::d};
inline constexpr std::size_t idx(Branch b) { return static_cast<std::size_t>(b); }

// beta(x) = nu + slope * max(x, 0)
struct ActivationSpec {
  double nu = 0.0;
  double slope = 1.0;

  double rate(double x) const { return nu + slope * (x > 0.0 ? x : 0.0); }
  // Under the linear positive-part form c_beta is 0 and beta(x) <= C_beta (1 + |x|).
  double c_beta() const { return 0.0; }
  double C_beta() const { return nu > slope ? nu : slope; }
};

enum class ResetForm { none, custom };

// custom: g(x) = fraction * max(x, 0), fraction in [0, 1].
struct ResetSpec {
  ResetForm form = ResetForm::none;
  double fraction = 0.0;
  double c_g = 0.0;

  double drop(double x) const {
    if (form == ResetForm::none) return 0.0;
    return fraction * (x > 0.0 ? x : 0.0);
  }
};

struct CalciumDriveSpec {
  enum class Form { threshold, lipschitz_table };
  struct Table {
    std::vector<double> c;  // knots, strictly increasing
    std::vector<double> h;  // values, constant extension outside the knots
  };

  Form form = Form::threshold;
  std::array<double, 2> theta{kInf, kInf};
  std::array<Table, 2> table{};
  double lipschitz = 0.0;

  double eval(Branch a, double c) const;
  double max_value(Branch a) const;
};

CalciumDriveSpec make_threshold_drive(double theta_p, double theta_d);
CalciumDriveSpec make_table_drive(CalciumDriveSpec::Table p, CalciumDriveSpec::Table d);

// Phi(u) = amplitude * exp(-rate * u), u >= 0.
struct StdpCurve {
  double amplitude = 0.0;
  double rate = 1.0;
  double value(double u) const;
  double derivative(double u) const;
};

// One of the drive functions n_{a,j}: Z-space -> [0, inf).
struct DriveFn {
  enum class Kind { zero, affine, curve, calcium };
  Kind kind = Kind::zero;
  double constant = 0.0;      // affine
  std::vector<double> coef;   // affine, length ell (empty means all zero)
  std::size_t coord = 0;      // curve and calcium
  StdpCurve curve;
  Branch branch = Branch::p;  // calcium: which h_a
  CalciumDriveSpec calcium;

  double eval(std::span<const double> z) const;
  // True when the value does not depend on z.
  bool is_constant() const;
};

DriveFn zero_drive();
DriveFn constant_drive(double c);
DriveFn coordinate_drive(std::size_t ell, std::size_t i, double scale = 1.0, double offset = 0.0);
DriveFn curve_drive(std::size_t coord, StdpCurve curve);
DriveFn calcium_drive(std::size_t coord, Branch a, const CalciumDriveSpec& spec);

// z <- z + offset + gain (.) z. gain >= -1 keeps the orthant invariant.
struct JumpMap {
  std::vector<double> offset;
  std::vector<double> gain;
  void apply(std::span<double> z) const;
};

enum class KernelFamily { PA, PNS, Calcium, CustomContinuous };

struct KernelSpec {
  KernelFamily family = KernelFamily::CustomContinuous;
  std::size_t ell = 0;
  double presyn_rate = 0.0;  // lambda
  std::vector<double> gamma;
  std::vector<double> k0;
  JumpMap k1;  // presynaptic jump
  JumpMap k2;  // postsynaptic jump
  // drive[a][j] is n_{a,j}: j = 0 continuous, 1 presynaptic, 2 postsynaptic.
  std::array<std::array<DriveFn, 3>, 2> drive{};
  double C_k = 1.0;
  double C_n = 1.0;

  const DriveFn& n(Branch a, int j) const { return drive[idx(a)][static_cast<std::size_t>(j)]; }
};

struct WeightDependence {
  enum class Kind { constant, soft_upper, soft_lower };
  Kind kind = Kind::constant;
  double scale = 1.0;
  double w_max = kInf;

  double operator()(double w) const;
  bool is_constant() const { return kind == Kind::constant; }
};

enum class PlasticityForm { linear, decomposed, instantaneous };

struct PlasticityMapSpec {
  PlasticityForm form = PlasticityForm::linear;
  double mu = 0.0;
  double alpha = 1.0;  // filter leak, unused by the instantaneous form
  WeightDependence dep_p;
  WeightDependence dep_d;
  double C_M = 1.0;
  double weight_lo = 0.0;
  double weight_hi = kInf;
  // Declares B-a/A-c style domain invariance that cannot be spot-checked.
  bool certify_domain = false;

  bool filtered() const { return form != PlasticityForm::instantaneous; }
  // M(omega_p, omega_d, w) for the filtered forms.
  double rate(double omega_p, double omega_d, double w) const;
  // Mbar_a(w) for the instantaneous form.
  double coefficient(Branch a, double w) const;
  // Both weight factors constant, so W solves an affine ODE between events.
  bool affine_weight() const { return dep_p.is_constant() && dep_d.is_constant(); }
  double lipschitz() const { return mu > 1.0 ? mu : 1.0; }
};

struct SystemState {
  double t = 0.0;
  double x = 0.0;
  std::vector<double> z;
  double omega_p = 0.0;
  double omega_d = 0.0;
  double w = 0.0;
};

struct DiscreteState {
  double t = 0.0;
  std::int64_t x = 0;
  std::int64_t c = 0;
  double omega_p = 0.0;
  double omega_d = 0.0;
  std::int64_t w = 0;
};

enum class CheckStatus { pass, fail, exempt, not_applicable, certified };
const char* to_string(CheckStatus s);

struct AssumptionCheck {
  std::string id;
  CheckStatus status;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool passed() const;
  // Throws SpecError for an unknown id.
  CheckStatus status(const std::string& id) const;
  std::string summary() const;
};

// Structural problems throw SpecError; assumption failures are reported.
ValidationReport validate(const KernelSpec& kernel, const ActivationSpec& activation,
                          const ResetSpec& reset, const PlasticityMapSpec& plasticity,
                          const std::optional<SystemState>& init = std::nullopt);

// Checks shape only: sizes, signs, finite values.
void check_structure(const KernelSpec& kernel);
void check_structure(const ActivationSpec& activation);
void check_structure(const PlasticityMapSpec& plasticity);

// --- kernel families -------------------------------------------------------

// All-to-all pair rule. Coordinates are (z_p1, z_p2, z_d1, z_d2).
// D1, D2 are the instantaneous-model constants; nonzero values make the
// kernel CustomContinuous since n_{a,1}, n_{a,2} become affine with offsets.
struct PAParams {
  double lambda = 1.0;
  std::array<double, 2> B1{0.0, 0.0};
  std::array<double, 2> B2{0.0, 0.0};
  std::array<double, 2> gamma1{1.0, 1.0};
  std::array<double, 2> gamma2{1.0, 1.0};
  std::array<double, 2> D1{0.0, 0.0};
  std::array<double, 2> D2{0.0, 0.0};
};
inline constexpr std::size_t pa_coord(Branch a, int i) { return 2 * idx(a) + static_cast<std::size_t>(i - 1); }
KernelSpec make_pa_kernel(const PAParams& p);

// Nearest-neighbour rule. z1 = time since last presynaptic spike,
// z2 = time since last postsynaptic spike.
struct PNSParams {
  double lambda = 1.0;
  std::array<StdpCurve, 2> phi1{};  // n_{a,2} = Phi_{a,1}(z1)
  std::array<StdpCurve, 2> phi2{};  // n_{a,1} = Phi_{a,2}(z2)
};
KernelSpec make_pns_kernel(const PNSParams& p);

// Continuous calcium kernel, ell = 1: dC = -gamma C dt + C1 dN_pre + C2 dN_post.
struct CalciumParams {
  double lambda = 1.0;
  double gamma = 1.0;
  double C1 = 1.0;
  double C2 = 1.0;
  CalciumDriveSpec drive;
};
KernelSpec make_calcium_kernel(const CalciumParams& p);

// The toy model: Z decays at gamma, jumps B1 at presyn and B2 at postsyn;
// W jumps by eps * Z(t-) at every postsynaptic spike.
struct SimpleModelParams {
  double lambda = 1.0;
  double gamma = 1.0;
  double B1 = 1.0;
  double B2 = 0.0;
};
KernelSpec make_simple_kernel(const SimpleModelParams& p);

// Discrete model parameters (integer tokens, calcium and weight).
struct DiscreteParams {
  double lambda = 0.1;
  double gamma = 2.0;
  std::int64_t C1 = 1;
  std::int64_t C2 = 1;
  std::int64_t B_p = 2;
  std::int64_t B_d = 1;
  double mu = 0.0;
  double alpha = 0.01;
  ActivationSpec activation{0.0, 0.01};
};
void check_structure(const DiscreteParams& p);

}  // namespace stdpavg
