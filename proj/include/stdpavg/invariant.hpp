#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stdpavg/drive_table.hpp"
#include "stdpavg/model.hpp"

namespace stdpavg {

// --- all-to-all pair rule --------------------------------------------------

struct PACoefficients {
  std::array<double, 2> lambda1{0.0, 0.0};
  std::array<double, 2> lambda2{0.0, 0.0};

  // drive_a(w) = intercept_a + gain_a w
  double intercept(Branch a, double nu, double slope, double lambda) const {
    return nu / (slope * lambda) * lambda1[idx(a)];
  }
  double gain(Branch a) const { return lambda1[idx(a)] + lambda2[idx(a)]; }
  double drive(Branch a, double w, double nu, double slope, double lambda) const {
    return intercept(a, nu, slope, lambda) + gain(a) * w;
  }
};

PACoefficients pa_coeffs(const KernelSpec& kernel, const ActivationSpec& activation, double lambda);

// Instantaneous-model drive for the pair rule with constants D: affine in w,
// returned as {intercept, gain} per branch.
struct AffineDrive {
  std::array<double, 2> intercept{0.0, 0.0};
  std::array<double, 2> gain{0.0, 0.0};
  double eval(Branch a, double w) const { return intercept[idx(a)] + gain[idx(a)] * w; }
};
AffineDrive pa_nofilter_drive(const PAParams& params, const ActivationSpec& activation);

// Toy model: D(w) = E[beta(X) Z] = c0 + c1 w + c2 w^2 at frozen w.
struct QuadraticDrive {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double eval(double w) const { return c0 + (c1 + c2 * w) * w; }
};
QuadraticDrive simple_model_drive(const SimpleModelParams& params, const ActivationSpec& activation);

// --- nearest-neighbour rule --------------------------------------------------

struct PNSModel {
  double lambda = 1.0;
  double nu = 0.0;
  double slope = 1.0;
};

// E[exp(-xi N(0, a])] for the stationary postsynaptic point process.
double postsyn_count_laplace(double w, double xi, double a, const PNSModel& m);
// P(Z2 >= a): probability of no postsynaptic spike in a window of length a.
double pns_tail(double w, double a, const PNSModel& m);
// Psi_a(w) = E[beta(X) Phi_{a,1}(Z1)] + lambda E[Phi_{a,2}(Z2)].
double pns_drive(double w, const StdpCurve& phi1, const StdpCurve& phi2, const PNSModel& m);

// --- calcium ----------------------------------------------------------------

struct CalciumModel {
  double C1 = 1.0;
  double C2 = 1.0;
  double gamma = 1.0;
  double lambda = 1.0;
  ActivationSpec activation;
};
// E[exp(-a X - b C)] under the invariant law at weight w.
double calcium_laplace(double w, double a, double b, const CalciumModel& m);

// --- discrete calcium --------------------------------------------------------

struct CQModel {
  int C1 = 1;
  int C2 = 1;
  double gamma = 2.0;
  double lambda = 0.1;
  double beta = 0.01;  // slope of beta(x) = beta x
};
CQModel cq_model(const DiscreteParams& p);

// E[u^C] by the general product formula. With C1 = C2 = 1 the specialised
// formula is evaluated as well and the two must agree to 1e-9 relative.
double cq_pgf(double u, std::int64_t w, const CQModel& m);
double cq_pgf_general(double u, std::int64_t w, const CQModel& m);
double cq_pgf_unit(double u, std::int64_t w, const CQModel& m);  // C1 = C2 = 1
// Pi_w(C >= n) for n in {0, 1, 2}, C1 = C2 = 1.
double cq_tail(std::int64_t w, int n, const CQModel& m);

// --- Monte Carlo ---------------------------------------------------------------

struct Functional {
  std::string name;
  std::function<double(double x, std::span<const double> z)> f;
};
struct DiscreteFunctional {
  std::string name;
  std::function<double(std::int64_t x, std::int64_t c)> f;
};

struct InvariantConfig {
  double horizon = 1e4;
  double sample_dt = 0.1;
  double burn_in = 0.1;
  std::size_t batches = 32;
  std::uint64_t seed = 0;
  std::uint16_t group = 0;
  // > 1: independent replicas, one batch each (bias diagnostics).
  std::size_t replicas = 1;
  double mixing_threshold = 2.5;
};

struct FunctionalEstimate {
  std::string name;
  double mean = 0.0;
  double se = 0.0;
  double ess = 0.0;
  double mixing_ratio = 1.0;
  bool mixing_warning = false;
};

struct InvariantEstimate {
  std::vector<FunctionalEstimate> values;
  double burn_in_fraction = 0.0;
  std::size_t samples = 0;
  bool mixing_warning = false;
  const FunctionalEstimate& operator[](const std::string& name) const;
};

InvariantEstimate mc_invariant(const KernelSpec& kernel, const ActivationSpec& activation,
                               const ResetSpec& reset, double w,
                               const std::vector<Functional>& functionals,
                               const InvariantConfig& cfg);

InvariantEstimate mc_invariant_discrete(const DiscreteParams& params, std::int64_t w,
                                        const std::vector<DiscreteFunctional>& functionals,
                                        const InvariantConfig& cfg);

// Averaged drive functionals n_{a,0} + lambda n_{a,1} + beta(x) n_{a,2}.
std::vector<Functional> drive_functionals(const KernelSpec& kernel, const ActivationSpec& activation);

// Named functionals understood by the CLI: mean_x, mean_z<i>, mean_xz<i>,
// drive_p, drive_d.
Functional named_functional(const std::string& name, const KernelSpec& kernel,
                            const ActivationSpec& activation);

// --- drive tables -------------------------------------------------------------

DriveTable pa_drive_table(const PACoefficients& c, const std::vector<double>& w_grid, double nu,
                          double slope, double lambda);
DriveTable pns_drive_table(const std::vector<double>& w_grid, const PNSParams& curves,
                           const PNSModel& m);
// Monte Carlo table; grid points run in parallel, assembled in grid order.
DriveTable mc_drive_table(const KernelSpec& kernel, const ActivationSpec& activation,
                          const ResetSpec& reset, const std::vector<double>& w_grid,
                          const InvariantConfig& cfg);
// E[h_a(C)] per integer weight for the discrete model, by Monte Carlo.
DriveTable mc_discrete_drive_table(const DiscreteParams& params, const CalciumDriveSpec& calcium,
                                   const std::vector<std::int64_t>& w_grid,
                                   const InvariantConfig& cfg);

}  // namespace stdpavg
