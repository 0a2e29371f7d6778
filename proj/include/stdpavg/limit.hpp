#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "stdpavg/drive_table.hpp"
#include "stdpavg/engine.hpp"
#include "stdpavg/invariant.hpp"
#include "stdpavg/model.hpp"
#include "stdpavg/ode.hpp"

namespace stdpavg {

struct LimitSolution {
  std::vector<double> t;
  std::vector<double> omega_p;
  std::vector<double> omega_d;
  std::vector<double> w;
  bool blowup = false;
  double t_exp = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::size_t steps = 0;
  double max_error = 0.0;
  // Relative sup-norm gap to the exact affine solution, when one was computed.
  std::optional<double> exact_gap;
};

struct BlowupReport {
  bool exploded = false;
  double t_exp = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
BlowupReport detect_blowup(const LimitSolution& s);

// Averaged drive per branch as a function of w; time is passed for error
// reporting by table lookups.
using DriveOfW = std::function<std::array<double, 2>(double w, double t)>;

struct LimitOptions {
  std::array<double, 2> omega0{0.0, 0.0};
  std::optional<double> blowup_threshold;  // default 1e6 max(1, w0)
  OdeOptions ode;
};

// omega_a' = -alpha omega_a + drive_a(w), w' = M(omega_p, omega_d, w).
LimitSolution solve_filtered(const DriveOfW& drive, const PlasticityMapSpec& plasticity, double w0,
                             const std::vector<double>& grid, const LimitOptions& opt = {});

struct PALimitParams {
  double nu = 0.0;
  double slope = 1.0;
  double lambda = 1.0;
};

// Pair-rule limit. With both weight factors constant the system is affine;
// the exact solution via the augmented matrix exponential is computed as
// well and must agree to 1e-8 relative sup-norm.
LimitSolution solve_limit_pa(const PACoefficients& c, const PlasticityMapSpec& plasticity,
                             const PALimitParams& p, double w0, const std::vector<double>& grid,
                             const LimitOptions& opt = {});

// Exact affine solution of the pair-rule limit; throws SpecError unless the
// weight factors are constant.
LimitSolution exact_limit_pa(const PACoefficients& c, const PlasticityMapSpec& plasticity,
                             const PALimitParams& p, double w0, const std::vector<double>& grid,
                             std::array<double, 2> omega0 = {0.0, 0.0});

// Table drives; leaving the table range throws RangeError naming the time.
// The result is "a" limiting candidate when uniqueness is not known.
LimitSolution solve_limit_table(const DriveTable& table, const PlasticityMapSpec& plasticity,
                                double w0, const std::vector<double>& grid,
                                const LimitOptions& opt = {});

// w' = Mbar_p(w) drive_p(w) - Mbar_d(w) drive_d(w) - mu w. omega columns are 0.
LimitSolution solve_nofilter(const DriveOfW& drive, const PlasticityMapSpec& plasticity, double w0,
                             const std::vector<double>& grid, const LimitOptions& opt = {});

// Closed form for an affine drive and constant Mbar.
std::vector<double> exact_nofilter_affine(const AffineDrive& d, const PlasticityMapSpec& plasticity,
                                          double w0, const std::vector<double>& grid);

// --- discrete limit ----------------------------------------------------------

// E_{Pi_w}[h_a(C)] per integer weight.
class TailProvider {
 public:
  virtual ~TailProvider() = default;
  virtual std::array<double, 2> expected_drive(std::int64_t w, double t) const = 0;
};

// Analytic tails via cq_tail, evaluated lazily and cached (thread-safe).
class AnalyticTails : public TailProvider {
 public:
  AnalyticTails(const CQModel& model, const CalciumDriveSpec& calcium);
  std::array<double, 2> expected_drive(std::int64_t w, double t) const override;

 private:
  CQModel model_;
  std::array<int, 2> n_;  // threshold index ceil(theta_a); -1 means h_a = 0
  mutable std::mutex mu_;
  mutable std::map<std::int64_t, std::array<double, 2>> cache_;
};

// Monte Carlo drive table, linearly interpolated between grid weights.
class TableTails : public TailProvider {
 public:
  explicit TableTails(DriveTable table);
  std::array<double, 2> expected_drive(std::int64_t w, double t) const override;
  const DriveTable& table() const { return table_; }

 private:
  DriveTable table_;
};

struct DiscreteLimitParams {
  double alpha = 0.01;
  double mu = 0.0;
  std::int64_t B_p = 2;
  std::int64_t B_d = 1;
};

// Limit jump process: integer w with leak mu w, +B_p at rate omega_p, -B_d at
// rate omega_d 1{w >= B_d}; between jumps omega_a' = -alpha omega_a + E_w[h_a].
// Samples carry x = c = 0.
DiscreteTrajectory simulate_limit_discrete(const TailProvider& tails,
                                           const CalciumDriveSpec& calcium,
                                           const DiscreteLimitParams& params,
                                           const DiscreteState& init, const SimConfig& cfg);

}  // namespace stdpavg
