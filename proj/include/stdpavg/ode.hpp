#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace stdpavg {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_min = 1e-12;  // steps below this count as collapse
  std::size_t max_steps = 50'000'000;
  // Component watched for explosion and the level it must exceed.
  std::size_t watch = 0;
  double blowup_threshold = 1e6;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeResult {
  std::vector<double> t;               // grid points reached
  std::vector<std::vector<double>> y;  // one state per reached grid point
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double max_error = 0.0;  // largest accepted scaled error estimate
  bool blowup = false;
  double t_exp = 0.0;       // point estimate when blowup
  double bracket_lo = 0.0;  // t_exp in [bracket_lo, bracket_hi] when blowup
  double bracket_hi = 0.0;
};

// Dormand-Prince 5(4) with step control, landing exactly on each grid time.
// Integration stops early once the step falls below h_min while y[watch]
// exceeds blowup_threshold (explosion). A collapse without the threshold
// crossing throws NumericError.
OdeResult integrate_ode(const OdeRhs& rhs, std::vector<double> y0, const std::vector<double>& grid,
                        const OdeOptions& opt = {});

}  // namespace stdpavg
