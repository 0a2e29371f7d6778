#include "stdpavg/ode.hpp"

#include <algorithm>
#include <cmath>

#include "stdpavg/errors.hpp"

namespace stdpavg {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeResult integrate_ode(const OdeRhs& rhs, std::vector<double> y, const std::vector<double>& grid,
                        const OdeOptions& opt) {
  if (grid.empty()) throw SpecError("integrate_ode: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw SpecError("integrate_ode: grid must increase");
  const std::size_t n = y.size();
  if (opt.watch >= n) throw SpecError("integrate_ode: watch index out of range");

  OdeResult out;
  double t = grid.front();
  out.t.push_back(t);
  out.y.push_back(y);

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
  rhs(t, y, k1);
  double span = grid.back() - grid.front();
  double h = std::max(1e-6 * std::max(span, 1.0), 1e-3 * opt.h_min);
  double t_prev = t, w_prev = y[opt.watch], f_prev = k1[opt.watch];

  // Local power law w' ~ k w^q from the last two accepted states gives the
  // remaining time w / ((q - 1) w'). The pad covers the phase error that the
  // tolerances allow in the computed trajectory.
  auto report_blowup = [&]() {
    out.blowup = true;
    double w = std::abs(y[opt.watch]), f = std::abs(k1[opt.watch]);
    double q = std::log(f / std::abs(f_prev)) / std::log(w / std::abs(w_prev));
    double rest = (std::isfinite(q) && q > 1.0 && f > 0.0) ? w / ((q - 1.0) * f) : 1e3 * (t - t_prev);
    double pad = 100.0 * opt.rtol * std::max(std::abs(t), 1.0);
    out.t_exp = t + rest;
    out.bracket_lo = t;
    out.bracket_hi = t + 2.0 * rest + pad;
    return out;
  };

  auto stage = [&](std::vector<double>& dst, std::initializer_list<std::pair<double, const std::vector<double>*>> terms,
                   double hh) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (const auto& [a, k] : terms) s += a * (*k)[i];
      dst[i] = y[i] + hh * s;
    }
  };

  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double target = grid[g];
    while (t < target) {
      if (out.steps + out.rejected > opt.max_steps) throw NumericError("integrate_ode: step budget exhausted");
      bool last = false;
      double hh = h;
      if (t + hh >= target) {
        hh = target - t;
        last = true;
      }
      stage(tmp, {{a21, &k1}}, hh);
      rhs(t + c2 * hh, tmp, k2);
      stage(tmp, {{a31, &k1}, {a32, &k2}}, hh);
      rhs(t + c3 * hh, tmp, k3);
      stage(tmp, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, hh);
      rhs(t + c4 * hh, tmp, k4);
      stage(tmp, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, hh);
      rhs(t + c5 * hh, tmp, k5);
      stage(tmp, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, hh);
      rhs(t + hh, tmp, k6);
      stage(y5, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, hh);
      rhs(t + hh, y5, k7);

      double err = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        double ei = hh * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        double r = ei / sc;
        if (!std::isfinite(r) || !std::isfinite(y5[i])) finite = false;
        err += r * r;
      }
      err = finite ? std::sqrt(err / static_cast<double>(n)) : INFINITY;

      if (err <= 1.0) {
        t_prev = t;
        w_prev = y[opt.watch];
        f_prev = k1[opt.watch];
        t = last ? target : t + hh;
        y.swap(y5);
        k1.swap(k7);
        ++out.steps;
        out.max_error = std::max(out.max_error, err);
        double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (!last) h = hh * fac;
        else h = std::max(h, hh * fac);
        if (h < opt.h_min && std::abs(y[opt.watch]) > opt.blowup_threshold) return report_blowup();
      } else {
        ++out.rejected;
        h = hh * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5);
        if (h < opt.h_min) {
          if (std::abs(y[opt.watch]) > opt.blowup_threshold) return report_blowup();
          throw NumericError("integrate_ode: step size collapsed at t = " + std::to_string(t));
        }
      }
    }
    out.t.push_back(t);
    out.y.push_back(y);
  }
  return out;
}

}  // namespace stdpavg
