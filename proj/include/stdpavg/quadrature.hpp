#pragma once

#include <functional>

namespace stdpavg {

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  unsigned max_depth = 25;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]. Throws NumericError when the error
// estimate misses both tolerances.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opt = {});

// Point beyond which scale * (1 + s) * exp(-rate * s) < 1e-14, s measured from 0.
double envelope_cutoff(double scale, double rate);

// int_a^inf f, truncated where the envelope scale (1 + s) e^{-rate s} of |f|
// (s = distance from a) drops below 1e-14.
double integrate_tail(const std::function<double(double)>& f, double a, double scale,
                      double rate, const QuadOptions& opt = {});

}  // namespace stdpavg
