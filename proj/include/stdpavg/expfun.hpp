#pragma once

#include <algorithm>
#include <cmath>

namespace stdpavg {

// g(k, s) = (1 - e^{-ks}) / k, with g(0, s) = s.
inline double expm1_ratio(double k, double s) {
  double ks = k * s;
  if (ks == 0.0) return s;
  return -std::expm1(-ks) / k;
}

// int_0^s e^{-mu (s - r)} e^{-alpha r} dr
inline double exp_conv(double alpha, double mu, double s) {
  double m = std::min(alpha, mu);
  return std::exp(-m * s) * expm1_ratio(std::abs(mu - alpha), s);
}

// int_0^s e^{-mu (s - r)} g(alpha, r) dr. Each branch avoids the cancellation
// of the other; the series covers the region where both cancel.
inline double exp_conv2(double alpha, double mu, double s) {
  double big = std::max(alpha, mu);
  if (big * s < 1e-3) {
    double h1 = alpha + mu;
    double h2 = alpha * alpha + alpha * mu + mu * mu;
    double h3 = alpha * h2 + mu * mu * mu;
    double s2 = s * s;
    return s2 * (0.5 - s * (h1 / 6.0 - s * (h2 / 24.0 - s * h3 / 120.0)));
  }
  double e1 = exp_conv(alpha, mu, s);
  if (alpha >= mu) return (expm1_ratio(mu, s) - e1) / alpha;
  return (expm1_ratio(alpha, s) - e1) / mu;
}

// Filter path omega(tau) = omega0 e^{-alpha tau} + h g(alpha, tau) with
// constant input h >= 0, and its integrated intensity.
struct FilterPath {
  double omega0;
  double h;
  double alpha;

  double value(double tau) const {
    return omega0 * std::exp(-alpha * tau) + h * expm1_ratio(alpha, tau);
  }
  // int_0^tau omega = omega0 g(alpha, tau) + h int_0^tau g(alpha, r) dr
  double integral(double tau) const {
    double at = alpha * tau;
    double ig;
    if (at < 1e-3)
      ig = tau * tau * (0.5 - at * (1.0 / 6.0 - at * (1.0 / 24.0 - at / 120.0)));
    else
      ig = (tau - expm1_ratio(alpha, tau)) / alpha;
    return omega0 * expm1_ratio(alpha, tau) + h * ig;
  }
  double total() const {  // integral over [0, inf)
    return h > 0.0 ? INFINITY : omega0 / alpha;
  }
  // Smallest tau with integral(tau) = target, +inf if never reached.
  double invert(double target) const {
    if (target <= 0.0) return 0.0;
    if (h <= 0.0) {
      if (omega0 <= 0.0 || target >= omega0 / alpha) return INFINITY;
      return -std::log1p(-alpha * target / omega0) / alpha;
    }
    double lo = 0.0, hi = target / std::max(omega0, h / alpha);
    if (!(hi > 0.0)) hi = 1.0;
    while (integral(hi) < target) {
      lo = hi;
      hi *= 2.0;
    }
    // Safeguarded Newton on a monotone increasing function.
    double tau = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      double f = integral(tau) - target;
      if (f > 0.0) hi = tau; else lo = tau;
      double d = value(tau);
      double next = d > 0.0 ? tau - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - tau) <= 1e-15 * std::max(1.0, tau)) return next;
      tau = next;
    }
    return tau;
  }
};

}  // namespace stdpavg
