#include "stdpavg/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "stdpavg/errors.hpp"

namespace stdpavg {

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadOptions& opt) {
  if (!(b > a)) return 0.0;
  double err = 0.0, l1 = 0.0;
  // Below ~1e-12 the Kronrod error floor (2 eps |K| per panel) is never met
  // and the recursion runs to max_depth.
  const double tol = std::max(opt.rel_tol, 1e-12);
  double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, opt.max_depth,
                                                                          tol, &err, &l1);
  if (!std::isfinite(v) || (err > opt.abs_tol && err > 100.0 * opt.rel_tol * l1)) {
    std::ostringstream os;
    os.precision(6);
    os << "quadrature did not converge on [" << a << ", " << b << "]: value " << v
       << ", error estimate " << err << ", L1 " << l1;
    throw NumericError(os.str());
  }
  return v;
}

double envelope_cutoff(double scale, double rate) {
  if (!(scale > 1e-14)) return 0.0;
  double L = std::log(scale / 1e-14);
  double T = L / rate;
  for (int i = 0; i < 4; ++i) T = (L + std::log1p(T)) / rate;
  return T;
}

double integrate_tail(const std::function<double(double)>& f, double a, double scale, double rate,
                      const QuadOptions& opt) {
  double T = envelope_cutoff(scale, rate);
  if (T <= 0.0) return 0.0;
  // Split so the adaptive rule sees the decay scale.
  double total = 0.0, lo = a;
  double step = 1.0 / rate;
  while (lo < a + T) {
    double hi = std::min(a + T, lo + step);
    total += integrate(f, lo, hi, opt);
    lo = hi;
    step *= 2.0;
  }
  return total;
}

}  // namespace stdpavg
