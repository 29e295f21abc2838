#pragma once

#include <cmath>
#include <cstdlib>

namespace oscombine {

namespace detail {

inline double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(const F& f, double a, double fa, double b, double fb, double m, double fm,
             double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(a, m, fa, flm, fm);
  double right = simpson(m, b, fm, frm, fb);
  double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson over a fixed initial partition; the partition keeps narrow
// features (sharply peaked order statistic densities) from being stepped over.
// tol is an absolute error target for the whole interval.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10, int initial_panels = 32,
                 int max_depth = 48) {
  if (!(b > a)) return b == a ? 0.0 : -integrate(f, b, a, tol, initial_panels, max_depth);
  double h = (b - a) / initial_panels;
  double panel_tol = tol / initial_panels;
  double total = 0.0;
  for (int k = 0; k < initial_panels; ++k) {
    double x0 = a + k * h, x1 = (k + 1 == initial_panels) ? b : x0 + h;
    double xm = 0.5 * (x0 + x1);
    double f0 = f(x0), f1 = f(x1), fm = f(xm);
    double whole = detail::simpson(x0, x1, f0, fm, f1);
    total += detail::adapt(f, x0, f0, x1, f1, xm, fm, whole, panel_tol, max_depth);
  }
  return total;
}

}  // namespace oscombine
