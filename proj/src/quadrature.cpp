#include "bf/quadrature.hpp"

#include <cmath>

namespace bf {

namespace {

double simpson(const std::function<double(double)>& f, double a, double m, double b,
               double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double m, double b,
             double fa, double fm, double fb, double whole, double tol, int depth,
             int max_depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, lm, m, fa, flm, fm);
  double right = simpson(f, m, rm, b, fm, frm, fb);
  double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || (b - a) < 1e-300)
    return left + right + delta / 15.0;
  if (depth >= max_depth)
    throw construction_error("adaptive quadrature: depth cap hit before tolerance");
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1, max_depth) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1, max_depth);
}

// 12-point Gauss-Legendre abscissas/weights on [-1,1]
const double kGx[6] = {0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
                       0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
const double kGw[6] = {0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
                       0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol, int max_depth) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = simpson(f, a, m, b, fa, fm, fb);
  return adapt(f, a, m, b, fa, fm, fb, whole, tol, 0, max_depth);
}

double gauss12(const std::function<double(double)>& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 6; ++i)
    s += kGw[i] * (f(c - h * kGx[i]) + f(c + h * kGx[i]));
  return s * h;
}

}  // namespace bf
