#include "bf/piecewise.hpp"

#include <cmath>

namespace bf {

namespace {

// Chebyshev coefficients from values at Lobatto nodes x_j = cos(pi j / n)
std::vector<double> cheb_fit(const std::vector<double>& vals) {
  const int n = (int)vals.size() - 1;
  std::vector<double> c(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int j = 0; j <= n; ++j) {
      double w = (j == 0 || j == n) ? 0.5 : 1.0;
      s += w * vals[j] * std::cos(M_PI * k * j / n);
    }
    c[k] = 2.0 * s / n;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

double clenshaw(const std::vector<double>& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (int k = (int)c.size() - 1; k >= 1; --k) {
    double b0 = 2.0 * x * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c[0];
}

// integral of sum c_k T_k on [-1,x] as Chebyshev coefficients
std::vector<double> cheb_antideriv(const std::vector<double>& c) {
  const int n = (int)c.size() - 1;
  std::vector<double> b(n + 2, 0.0);
  for (int k = 1; k <= n + 1; ++k) {
    double ck1 = k - 1 <= n ? c[k - 1] : 0.0;
    double ck2 = k + 1 <= n ? c[k + 1] : 0.0;
    if (k == 1)
      b[1] = c[0] - 0.5 * ck2;
    else
      b[k] = (ck1 - ck2) / (2.0 * k);
  }
  // fix constant so value at x=-1 is 0
  double at_m1 = 0.0;
  for (int k = 1; k <= n + 1; ++k) at_m1 += b[k] * (k % 2 ? -1.0 : 1.0);
  b[0] = -at_m1;
  return b;
}

}  // namespace

PiecewisePoly PiecewisePoly::fit(const std::function<double(double)>& f, double lo,
                                 double hi, int n_panels, int degree, double left_clamp,
                                 double right_clamp) {
  PiecewisePoly p;
  p.lo_ = lo;
  p.hi_ = hi;
  p.left_ = left_clamp;
  p.right_ = right_clamp;
  p.panel_w_ = (hi - lo) / n_panels;
  p.panels_.resize(n_panels);
  std::vector<double> vals(degree + 1);
  for (int i = 0; i < n_panels; ++i) {
    double a = lo + i * p.panel_w_, b = a + p.panel_w_;
    for (int j = 0; j <= degree; ++j) {
      double x = std::cos(M_PI * j / degree);  // 1 .. -1
      vals[j] = f(0.5 * (a + b) + 0.5 * (b - a) * x);
    }
    // cheb_fit expects vals at cos(pi j/n) which runs 1 -> -1; consistent
    p.panels_[i] = cheb_fit(vals);
  }
  return p;
}

double PiecewisePoly::eval(double t) const {
  if (panels_.empty()) return 0.0;
  if (t <= lo_) return left_;
  if (t >= hi_) return right_;
  int i = (int)((t - lo_) / panel_w_);
  if (i >= (int)panels_.size()) i = (int)panels_.size() - 1;
  double a = lo_ + i * panel_w_;
  double x = 2.0 * (t - a) / panel_w_ - 1.0;
  return clenshaw(panels_[i], x);
}

PiecewisePoly PiecewisePoly::antiderivative(double left_clamp) const {
  PiecewisePoly r;
  r.lo_ = lo_;
  r.hi_ = hi_;
  r.panel_w_ = panel_w_;
  r.left_ = left_clamp;
  r.panels_.resize(panels_.size());
  double run = left_clamp;
  double half = 0.5 * panel_w_;
  for (std::size_t i = 0; i < panels_.size(); ++i) {
    std::vector<double> b = cheb_antideriv(panels_[i]);
    for (auto& v : b) v *= half;  // d t = half d x
    b[0] += run;
    r.panels_[i] = b;
    run = clenshaw(b, 1.0);
  }
  r.right_ = run;
  return r;
}

void PiecewisePoly::rescale(double s) {
  for (auto& pan : panels_)
    for (auto& v : pan) v *= s;
  left_ *= s;
  right_ *= s;
}

double PiecewisePoly::sup_abs() const {
  double m = std::max(std::abs(left_), std::abs(right_));
  for (std::size_t i = 0; i < panels_.size(); ++i) {
    for (int j = 0; j <= 32; ++j) {
      double x = -1.0 + j / 16.0;
      m = std::max(m, std::abs(clenshaw(panels_[i], x)));
    }
  }
  return m;
}

}  // namespace bf
