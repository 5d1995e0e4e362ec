#pragma once

#include <functional>
#include <vector>

#include "bf/common.hpp"

namespace bf {

// Piecewise Chebyshev model of a smooth function on [lo,hi], with constant
// clamp values outside. Panels are uniform; each carries Chebyshev
// coefficients fitted at Chebyshev-Lobatto nodes.
class PiecewisePoly {
 public:
  PiecewisePoly() = default;

  // Fit f on [lo,hi] with n_panels panels of the given degree.
  static PiecewisePoly fit(const std::function<double(double)>& f, double lo, double hi,
                           int n_panels, int degree, double left_clamp,
                           double right_clamp);

  double eval(double t) const;

  // Antiderivative with F(lo)=left_clamp; right clamp is F(hi) (optionally
  // renormalized by the caller via rescale()).
  PiecewisePoly antiderivative(double left_clamp) const;
  void rescale(double s);
  void set_clamps(double left, double right) { left_ = left; right_ = right; }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double right_value() const { return right_; }
  bool empty() const { return panels_.empty(); }

  // max |value| over a dense per-panel node sweep (model sup)
  double sup_abs() const;

 private:
  double lo_ = 0.0, hi_ = 0.0, left_ = 0.0, right_ = 0.0;
  double panel_w_ = 0.0;
  std::vector<std::vector<double>> panels_;  // Chebyshev coeffs per panel
};

}  // namespace bf
