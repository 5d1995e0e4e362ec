#pragma once

#include <functional>

#include "bf/common.hpp"

namespace bf {

// Adaptive Simpson with absolute tolerance and depth cap. Throws
// construction_error if the depth cap is hit before the tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 40);

// Fixed 12-point Gauss-Legendre on [a,b] (for smooth panel integrands).
double gauss12(const std::function<double(double)>& f, double a, double b);

}  // namespace bf
