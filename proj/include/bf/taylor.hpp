#pragma once

#include <vector>

#include "bf/common.hpp"

namespace bf {

// Truncated Taylor polynomial of a function at a base point, in 1 or 2
// variables, stored as Taylor *coefficients* (raw derivative / k!), graded.
// dim==1: c[k], k=0..order. dim==2: triangular, entry (i,j) with i+j<=order at
// offset(i+j)+j where offset(k)=k(k+1)/2.
struct TaylorTable {
  int dim = 1;
  int order = 0;
  std::vector<double> c;

  static std::size_t size_for(int dim, int order) {
    return dim == 1 ? std::size_t(order + 1)
                    : std::size_t(order + 1) * std::size_t(order + 2) / 2;
  }
  static std::size_t idx2(int i, int j) {
    int k = i + j;
    return std::size_t(k) * (k + 1) / 2 + j;
  }

  static TaylorTable zero(int dim, int order) {
    TaylorTable t;
    t.dim = dim;
    t.order = order;
    t.c.assign(size_for(dim, order), 0.0);
    return t;
  }
  static TaylorTable constant(int dim, int order, double v) {
    TaylorTable t = zero(dim, order);
    t.c[0] = v;
    return t;
  }
  static TaylorTable coordinate(int dim, int order, int axis, double x0) {
    TaylorTable t = zero(dim, order);
    t.c[0] = x0;
    if (order >= 1) {
      if (dim == 1)
        t.c[1] = 1.0;
      else
        t.c[idx2(axis == 0 ? 1 : 0, axis == 0 ? 0 : 1)] = 1.0;
    }
    return t;
  }

  double value() const { return c[0]; }
  double& at2(int i, int j) { return c[idx2(i, j)]; }
  double at2(int i, int j) const { return c[idx2(i, j)]; }

  // raw partial derivative (coefficient times factorials)
  double deriv(int i, int j = 0) const {
    double f = factorial(i) * factorial(j);
    return (dim == 1 ? c[i] : c[idx2(i, j)]) * f;
  }
};

TaylorTable tt_add(const TaylorTable& a, const TaylorTable& b);
TaylorTable tt_sub(const TaylorTable& a, const TaylorTable& b);
TaylorTable tt_scale(const TaylorTable& a, double s);
TaylorTable tt_mul(const TaylorTable& a, const TaylorTable& b);
TaylorTable tt_div(const TaylorTable& a, const TaylorTable& b);  // b.c[0] != 0

// Compose a univariate analytic germ with an inner table: given the outer
// Taylor coefficients g[r] at u0 = u.value(), returns g(u(x)) truncated.
TaylorTable tt_compose(const std::vector<double>& g, const TaylorTable& u);

// ---- univariate coefficient series helpers (dense, length K+1) ----
std::vector<double> series_recip(const std::vector<double>& d);      // 1/d, d[0]!=0
std::vector<double> series_exp(const std::vector<double>& w);        // exp(w)
std::vector<double> series_mul(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> series_div(const std::vector<double>& n, const std::vector<double>& d);

// Taylor coefficients at u0, length K+1, of the named kernels.
std::vector<double> gen_exp(double u0, int K);
std::vector<double> gen_log(double u0, int K);   // u0 > 0
std::vector<double> gen_sqrt(double u0, int K);  // u0 > 0
// phi(t) = exp(-1/t) for t>0, 0 otherwise (flat kernel)
std::vector<double> gen_phi(double u0, int K);
// beta(t) = exp(-1/(1-t^2)) for |t|<1, 0 otherwise (bump kernel)
std::vector<double> gen_beta(double u0, int K);
// s(u) = phi(u) / (phi(u) + phi(1-u)): 0 for u<=0, 1 for u>=1, monotone step
std::vector<double> gen_smoothstep(double u0, int K);

double phi_val(double t);
double beta_val(double t);
double smoothstep_val(double u);

}  // namespace bf
