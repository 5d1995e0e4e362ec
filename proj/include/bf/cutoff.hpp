#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include "bf/piecewise.hpp"
#include "bf/region.hpp"

namespace bf {

// Normalized mollifier: psi(u) = c * beta(2u), supp |u| <= 1/2, integral 1.
double psi_val(double u);
double psi_deriv(int r, double u);
double psi_c();        // normalization constant
double psi_l1_deriv(); // integral of |psi'| (the analytic C in C^k/(d1..dk))

// One-dimensional plateau cutoff built as 1_F * psi_{d_1} * ... * psi_{d_m},
// F = inner fattened by (sum d_j)/2. Equals 1 exactly on the inner set, 0
// exactly outside the (sum d_j)-fattening, with derivative sup norms bounded
// by prod_j (C/d_j) by construction (one derivative per convolution factor).
class CutoffModel {
 public:
  CutoffModel(std::vector<std::pair<Rational, Rational>> inner,
              std::vector<Rational> widths);

  // tau and its derivatives (argument is the coordinate along the axis)
  double value(double t) const;
  double deriv(int k, double t) const;

  double delta() const { return delta_; }
  double spread() const { return 2.0 * delta_; }  // support fattening of inner
  const std::vector<std::pair<Rational, Rational>>& inner() const { return inner_; }
  const std::vector<std::pair<Rational, Rational>>& fattened() const { return fat_; }
  const std::vector<Rational>& widths() const { return widths_; }

  // analytic certified bound on ||tau^(k)||, valid for k <= m
  double certified_bound(int k) const;

  // support / plateau interval lists (rational, merged)
  std::vector<std::pair<Rational, Rational>> support_intervals() const;
  std::vector<std::pair<Rational, Rational>> plateau_intervals() const;

 private:
  void ensure_order(int r) const;

  std::vector<std::pair<Rational, Rational>> inner_;  // as given (merged)
  std::vector<std::pair<Rational, Rational>> fat_;    // F: inner + delta
  std::vector<Rational> widths_;
  std::vector<double> wd_;  // widths as doubles
  double delta_ = 0.0;

  mutable std::mutex mu_;
  mutable std::vector<PiecewisePoly> kder_;  // kder_[r] = K^(r)
  mutable PiecewisePoly cdf_;
};

using CutoffModelPtr = std::shared_ptr<const CutoffModel>;

struct CutoffCertificate {
  SetDescriptor inner;
  SetDescriptor outer;                // support is contained in this
  std::vector<Rational> widths;
  int m = 0;                          // certified max derivative order
  double fitted_C = 0.0;              // max_k (measured_k * d1..dk)^(1/k)
  std::vector<double> measured_sup;   // measured ||tau^(k)||, k = 0..m
  std::vector<double> bound;          // certified C^k/(d1..dk)
  json to_json() const;
};

// Measure the cutoff's derivative sups over its transition bands and pack
// them with the analytic bounds C^k/(d1..dk).
CutoffCertificate certify_cutoff(const CutoffModel& model, int max_order,
                                 int samples_per_band = 2048);

// 1D intervals as a ball-union descriptor (center/half-width pairs)
SetDescriptor set_from_intervals(const std::vector<std::pair<Rational, Rational>>& iv);

}  // namespace bf
