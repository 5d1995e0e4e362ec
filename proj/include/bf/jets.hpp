#pragma once

#include <array>
#include <string>
#include <vector>

#include "bf/expr.hpp"

namespace bf {

// Finite jet: raw partial derivatives up to `order` at a rational base point,
// graded storage (same layout as TaylorTable).
struct Jet {
  int dim = 1;
  int order = 0;
  std::array<Rational, 2> base{Rational(0), Rational(0)};
  std::vector<double> a;

  static Jet zero(int dim, int order, const std::array<Rational, 2>& base);
  double at(int i, int j = 0) const {
    return a[dim == 1 ? std::size_t(i) : TaylorTable::idx2(i, j)];
  }
  double& at(int i, int j = 0) {
    return a[dim == 1 ? std::size_t(i) : TaylorTable::idx2(i, j)];
  }
  Pt base_d() const { return {to_double(base[0]), to_double(base[1])}; }

  json to_json() const;
  static Jet from_json(const json& j, const std::string& where);
};

// jet of f at x via the derivative path
Jet jet_of(const SmoothExpr& f, const std::array<Rational, 2>& x, int order);

// Leibniz product of two jets at a common base point
Jet jet_mul(const Jet& A, const Jet& B);

// re-expansion of the jet polynomial at a new base point (exact shift of the
// degree-d Taylor polynomial, up to roundoff)
Jet jet_shift(const Jet& A, const std::array<Rational, 2>& y);

// Whitney compatibility residual: component k holds
//   A_k - sum_{|k+m| <= d} B_{k+m} (x_A - x_B)^m / m!
// i.e. how far A deviates at its own base from B's polynomial prediction.
std::vector<double> compat_residual(const Jet& A, const Jet& B);

// |r_k| <= C * sep^(d - |k|) for every component
bool compat_verdict(const Jet& A, const Jet& B, double C, double* worst_ratio = nullptr);

// Ladder measurement of the Whitney rate for a function's own jets: for
// shrinking separations h the worst ratio |r_k| / h^(d-|k|) must decay.
struct CompatReport {
  int order = 0;
  bool pass = false;
  std::vector<double> sep;
  std::vector<double> worst_ratio;
  double decay_exponent = 0.0;
  json to_json() const;
};

CompatReport jet_compat(const SmoothExpr& f, const Pt& x, const Pt& dir,
                        int order, double h0, int rungs = 5);

// ---- prescribed data on strata (dimension 2) ----

struct Stratum {
  enum class Kind { Point, Segment };
  Kind kind = Kind::Point;

  Jet jet;  // Point: full jet at jet.base

  // Segment: axis 0 runs along x at fixed y (axis 1 the transpose);
  // transverse[j] is a polynomial in the running coordinate prescribing the
  // raw transverse partial of order j on the open segment
  int axis = 0;
  Rational fixed{0};
  Rational a{0}, b{0};
  std::vector<std::vector<Rational>> transverse;

  json to_json() const;
  static Stratum from_json(const json& j, int order, const std::string& where);
};

struct JetField {
  int dim = 2;
  int order = 0;
  std::vector<Stratum> strata;

  // rejects crossing/touching strata, degenerate segments, order mismatches
  void validate() const;

  json to_json() const;
  static JetField from_json(const json& j);
};

}  // namespace bf
