#pragma once

#include <array>
#include <memory>
#include <optional>
#include <vector>

#include "bf/cutoff.hpp"
#include "bf/region.hpp"
#include "bf/taylor.hpp"

namespace bf {

using Pt = std::array<double, 2>;

enum class Op {
  Const,
  Coord,
  LinComb,
  Poly1,
  Add,
  Sub,
  Mul,
  Div,
  Exp,
  Beta,
  Phi,
  SmoothStep,
  DistGauge,
  Cutoff1D,
  Deriv,
  FixCoord,
  Sum,
};

// Conservative closed support: finite union of boxes, or "whole" (unknown).
// Evaluation returns exact 0.0 outside the support of a tagged node.
struct Support {
  struct BoxD {
    std::array<double, 2> lo{-std::numeric_limits<double>::infinity(),
                             -std::numeric_limits<double>::infinity()};
    std::array<double, 2> hi{std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()};
  };
  bool whole = true;
  std::vector<BoxD> boxes;  // used when !whole

  bool contains(const Pt& x, int dim) const {
    if (whole) return true;
    for (const auto& b : boxes) {
      bool in = true;
      for (int a = 0; a < dim; ++a)
        if (x[a] < b.lo[a] || x[a] > b.hi[a]) in = false;
      if (in) return true;
    }
    return false;
  }
  static Support everything() { return Support{}; }
  static Support nothing() { return Support{false, {}}; }
  static Support unite(const Support& a, const Support& b);
  static Support intersect(const Support& a, const Support& b);
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  int dim = 1;
  std::vector<NodePtr> args;

  Rational cval{0};                    // Const
  int axis = 0;                        // Coord / Poly1 / Cutoff1D / FixCoord
  std::array<Rational, 3> lin{Rational(0), Rational(0), Rational(0)};  // LinComb
  std::vector<Rational> poly;          // Poly1: coefficients of (x-center)^i
  Rational poly_center{0};
  double poly_center_d = 0;
  std::vector<double> polyd;           // cached doubles of poly
  SetDescriptor set;                   // DistGauge
  Rational gscale{1};                  // DistGauge: exp(-gscale/dist)
  Rational temperature{0};             // DistGauge soft-min temperature
  std::vector<std::pair<Rational, Rational>> cut_inner;  // Cutoff1D inner
  std::vector<Rational> cut_widths;                      // Cutoff1D widths
  CutoffModelPtr cutoff;                                 // Cutoff1D model
  std::array<int, 2> dk{0, 0};         // Deriv
  Rational fixval{0};                  // FixCoord substituted value
  double div_floor = 0.0;              // Div certification record
  Support supp;
};

class SmoothExpr {
 public:
  SmoothExpr() = default;
  explicit SmoothExpr(NodePtr n) : n_(std::move(n)) {}

  bool valid() const { return n_ != nullptr; }
  int dim() const { return n_ ? n_->dim : 0; }
  const NodePtr& node() const { return n_; }

  double eval(const Pt& x) const;
  double eval1(double x) const { return eval({x, 0.0}); }

  // truncated Taylor table (coefficients) at x, total order K
  TaylorTable taylor(const Pt& x, int K) const;

  // raw partial derivatives up to total order K, graded-lex flattened
  std::vector<double> derivs(const Pt& x, int K) const;

  // exact rational value where decidable (plateaus, supports, polynomials);
  // throws construction_error when the value is not exactly representable
  Rational eval_exact(const std::array<Rational, 2>& x) const;

  const Support& support() const { return n_->supp; }

  json to_json() const;
  static SmoothExpr from_json(const json& j);

 private:
  NodePtr n_;
};

// ---- builders ----
SmoothExpr ex_const(const Rational& v, int dim = 1);
SmoothExpr ex_coord(int axis, int dim = 1);
SmoothExpr ex_lin(const Rational& c0, const Rational& cx, const Rational& cy, int dim);
SmoothExpr ex_poly1(std::vector<Rational> coeffs, int axis, int dim = 1,
                    const Rational& center = Rational(0));
SmoothExpr ex_add(const SmoothExpr& a, const SmoothExpr& b);
SmoothExpr ex_sub(const SmoothExpr& a, const SmoothExpr& b);
SmoothExpr ex_mul(const SmoothExpr& a, const SmoothExpr& b);
SmoothExpr ex_scale(const SmoothExpr& a, const Rational& s);
// division with a construction-time nonvanishing certificate over the region
SmoothExpr ex_div(const SmoothExpr& a, const SmoothExpr& b, const Region& region);
// division where the caller supplies a proven lower bound for |b|
SmoothExpr ex_div(const SmoothExpr& a, const SmoothExpr& b, const Rational& floor_bound);
SmoothExpr ex_exp(const SmoothExpr& a);
SmoothExpr ex_beta(const SmoothExpr& a);
SmoothExpr ex_phi(const SmoothExpr& a);
SmoothExpr ex_smoothstep(const SmoothExpr& a);
SmoothExpr ex_deriv(const SmoothExpr& a, int dx, int dy = 0);
SmoothExpr ex_fix(const SmoothExpr& a, int axis, const Rational& value);
SmoothExpr ex_sum(const std::vector<SmoothExpr>& terms, int dim);

// flat positive gauge exp(-scale/dist(x,Z)), soft-min smoothed near ridges
SmoothExpr ex_dist_gauge(const SetDescriptor& set, const Region& region,
                         const Rational& scale = Rational(1));

// plateau cutoff from the convolution cascade, as a function of one coordinate
SmoothExpr ex_cutoff1d(std::vector<std::pair<Rational, Rational>> inner,
                       std::vector<Rational> widths, int axis, int dim = 1);
SmoothExpr ex_cutoff1d(std::shared_ptr<const CutoffModel> model, int axis,
                       int dim = 1);

// narrow the stored support to the slab lo <= x[axis] <= hi (either side
// optional).  The caller asserts the function truly vanishes outside.
SmoothExpr ex_clip_support(const SmoothExpr& e, int axis,
                           const std::optional<Rational>& lo,
                           const std::optional<Rational>& hi);

// fixed base cutoff tau((x-c)/eps): 1 on |x-c|<=eps/2, 0 on |x-c|>=eps
SmoothExpr ex_base_cutoff(int axis, const Rational& center, const Rational& eps,
                          int dim = 1);

// (x-p)^k / k! along an axis, exact rational coefficients
SmoothExpr ex_monomial(int axis, const Rational& p, int k, int dim = 1,
                       bool divide_factorial = true);

// sup-norm table of the base cutoff: max |tau^(r)|, r = 0..kMaxOrder,
// sampled densely and rounded up (3 significant digits of headroom)
const std::array<double, kMaxOrder + 1>& base_cutoff_sup();

}  // namespace bf
