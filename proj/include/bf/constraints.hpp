#pragma once

#include <optional>
#include <vector>

#include "bf/common.hpp"
#include "bf/expr.hpp"
#include "bf/realize.hpp"
#include "bf/region.hpp"

namespace bf {

// One linear condition on a function: a derivative value at a point, or a
// weighted moment over a box.
struct Functional {
  enum class Kind { Punctual, Moment };
  Kind kind = Kind::Punctual;
  // punctual: d^order f (base) = target
  std::array<Rational, 2> base{Rational(0), Rational(0)};
  std::array<int, 2> order{0, 0};
  // moment: integral of weight * f over the box = target
  std::optional<SmoothExpr> weight;
  Box box;
  double target = 0.0;

  json to_json() const;
  static Functional from_json(const json& j, int dim, const std::string& where);
};

// evaluate the functional on a concrete function (punctual derivatives via
// the Taylor tables, moments via adaptive Simpson at 1e-12)
double apply_functional(const Functional& l, const SmoothExpr& f);

// Correct f0 by a finite bump dictionary supported off the eps/2
// neighbourhood of Z so that every condition holds: the output satisfies
// l_k(f) = c_k to 1e-8 while every derivative of f on Z stays identical to
// f0 (the correction vanishes on a neighbourhood of Z).  Bump centers are
// chosen greedily from a candidate grid, each pick maximizing the component
// of its condition vector orthogonal to the picks so far; the square system
// is solved by column-pivoted QR and rejected when the condition estimate
// exceeds 1e10, naming the closest-to-dependent pair of conditions.
SmoothExpr solve_constraints(const SmoothExpr& f0, const SetDescriptor& Z,
                             const Rational& eps,
                             const std::vector<Functional>& conds,
                             const Region& region, json* report = nullptr);

// Boundary decay envelopes q_0..q_K: positive inside the region, falling to
// zero toward the boundary.
struct DecaySpec {
  std::vector<SmoothExpr> envelopes;

  int max_order() const { return static_cast<int>(envelopes.size()) - 1; }
  json to_json() const;
  static DecaySpec from_json(const json& j);
};

// Multiply each prefix term by a plateau window that vanishes inside a
// j-dependent boundary collar, then reassemble with the filtered realization.
// The result agrees with the plain assembly away from the shrinking collars
// (in particular near a compactly embedded Z nothing changes), vanishes
// identically in the deepest collar, and the report tabulates the ratio
// ladders |f^(k)| / q_k along both boundary approaches for k <= K.  Ratio
// checks are sampled on collars, not germ-level: reports carry
// "collar_verified_only": true.
SmoothExpr decay_wrap(const CompletionPrefix& prefix, const DecaySpec& spec,
                      const Region& region, json* report = nullptr);

}  // namespace bf
