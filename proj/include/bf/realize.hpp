#pragma once

#include <string>
#include <vector>

#include "bf/cutoff.hpp"
#include "bf/expr.hpp"
#include "bf/jets.hpp"
#include "bf/region.hpp"

namespace bf {

// Per-term scale schedule with certified tail bounds.  Row k of `tail` holds
// the bounds B_{k,l} for l = 0..k-1 (the sup norm of the l-th derivative of
// term k); each row must stay within budget[k] = 1/k!.  Terms that are absent
// keep an empty row.
struct Schedule {
  std::vector<std::string> labels;
  std::vector<Rational> eps;
  std::vector<std::vector<double>> tail;
  std::vector<double> budget;
  std::vector<std::string> warnings;

  // eps positive and nonincreasing, every tail entry within budget
  void check() const;
  json to_json() const;
};

struct Realization {
  SmoothExpr f;
  std::vector<Schedule> schedules;  // one per base point / stratum
  json report;
};

// Single-jet realization: derivatives at the base point match the jet exactly
// (each term's cutoff is identically 1 near the base), supported near it.
Realization borel_realize(const Jet& jet, const Region& region);

// Simultaneous realization at several points (point strata only, dim 1 or 2).
Realization multi_borel(const JetField& field, const Region& region);

// Point strata plus axis-aligned open segments carrying transverse data.
Realization whitney_extend_strata(const JetField& field, const Region& region);

// ---- filtered assembly ----

struct PrefixTerm {
  SmoothExpr g;
  int declared_order = 0;  // claimed vanishing order on Z, >= its term index
};

struct CompletionPrefix {
  SetDescriptor Z;
  std::vector<PrefixTerm> terms;  // terms[i] is term j = i+1
};

struct FilteredRealization {
  SmoothExpr f;
  Schedule schedule;
  CompletionPrefix prefix;
  std::vector<SmoothExpr> taus;       // plateau cutoffs, tau_j = 1 near Z
  std::vector<SmoothExpr> terms;      // tau_j * g_j
  std::vector<CutoffCertificate> certificates;
  json report;

  SmoothExpr partial_sum(int N) const;  // sum_{j<=N} g_j
  // f - partial_sum(N), assembled term by term so no cancellation of large
  // intermediates occurs: sum_{j<=N} (tau_j - 1) g_j + sum_{j>N} tau_j g_j
  SmoothExpr remainder(int N) const;
};

FilteredRealization realize_filtered(const CompletionPrefix& prefix,
                                     const Region& region);

// ---- certified plateau cutoffs as expressions ----

struct CutoffExpr {
  SmoothExpr expr;
  CutoffCertificate certificate;
};

// 1 on the given set, 0 once all widths are crossed, derivative bounds
// certified up to max_order.  In dimension 2 the set must be a single point
// (the transition is a coordinate product).
CutoffExpr hormander_cutoff(const SetDescriptor& inner,
                            const std::vector<Rational>& widths,
                            const Region& region, int max_order);

// ---- positivity repair ----

// f + M*g with g a distance gauge cut to vanish on the eps/2-neighbourhood of
// Z: derivatives on Z are untouched, and M is sized from measured sup|f| and
// the measured minimum of g so the result is positive off the
// eps-neighbourhood.  The report records both measurements.
SmoothExpr ensure_positive(const SmoothExpr& f, const SetDescriptor& Z,
                           const Rational& eps, const Region& region,
                           json* report = nullptr);

// Flat ramp along one axis: exactly 0 for t <= a, exactly 1 for
// a + margin <= t (all contact of infinite order); reversed if rising=false.
// Shared by the segment realizer and the flat-chain builder.
SmoothExpr flat_ramp(int axis, const Rational& a, const Rational& margin,
                     bool rising, int dim);

}  // namespace bf
