#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "bf/common.hpp"
#include "bf/expr.hpp"

namespace bf {

// Descending chain of principal polynomial ideals I_1 >= I_2 >= ... over a
// window, each generator P_j given in factored form by its rational roots
// with multiplicities.  Descent means every root of P_j persists in P_{j+1}
// with at least the same multiplicity, so I_{j+1} subset I_j is checkable
// exactly.
struct FiltrationLevel {
  std::map<Rational, int> roots;  // root -> multiplicity >= 1
};

struct PolyFiltration {
  std::vector<FiltrationLevel> levels;  // levels[j-1] generates I_j
  std::array<Rational, 2> window{Rational(-2), Rational(2)};
  // Optional generator rule behind the data.  A recognized rule carries exact
  // knowledge about levels beyond the ones supplied:
  //   "power"             P_j = x^j
  //   "reciprocal_roots"  P_j = prod_{i=1..j} (x - 1/i)^i
  std::string rule;

  int size() const { return static_cast<int>(levels.size()); }
  void validate() const;

  // expanded monic coefficients of P_j, ascending powers
  std::vector<Rational> coeffs(int j) const;

  json to_json() const;
  static PolyFiltration from_json(const json& j);
};

PolyFiltration power_filtration(int j_max,
                                std::array<Rational, 2> window = {
                                    Rational(-2), Rational(2)});
PolyFiltration reciprocal_root_filtration(int j_max,
                                          std::array<Rational, 2> window = {
                                              Rational(-2), Rational(2)});

// multiplicity of p as a root of P_j; 0 when p is not a root
int ord_at(const PolyFiltration& F, int j, const Rational& p);

// V_i(I_j): points of the window where every element of I_j vanishes to
// order >= i.  For a principal ideal this is the set of roots of P_j with
// multiplicity >= i, so the table is exact.
struct OrderLoci {
  int i_max = 0;
  int j_max = 0;
  std::vector<std::vector<std::vector<Rational>>> loci;  // loci[i-1][j-1]
  std::vector<std::vector<Rational>> horizon;            // V_i(I_{j_max})
  json to_json() const;
};
OrderLoci order_loci(const PolyFiltration& F, int i_max, int j_max);

// Behaviour of the chain j -> V_i(I_j) for each fixed i.  Inside the horizon
// the least stabilization index is read off the table.  What happens beyond
// the horizon is only decidable when a generator rule is present; otherwise
// the verdict is explicitly marked undetermined.
struct ChainVerdict {
  int i = 0;
  int j0 = 0;        // least j with V_i(I_j) = V_i(I_{j_max})
  bool grows = false;  // rule-certified: the locus gains new points forever
  std::vector<Rational> growth_points;  // new entries, one per level past i
  std::string note;
};
struct StabilizationReport {
  int i_max = 0;
  int j_max = 0;
  std::vector<ChainVerdict> chains;
  bool any_growth = false;
  json to_json() const;
};
StabilizationReport stabilization_check(const PolyFiltration& F, int i_max,
                                        int j_max);

// Two-sided polynomial sandwich test.  When every order locus settles, each
// level admits exact indices k_j >= j >= d_j ... see FormVerdict::indices:
// I_{k_j}  subset  I_inf + (I_j intersect M_Z^j)  subset  I_{d_j},
// where M_Z is the vanishing ideal of the settled first-order locus Z and
// I_inf the intersection of the whole chain.  All three ideals are principal
// here, so the containments reduce to multiplicity comparisons at the roots.
struct FormVerdict {
  bool ok = false;
  std::vector<Rational> Z;                   // settled first-order locus
  std::vector<std::array<int, 2>> indices;   // per level j: {k_j, d_j}
  int obstruction_i = 0;                     // on failure: the growing chain
  std::vector<Rational> obstruction_points;  // its new points, level by level
  std::string note;
  json to_json() const;
};
FormVerdict necessary_form_check(const PolyFiltration& F, int j_max);

// Constructive unboundedness witness for a rule-certified growing chain:
// term j is g_j = scale_j * P_j * bump_j with g_j in I_j, supported in a ball
// around the root p_j that joins the chain right after level j.  The balls
// are pairwise disjoint and clear of every root, the scale is the exact
// rational making g_j(p_j) = j!, so partial sums evaluate exactly and
// S_N(p_N) = N! grows beyond every polynomial bound.
struct WitnessTerm {
  int j = 0;
  Rational point;
  Rational radius;
  Rational scale;
  Rational value;  // exact g_j(point), equals j!
  SmoothExpr g;
};
struct UnboundedWitness {
  std::vector<WitnessTerm> terms;
  json report;
  SmoothExpr partial_sum(int N) const;  // g_1 + ... + g_N
};
UnboundedWitness witness_unbounded(const PolyFiltration& F, int j_max);

}  // namespace bf
