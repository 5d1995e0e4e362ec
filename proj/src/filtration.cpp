#include "bf/filtration.hpp"

#include <algorithm>
#include <climits>

namespace bf {

namespace {

// multiplicity sentinel for "grows without bound" (rule-certified)
constexpr int kUnbounded = INT_MAX / 4;

Rational fact_rat(int n) {
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return Rational(f, 1);
}

Rational rabs(const Rational& x) { return x < 0 ? -x : x; }

// monic expansion of prod (x - r)^m, ascending powers
std::vector<Rational> expand_roots(const std::map<Rational, int>& roots) {
  std::vector<Rational> c{Rational(1)};
  for (const auto& [r, m] : roots)
    for (int t = 0; t < m; ++t) {
      std::vector<Rational> nc(c.size() + 1, Rational(0));
      for (std::size_t i = 0; i < c.size(); ++i) {
        nc[i + 1] += c[i];
        nc[i] -= r * c[i];
      }
      c = std::move(nc);
    }
  return c;
}

int level_ord(const FiltrationLevel& L, const Rational& p) {
  auto it = L.roots.find(p);
  return it == L.roots.end() ? 0 : it->second;
}

std::vector<Rational> level_points(const FiltrationLevel& L, int i) {
  std::vector<Rational> out;
  for (const auto& [r, m] : L.roots)
    if (m >= i) out.push_back(r);
  return out;  // map order, already sorted
}

bool subset_sorted(const std::vector<Rational>& a,
                   const std::vector<Rational>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

json points_json(const std::vector<Rational>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(rat_to_json(p));
  return out;
}

void check_level_range(const PolyFiltration& F, int j_max) {
  if (j_max < 1 || j_max > F.size())
    throw validation_error("level horizon out of range: have " +
                           std::to_string(F.size()) + " levels, asked for " +
                           std::to_string(j_max));
}

}  // namespace

void PolyFiltration::validate() const {
  if (window[0] >= window[1]) throw validation_error("filtration window is empty");
  if (levels.empty()) throw validation_error("filtration has no levels");
  for (int j = 0; j < size(); ++j) {
    for (const auto& [r, m] : levels[j].roots) {
      if (m < 1)
        throw validation_error("level " + std::to_string(j + 1) +
                               ": multiplicity must be >= 1");
      if (r < window[0] || r > window[1])
        throw validation_error("level " + std::to_string(j + 1) +
                               ": root outside the window");
    }
    if (j > 0)
      for (const auto& [r, m] : levels[j - 1].roots)
        if (level_ord(levels[j], r) < m)
          throw validation_error(
              "not a descending chain: level " + std::to_string(j + 1) +
              " drops multiplicity at a root of level " + std::to_string(j));
  }
  if (rule.empty()) return;
  if (rule == "power") {
    for (int j = 1; j <= size(); ++j) {
      const auto& R = levels[j - 1].roots;
      if (R.size() != 1 || level_ord(levels[j - 1], Rational(0)) != j)
        throw validation_error("rule \"power\" does not match level " +
                               std::to_string(j));
    }
  } else if (rule == "reciprocal_roots") {
    for (int j = 1; j <= size(); ++j) {
      const auto& R = levels[j - 1].roots;
      if (static_cast<int>(R.size()) != j)
        throw validation_error("rule \"reciprocal_roots\" does not match level " +
                               std::to_string(j));
      for (int i = 1; i <= j; ++i)
        if (level_ord(levels[j - 1], Rational(1, i)) != i)
          throw validation_error(
              "rule \"reciprocal_roots\" does not match level " +
              std::to_string(j));
    }
  } else {
    throw validation_error("unknown generator rule: " + rule);
  }
}

std::vector<Rational> PolyFiltration::coeffs(int j) const {
  check_level_range(*this, j);
  return expand_roots(levels[j - 1].roots);
}

json PolyFiltration::to_json() const {
  json lv = json::array();
  for (const auto& L : levels) {
    json roots = json::array();
    for (const auto& [r, m] : L.roots)
      roots.push_back(json{{"root", rat_to_json(r)}, {"mult", m}});
    lv.push_back(json{{"roots", roots}});
  }
  json out{{"window", json{{"lo", rat_to_json(window[0])},
                           {"hi", rat_to_json(window[1])}}},
           {"levels", lv}};
  if (!rule.empty()) out["rule"] = rule;
  return out;
}

PolyFiltration PolyFiltration::from_json(const json& j) {
  PolyFiltration F;
  if (j.contains("window")) {
    F.window[0] = rat_from_json(j.at("window").at("lo"), "filtration.window.lo");
    F.window[1] = rat_from_json(j.at("window").at("hi"), "filtration.window.hi");
  }
  F.rule = j.value("rule", "");
  if (!j.contains("levels") || !j.at("levels").is_array())
    throw validation_error("filtration: \"levels\" array required");
  int jj = 0;
  for (const auto& lv : j.at("levels")) {
    ++jj;
    const std::string where = "filtration.levels[" + std::to_string(jj - 1) + "]";
    FiltrationLevel L;
    if (!lv.contains("roots") || !lv.at("roots").is_array())
      throw validation_error(where + ": \"roots\" array required");
    for (const auto& r : lv.at("roots")) {
      Rational root = rat_from_json(r.at("root"), where + ".root");
      int m = r.at("mult").get<int>();
      if (!L.roots.emplace(root, m).second)
        throw validation_error(where + ": duplicate root");
    }
    // optional coefficient list, cross-checked against the factored form:
    // it must be a nonzero rational multiple of the monic expansion
    if (lv.contains("coefficients")) {
      std::vector<Rational> c;
      for (const auto& e : lv.at("coefficients"))
        c.push_back(rat_from_json(e, where + ".coefficients"));
      std::vector<Rational> mono = expand_roots(L.roots);
      if (c.size() != mono.size() || c.back() == 0)
        throw validation_error(where +
                               ": coefficients disagree with the roots (degree)");
      for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] != mono[i] * c.back())
          throw validation_error(
              where + ": coefficients disagree with the roots at x^" +
              std::to_string(i));
    }
    F.levels.push_back(std::move(L));
  }
  F.validate();
  return F;
}

PolyFiltration power_filtration(int j_max, std::array<Rational, 2> window) {
  if (j_max < 1) throw validation_error("need at least one level");
  PolyFiltration F;
  F.window = window;
  F.rule = "power";
  for (int j = 1; j <= j_max; ++j) {
    FiltrationLevel L;
    L.roots[Rational(0)] = j;
    F.levels.push_back(std::move(L));
  }
  F.validate();
  return F;
}

PolyFiltration reciprocal_root_filtration(int j_max,
                                          std::array<Rational, 2> window) {
  if (j_max < 1) throw validation_error("need at least one level");
  PolyFiltration F;
  F.window = window;
  F.rule = "reciprocal_roots";
  for (int j = 1; j <= j_max; ++j) {
    FiltrationLevel L;
    for (int i = 1; i <= j; ++i) L.roots[Rational(1, i)] = i;
    F.levels.push_back(std::move(L));
  }
  F.validate();
  return F;
}

int ord_at(const PolyFiltration& F, int j, const Rational& p) {
  F.validate();
  check_level_range(F, j);
  if (p < F.window[0] || p > F.window[1])
    throw validation_error("ord_at: point outside the window");
  return level_ord(F.levels[j - 1], p);
}

OrderLoci order_loci(const PolyFiltration& F, int i_max, int j_max) {
  F.validate();
  check_level_range(F, j_max);
  if (i_max < 1) throw validation_error("order_loci: i_max must be >= 1");
  OrderLoci T;
  T.i_max = i_max;
  T.j_max = j_max;
  T.loci.resize(i_max);
  for (int i = 1; i <= i_max; ++i) {
    T.loci[i - 1].reserve(j_max);
    for (int j = 1; j <= j_max; ++j)
      T.loci[i - 1].push_back(level_points(F.levels[j - 1], i));
    T.horizon.push_back(T.loci[i - 1].back());
  }
  // the two monotonicity laws; descent was validated, so a violation here
  // means the data was not a filtration after all
  for (int i = 1; i <= i_max; ++i)
    for (int j = 1; j < j_max; ++j)
      if (!subset_sorted(T.loci[i - 1][j - 1], T.loci[i - 1][j]))
        throw validation_error("order locus shrinks from level " +
                               std::to_string(j) + " to " +
                               std::to_string(j + 1) + " at order " +
                               std::to_string(i));
  for (int i = 1; i < i_max; ++i)
    for (int j = 1; j <= j_max; ++j)
      if (!subset_sorted(T.loci[i][j - 1], T.loci[i - 1][j - 1]))
        throw validation_error("order-" + std::to_string(i + 1) +
                               " locus escapes the order-" + std::to_string(i) +
                               " locus at level " + std::to_string(j));
  return T;
}

json OrderLoci::to_json() const {
  json rows = json::array();
  for (int i = 1; i <= i_max; ++i) {
    json row = json::array();
    for (int j = 1; j <= j_max; ++j) row.push_back(points_json(loci[i - 1][j - 1]));
    rows.push_back(std::move(row));
  }
  json hz = json::array();
  for (const auto& h : horizon) hz.push_back(points_json(h));
  return json{{"i_max", i_max}, {"j_max", j_max}, {"loci", rows}, {"horizon", hz}};
}

StabilizationReport stabilization_check(const PolyFiltration& F, int i_max,
                                        int j_max) {
  F.validate();
  check_level_range(F, j_max);
  if (i_max < 1) throw validation_error("stabilization: i_max must be >= 1");
  StabilizationReport R;
  R.i_max = i_max;
  R.j_max = j_max;
  for (int i = 1; i <= i_max; ++i) {
    ChainVerdict v;
    v.i = i;
    std::vector<std::vector<Rational>> V(j_max);
    for (int j = 1; j <= j_max; ++j) V[j - 1] = level_points(F.levels[j - 1], i);
    v.j0 = j_max;
    while (v.j0 > 1 && V[v.j0 - 2] == V[j_max - 1]) --v.j0;
    if (F.rule == "reciprocal_roots") {
      // level j adds the new point 1/j once j >= i, at every level, forever
      v.grows = true;
      for (int j = i; j <= std::max(j_max, i + 2); ++j)
        v.growth_points.push_back(Rational(1, j));
      v.note = "rule-certified growth: level j acquires the point 1/j for every j >= " +
               std::to_string(i);
    } else if (F.rule == "power") {
      if (i <= j_max)
        v.note = "rule-certified: settled at level " + std::to_string(i) +
                 ", constant afterwards";
      else
        v.note = "rule-certified: locus first appears at level " +
                 std::to_string(i) + ", beyond the horizon";
    } else {
      if (v.j0 == j_max && j_max > 1 && !(V[j_max - 2] == V[j_max - 1]))
        v.note = "still changing at the horizon; no generator rule, undetermined";
      else
        v.note = "constant from level " + std::to_string(v.j0) +
                 " to the horizon; behaviour beyond undetermined without a rule";
    }
    R.any_growth = R.any_growth || v.grows;
    R.chains.push_back(std::move(v));
  }
  return R;
}

json StabilizationReport::to_json() const {
  json rows = json::array();
  for (const auto& v : chains)
    rows.push_back(json{{"i", v.i},
                        {"j0", v.j0},
                        {"grows", v.grows},
                        {"growth_points", points_json(v.growth_points)},
                        {"note", v.note}});
  return json{{"i_max", i_max},
              {"j_max", j_max},
              {"any_growth", any_growth},
              {"chains", rows}};
}

FormVerdict necessary_form_check(const PolyFiltration& F, int j_max) {
  F.validate();
  check_level_range(F, j_max);
  const auto& top = F.levels[j_max - 1].roots;
  int i_eff = 1;
  for (const auto& [r, m] : top) i_eff = std::max(i_eff, m);
  StabilizationReport stab = stabilization_check(F, i_eff, j_max);

  FormVerdict V;
  if (stab.any_growth) {
    for (const auto& c : stab.chains)
      if (c.grows) {
        V.obstruction_i = c.i;
        V.obstruction_points = c.growth_points;
        break;
      }
    V.ok = false;
    V.note = "an order locus keeps acquiring new points, so no two-sided "
             "polynomial sandwich exists at any level";
    return V;
  }

  V.ok = true;
  V.Z = level_points(F.levels[j_max - 1], 1);
  // multiplicity of the chain intersection at each root: the horizon value,
  // except where a rule certifies unbounded growth
  std::map<Rational, int> mult_inf;
  for (const auto& [r, m] : top)
    mult_inf[r] = (F.rule == "power") ? kUnbounded : m;

  for (int j = 1; j <= j_max; ++j) {
    // the middle ideal I_inf + (I_j intersect M_Z^j) is principal with
    // multiplicity min(inf, max(ord_j, j)) at each point of Z
    std::map<Rational, int> middle;
    for (const auto& [p, minf] : mult_inf)
      middle[p] = std::min(minf, std::max(level_ord(F.levels[j - 1], p), j));

    int kj = 0;
    for (int k = 1; k <= j_max && kj == 0; ++k) {
      bool ok = true;
      for (const auto& [p, m] : middle)
        if (level_ord(F.levels[k - 1], p) < m) {
          ok = false;
          break;
        }
      if (ok) kj = k;
    }
    if (kj == 0)
      throw construction_error("sandwich lower index escapes the horizon at level " +
                               std::to_string(j));
    int dj = 0;
    for (int d = j_max; d >= 1 && dj == 0; --d) {
      bool ok = true;
      for (const auto& [p, m] : F.levels[d - 1].roots)
        if (m > middle[p]) {
          ok = false;
          break;
        }
      if (ok) dj = d;
    }
    if (dj == 0)
      throw construction_error("sandwich upper index escapes the horizon at level " +
                               std::to_string(j));
    V.indices.push_back({kj, dj});
  }
  V.note = F.rule.empty()
               ? "horizon verdict: no generator rule, growth beyond level " +
                     std::to_string(j_max) + " not excluded"
               : "rule-certified";
  return V;
}

json FormVerdict::to_json() const {
  json out{{"ok", ok}, {"note", note}};
  if (ok) {
    out["Z"] = points_json(Z);
    json idx = json::array();
    for (const auto& kd : indices)
      idx.push_back(json{{"k", kd[0]}, {"d", kd[1]}});
    out["indices"] = idx;
  } else {
    out["obstruction_i"] = obstruction_i;
    out["obstruction_points"] = points_json(obstruction_points);
  }
  return out;
}

UnboundedWitness witness_unbounded(const PolyFiltration& F, int j_max) {
  F.validate();
  check_level_range(F, j_max);
  if (F.rule != "reciprocal_roots") {
    if (F.rule == "power")
      throw validation_error("no witness: every order locus of this chain settles");
    throw validation_error("no witness: growth beyond the horizon is "
                           "undetermined without a generator rule");
  }

  // p_j is the root joining the chain right after level j; keep each bump
  // ball three times closer than the nearest root or neighbouring witness
  // point, so the balls are pairwise disjoint and every other term vanishes
  // identically near p_j
  UnboundedWitness W;
  for (int j = 1; j <= j_max; ++j) {
    WitnessTerm t;
    t.j = j;
    t.point = Rational(1, j + 1);
    Rational mind = rabs(t.point);  // distance to the accumulation point 0
    for (int n = 1; n <= j_max + 2; ++n) {
      if (n == j + 1) continue;
      Rational d = rabs(t.point - Rational(1, n));
      if (d < mind) mind = d;
    }
    t.radius = mind / 3;
    if (t.point - t.radius < F.window[0] || t.point + t.radius > F.window[1])
      throw construction_error("witness ball leaves the window");

    // keep the generator in factored form: centered factors evaluate stably
    // where the expanded coefficients would cancel catastrophically
    SmoothExpr poly = ex_const(Rational(1), 1);
    Rational pv(1);
    for (const auto& [r, m] : F.levels[j - 1].roots) {
      poly = ex_mul(poly, ex_monomial(0, r, m, 1, false));
      Rational d = t.point - r;
      for (int q = 0; q < m; ++q) pv *= d;
    }
    if (pv == 0) throw construction_error("witness point is a root");
    t.scale = fact_rat(j) / pv;
    t.g = ex_scale(ex_mul(poly, ex_base_cutoff(0, t.point, t.radius, 1)),
                   t.scale);
    t.value = t.g.eval_exact({t.point, Rational(0)});
    if (t.value != fact_rat(j))
      throw construction_error("witness normalization failed at level " +
                               std::to_string(j));
    W.terms.push_back(std::move(t));
  }
  for (std::size_t a = 0; a + 1 < W.terms.size(); ++a)
    if (W.terms[a + 1].point + W.terms[a + 1].radius >=
        W.terms[a].point - W.terms[a].radius)
      throw construction_error("witness balls overlap");

  json terms = json::array();
  for (const auto& t : W.terms)
    terms.push_back(json{{"j", t.j},
                         {"point", rat_to_json(t.point)},
                         {"radius", rat_to_json(t.radius)},
                         {"scale", rat_to_json(t.scale)},
                         {"value", rat_to_json(t.value)}});
  // exact partial-sum values: S_N(p_N) = N!, since every other term is
  // supported away from p_N
  json sums = json::array();
  for (int N = 1; N <= j_max; ++N) {
    Rational s(0);
    for (int i = 0; i < N; ++i)
      s += W.terms[i].g.eval_exact({W.terms[N - 1].point, Rational(0)});
    if (s < fact_rat(N))
      throw verification_error("partial sum below the factorial bound at N = " +
                               std::to_string(N));
    sums.push_back(json{{"N", N},
                        {"at", rat_to_json(W.terms[N - 1].point)},
                        {"value", rat_to_json(s)},
                        {"bound", rat_to_json(fact_rat(N))}});
  }
  W.report = json{{"terms", terms}, {"partial_sums", sums}};
  return W;
}

SmoothExpr UnboundedWitness::partial_sum(int N) const {
  if (N < 1 || N > static_cast<int>(terms.size()))
    throw validation_error("partial sum index out of range");
  std::vector<SmoothExpr> g;
  for (int i = 0; i < N; ++i) g.push_back(terms[i].g);
  return ex_sum(g, 1);
}

}  // namespace bf
