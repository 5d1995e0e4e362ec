#include "bf/realize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "bf/verify.hpp"

namespace bf {

namespace {

constexpr double kScaleWarnAt = 1e-9;
constexpr double kScaleAbort = 1e-280;

double logsumexp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// log S(k,l) = log sum_{i<=min(k,l)} C(l,i) * (k)_i * sup|tau^(l-i)|
// which bounds sup |d^l [ (x-p)^k tau((x-p)/eps) ]| by S(k,l) eps^(k-l).
double log_tail_factor(int k, int l) {
  const auto& M = base_cutoff_sup();
  if (l > kMaxOrder)
    throw construction_error("tail order beyond the tabulated cutoff range");
  std::vector<double> parts;
  for (int i = 0; i <= std::min(k, l); ++i)
    parts.push_back(lbinom(l, i) + lpoch(k, i) +
                    std::log(M[std::size_t(l - i)]));
  return logsumexp(parts);
}

// Halve eps until ok(eps) holds.  Warns once when the scale drops below the
// point where double evaluation starts to dominate the error; aborts near the
// representable floor.
template <class OkFn>
Rational halve_until(Rational eps, const OkFn& ok, const std::string& label,
                     std::vector<std::string>* warnings) {
  bool warned = false;
  while (!ok(eps)) {
    eps /= 2;
    double e = to_double(eps);
    if (!warned && e < kScaleWarnAt) {
      if (warnings)
        warnings->push_back(label +
                            ": scale fell below 1e-9; continuing, but double "
                            "evaluation is now the accuracy limit");
      warned = true;
    }
    if (e < kScaleAbort)
      throw construction_error(label +
                               ": no feasible scale above the floating-point "
                               "floor");
  }
  return eps;
}

Rational rat_min(const Rational& a, const Rational& b) { return a < b ? a : b; }
Rational rat_max(const Rational& a, const Rational& b) { return a < b ? b : a; }
Rational rat_abs(const Rational& a) { return a < 0 ? Rational(-a) : a; }

Rational interior_cap(const std::array<Rational, 2>& p, const Box& box) {
  Rational cap = rat_min(box.hi[0] - p[0], p[0] - box.lo[0]);
  if (box.dim == 2)
    cap = rat_min(cap, rat_min(box.hi[1] - p[1], p[1] - box.lo[1]));
  return cap;
}

Rational cheb_dist(const std::array<Rational, 2>& p,
                   const std::array<Rational, 2>& q, int dim) {
  Rational d = rat_abs(p[0] - q[0]);
  if (dim == 2) d = rat_max(d, rat_abs(p[1] - q[1]));
  return d;
}

// ---- scheduled bump sums around a single base point ----

// Tail feasibility of term  a (x-p)^k/k! tau_eps  at scale eps: every
// derivative of total order l < k must stay below the 1/k! budget.
bool point_ok_1d(double la, int k, const Rational& eps,
                 std::vector<double>* row) {
  double le = std::log(to_double(eps));
  bool good = true;
  if (row) row->clear();
  for (int l = 0; l < k; ++l) {
    double lb = la + (k - l) * le + log_tail_factor(k, l);
    if (row) row->push_back(std::exp(lb - lfact(k)));
    if (lb > 0.0) good = false;
  }
  return good;
}

bool point_ok_2d(double la, int k1, int k2, const Rational& eps,
                 std::vector<double>* row) {
  double le = std::log(to_double(eps));
  int K = k1 + k2;
  bool good = true;
  if (row) row->clear();
  for (int l1 = 0; l1 <= K - 1; ++l1)
    for (int l2 = 0; l1 + l2 <= K - 1; ++l2) {
      double lb = la + (K - l1 - l2) * le + log_tail_factor(k1, l1) +
                  log_tail_factor(k2, l2);
      if (row) row->push_back(std::exp(lb - lfact(k1) - lfact(k2)));
      if (lb > 0.0) good = false;
    }
  return good;
}

struct CoreOut {
  std::vector<SmoothExpr> terms;
  Schedule sch;
};

// One bump per prescribed derivative, scales chosen by halving so that each
// term's lower-order derivatives stay below its budget.  Scales are reused as
// the starting point for the next term, so the sequence is nonincreasing.
CoreOut borel_core(const Jet& jet, const Rational& cap,
                   const std::string& tag) {
  CoreOut out;
  const int dim = jet.dim;
  const int K = jet.order;
  std::size_t want = dim == 1 ? std::size_t(K) + 1
                              : std::size_t(K + 1) * std::size_t(K + 2) / 2;
  if (jet.a.size() != want)
    throw validation_error(tag + ": jet storage does not match its order");
  for (double c : jet.a)
    if (!std::isfinite(c))
      throw validation_error(tag + ": jet has a non-finite coefficient");

  Rational prev = cap;
  auto push_row = [&](const std::string& lab, const Rational& eps,
                      std::vector<double> tail, double budget) {
    out.sch.labels.push_back(lab);
    out.sch.eps.push_back(eps);
    out.sch.tail.push_back(std::move(tail));
    out.sch.budget.push_back(budget);
  };

  if (dim == 1) {
    const Rational& p = jet.base[0];
    for (int k = 0; k <= K; ++k) {
      std::string lab = tag + "k=" + std::to_string(k);
      double a = jet.at(k);
      double budget = std::exp(-lfact(k));
      if (a == 0.0) {
        push_row(lab + " (zero)", prev, {}, budget);
        continue;
      }
      double la = std::log(std::fabs(a));
      Rational eps = halve_until(
          prev, [&](const Rational& e) { return point_ok_1d(la, k, e, nullptr); },
          lab, &out.sch.warnings);
      prev = eps;
      std::vector<double> row;
      point_ok_1d(la, k, eps, &row);
      push_row(lab, eps, std::move(row), budget);
      out.terms.push_back(ex_mul(
          ex_scale(ex_monomial(0, p, k, 1, true), rat_of_double(a)),
          ex_base_cutoff(0, p, eps, 1)));
    }
  } else {
    for (int d = 0; d <= K; ++d)
      for (int j = 0; j <= d; ++j) {
        int i = d - j;
        std::string lab =
            tag + "k=(" + std::to_string(i) + "," + std::to_string(j) + ")";
        double a = jet.at(i, j);
        double budget = std::exp(-lfact(i) - lfact(j));
        if (a == 0.0) {
          push_row(lab + " (zero)", prev, {}, budget);
          continue;
        }
        double la = std::log(std::fabs(a));
        Rational eps = halve_until(
            prev,
            [&](const Rational& e) { return point_ok_2d(la, i, j, e, nullptr); },
            lab, &out.sch.warnings);
        prev = eps;
        std::vector<double> row;
        point_ok_2d(la, i, j, eps, &row);
        push_row(lab, eps, std::move(row), budget);
        SmoothExpr mono = ex_mul(ex_monomial(0, jet.base[0], i, 2, true),
                                 ex_monomial(1, jet.base[1], j, 2, true));
        SmoothExpr cut = ex_mul(ex_base_cutoff(0, jet.base[0], eps, 2),
                                ex_base_cutoff(1, jet.base[1], eps, 2));
        out.terms.push_back(ex_mul(ex_scale(mono, rat_of_double(a)), cut));
      }
  }
  out.sch.check();
  return out;
}

json residual_entry(const std::string& what, double value) {
  return json{{"where", what}, {"max_abs", value}};
}

}  // namespace

// ---- Schedule ----

void Schedule::check() const {
  std::size_t n = labels.size();
  if (eps.size() != n || tail.size() != n || budget.size() != n)
    throw validation_error("schedule arrays out of step");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(eps[i] > 0)) throw validation_error("schedule scale must be positive");
    if (i > 0 && eps[i] > eps[i - 1])
      throw validation_error("schedule scales must be nonincreasing");
    for (double b : tail[i])
      if (!(b <= budget[i] * (1.0 + 1e-9)))
        throw construction_error("scheduled tail bound exceeds its budget");
  }
}

json Schedule::to_json() const {
  json rows = json::array();
  for (std::size_t i = 0; i < labels.size(); ++i)
    rows.push_back(json{{"label", labels[i]},
                        {"eps", rat_to_json(eps[i])},
                        {"eps_value", to_double(eps[i])},
                        {"tail", tail[i]},
                        {"budget", budget[i]}});
  return json{{"rows", rows}, {"warnings", warnings}};
}

// ---- single-point realization ----

Realization borel_realize(const Jet& jet, const Region& region) {
  if (jet.dim != region.dim())
    throw validation_error("jet and region dimensions differ");
  if (jet.order < 0 || jet.order > kMaxOrder)
    throw validation_error("jet order out of range");
  if (!region.box.contains(jet.base_d()))
    throw validation_error("base point lies outside the region");
  Rational cap = interior_cap(jet.base, region.box);
  if (!(cap > 0))
    throw validation_error("base point must be interior to the region");

  CoreOut core = borel_core(jet, cap, "");
  SmoothExpr f = core.terms.empty() ? ex_const(Rational(0), jet.dim)
                                    : ex_sum(core.terms, jet.dim);

  // the assembled sum reproduces the data: measure and report
  auto d = f.derivs(jet.base_d(), jet.order);
  double worst = 0.0;
  for (std::size_t i = 0; i < jet.a.size(); ++i)
    worst = std::max(worst, std::abs(d[i] - jet.a[i]));

  json report{{"op", "borel"},
              {"dim", jet.dim},
              {"order", jet.order},
              {"terms", core.terms.size()},
              {"cap", to_double(cap)},
              {"jet_residual", worst},
              {"schedule", core.sch.to_json()}};
  Realization out{f, {core.sch}, std::move(report)};
  return out;
}

// ---- several points at once ----

Realization multi_borel(const JetField& field, const Region& region) {
  field.validate();
  if (field.dim != region.dim())
    throw validation_error("jet field and region dimensions differ");
  if (field.strata.empty()) throw validation_error("no data to realize");
  for (const auto& s : field.strata)
    if (s.kind != Stratum::Kind::Point)
      throw validation_error(
          "point realization accepts point strata only; use the strata "
          "extension for segments");

  const std::size_t n = field.strata.size();
  std::vector<Rational> caps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Jet& J = field.strata[i].jet;
    if (!region.box.contains(J.base_d()))
      throw validation_error("base point lies outside the region");
    Rational cap = interior_cap(J.base, region.box);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      Rational sep =
          cheb_dist(J.base, field.strata[j].jet.base, field.dim);
      cap = rat_min(cap, sep / 2);
    }
    if (!(cap > 0))
      throw validation_error(
          "base points must be separated and interior to the region");
    caps[i] = cap;
  }

  std::vector<SmoothExpr> terms;
  std::vector<Schedule> schedules;
  json capj = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::string tag = "p" + std::to_string(i) + " ";
    CoreOut core = borel_core(field.strata[i].jet, caps[i], tag);
    for (auto& t : core.terms) terms.push_back(std::move(t));
    schedules.push_back(std::move(core.sch));
    capj.push_back(to_double(caps[i]));
  }
  SmoothExpr f = terms.empty() ? ex_const(Rational(0), field.dim)
                               : ex_sum(terms, field.dim);

  double worst = 0.0;
  for (const auto& s : field.strata) {
    auto d = f.derivs(s.jet.base_d(), s.jet.order);
    for (std::size_t q = 0; q < s.jet.a.size(); ++q)
      worst = std::max(worst, std::abs(d[q] - s.jet.a[q]));
  }

  json report{{"op", "multi_point"},
              {"points", n},
              {"caps", capj},
              {"jet_residual", worst}};
  json sj = json::array();
  for (const auto& s : schedules) sj.push_back(s.to_json());
  report["schedules"] = sj;
  return Realization{f, std::move(schedules), std::move(report)};
}

// ---- flat ramp ----

// Smooth 0-to-1 step in one coordinate: exactly 0 on the closed outer side of
// `edge`, exactly 1 once `margin` past it.  phi(u) / (phi(u) + phi(1-u)) with
// u the normalized offset; the denominator never drops below 2/e^2 > 1/4.
SmoothExpr flat_ramp(int axis, const Rational& edge, const Rational& margin,
                     bool rising, int dim) {
  if (dim < 1 || dim > 2) throw validation_error("ramp dimension must be 1 or 2");
  if (axis < 0 || axis >= dim) throw validation_error("ramp axis out of range");
  if (!(margin > 0)) throw validation_error("ramp margin must be positive");
  Rational slope = Rational(1) / margin;
  if (!rising) slope = -slope;
  Rational c0 = -edge * slope;
  Rational sx = axis == 0 ? slope : Rational(0);
  Rational sy = axis == 1 ? slope : Rational(0);
  SmoothExpr u = ex_lin(c0, sx, sy, dim);
  SmoothExpr w = ex_lin(Rational(1) - c0, -sx, -sy, dim);  // 1 - u
  SmoothExpr num = ex_phi(u);
  SmoothExpr den = ex_add(num, ex_phi(w));
  SmoothExpr r = ex_div(num, den, Rational(1, 4));
  std::optional<Rational> lo, hi;
  if (rising)
    lo = edge;
  else
    hi = edge;
  return ex_clip_support(r, axis, lo, hi);
}

// ---- strata extension ----

namespace {

struct StratumBox {
  std::array<Rational, 2> lo, hi;
};

StratumBox stratum_box(const Stratum& s) {
  StratumBox b;
  if (s.kind == Stratum::Kind::Point) {
    b.lo = s.jet.base;
    b.hi = s.jet.base;
  } else {
    int run = s.axis, tr = 1 - s.axis;
    b.lo[run] = s.a;
    b.hi[run] = s.b;
    b.lo[tr] = s.fixed;
    b.hi[tr] = s.fixed;
  }
  return b;
}

Rational box_gap(const StratumBox& x, const StratumBox& y, int dim) {
  Rational g(0);
  for (int ax = 0; ax < dim; ++ax) {
    Rational lo_gap = y.lo[ax] - x.hi[ax];
    Rational hi_gap = x.lo[ax] - y.hi[ax];
    g = rat_max(g, rat_max(lo_gap, hi_gap));
  }
  return g;
}

double horner_at(const std::vector<Rational>& c, double s) {
  double acc = 0.0;
  for (std::size_t m = c.size(); m-- > 0;) acc = acc * s + to_double(c[m]);
  return acc;
}

struct SegmentOut {
  std::vector<SmoothExpr> terms;
  Schedule sch;
};

// Extend data prescribed along an axis-parallel open segment: transverse
// profile polynomials q_k become  q_k(s) rho(s) t^k/k! tau_k(t), with rho the
// flat ramp pair confined to the segment and tau_k a base cutoff whose scale
// is scheduled like the point case, with the run factor's measured bounds
// folded in.
SegmentOut segment_core(const Stratum& s, const Rational& cap,
                        const std::string& tag) {
  SegmentOut out;
  const int run = s.axis, tr = 1 - s.axis;
  const Rational &a = s.a, &b = s.b, &c = s.fixed;
  const int Kt = int(s.transverse.size()) - 1;
  if (Kt < 0) throw validation_error(tag + "segment prescribes no data");

  Rational eta = (b - a) / 10;
  SmoothExpr ramp = ex_mul(flat_ramp(run, a, eta, true, 2),
                           flat_ramp(run, b, eta, false, 2));

  // measured sup of the ramp profile's derivatives over the run interval
  SmoothExpr ramp1 =
      ex_mul(flat_ramp(0, a, eta, true, 1), flat_ramp(0, b, eta, false, 1));
  Region run_region;
  run_region.box.dim = 1;
  run_region.box.lo[0] = a;
  run_region.box.hi[0] = b;
  std::vector<double> mr =
      sup_norm(ramp1, run_region, std::max(0, Kt - 1));

  // coefficient bound for |q_k^(i)| on [a,b]
  double R = std::max(std::abs(to_double(a)), std::abs(to_double(b)));
  auto poly_bound = [&](int k, int i) {
    const auto& coef = s.transverse[std::size_t(k)];
    double tot = 0.0;
    for (std::size_t m = std::size_t(i); m < coef.size(); ++m) {
      double f = std::abs(to_double(coef[m]));
      for (int q = 0; q < i; ++q) f *= double(m - std::size_t(q));
      for (std::size_t q = std::size_t(i); q < m; ++q) f *= std::max(R, 1.0);
      tot += f;
    }
    return tot;
  };
  auto run_factor = [&](int k, int l1) {
    double tot = 0.0;
    for (int i = 0; i <= l1; ++i)
      tot += binom(l1, i) * poly_bound(k, i) * mr[std::size_t(l1 - i)];
    return tot;
  };

  auto seg_ok = [&](int k, const Rational& eps, std::vector<double>* row) {
    double le = std::log(to_double(eps));
    bool good = true;
    if (row) row->clear();
    for (int l1 = 0; l1 <= k - 1; ++l1) {
      double rf = run_factor(k, l1);
      double lrf = rf > 0 ? std::log(rf)
                          : -std::numeric_limits<double>::infinity();
      for (int l2 = 0; l1 + l2 <= k - 1; ++l2) {
        double lb = lrf + (k - l2) * le + log_tail_factor(k, l2);
        if (row) row->push_back(std::exp(lb - lfact(k)));
        if (lb > 0.0) good = false;
      }
    }
    return good;
  };

  Rational prev = cap;
  for (int k = 0; k <= Kt; ++k) {
    std::string lab = tag + "q" + std::to_string(k);
    double budget = std::exp(-lfact(k));
    bool zero = true;
    for (const auto& cm : s.transverse[std::size_t(k)])
      if (cm != 0) zero = false;
    if (zero) {
      out.sch.labels.push_back(lab + " (zero)");
      out.sch.eps.push_back(prev);
      out.sch.tail.emplace_back();
      out.sch.budget.push_back(budget);
      continue;
    }
    Rational eps = halve_until(
        prev, [&](const Rational& e) { return seg_ok(k, e, nullptr); }, lab,
        &out.sch.warnings);
    prev = eps;
    std::vector<double> row;
    seg_ok(k, eps, &row);
    out.sch.labels.push_back(lab);
    out.sch.eps.push_back(eps);
    out.sch.tail.push_back(std::move(row));
    out.sch.budget.push_back(budget);

    SmoothExpr qk = ex_poly1(s.transverse[std::size_t(k)], run, 2);
    SmoothExpr mono = ex_monomial(tr, c, k, 2, true);
    SmoothExpr cut = ex_base_cutoff(tr, c, eps, 2);
    out.terms.push_back(ex_mul(ex_mul(qk, ramp), ex_mul(mono, cut)));
  }
  out.sch.check();
  return out;
}

}  // namespace

Realization whitney_extend_strata(const JetField& field, const Region& region) {
  field.validate();
  if (field.dim != region.dim())
    throw validation_error("jet field and region dimensions differ");
  if (field.strata.empty()) throw validation_error("no data to realize");

  bool has_segment = false;
  for (const auto& s : field.strata)
    if (s.kind == Stratum::Kind::Segment) has_segment = true;
  if (!has_segment) return multi_borel(field, region);
  // validate() guarantees segments imply dimension 2

  const std::size_t n = field.strata.size();
  std::vector<StratumBox> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = stratum_box(field.strata[i]);

  std::vector<Rational> caps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Stratum& s = field.strata[i];
    Rational cap(0);
    if (s.kind == Stratum::Kind::Point) {
      cap = interior_cap(s.jet.base, region.box);
    } else {
      int run = s.axis, tr = 1 - s.axis;
      if (s.a < region.box.lo[run] || s.b > region.box.hi[run])
        throw validation_error("segment leaves the region");
      cap = rat_min(region.box.hi[tr] - s.fixed, s.fixed - region.box.lo[tr]);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      Rational gap = box_gap(boxes[i], boxes[j], 2);
      if (!(gap > 0))
        throw validation_error("strata closures must be pairwise disjoint");
      cap = rat_min(cap, gap / 2);
    }
    if (!(cap > 0))
      throw validation_error("strata must sit strictly inside the region");
    caps[i] = cap;
  }

  std::vector<SmoothExpr> terms;
  std::vector<Schedule> schedules;
  json capj = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::string tag = "s" + std::to_string(i) + " ";
    if (field.strata[i].kind == Stratum::Kind::Point) {
      CoreOut core = borel_core(field.strata[i].jet, caps[i], tag);
      for (auto& t : core.terms) terms.push_back(std::move(t));
      schedules.push_back(std::move(core.sch));
    } else {
      SegmentOut seg = segment_core(field.strata[i], caps[i], tag);
      for (auto& t : seg.terms) terms.push_back(std::move(t));
      schedules.push_back(std::move(seg.sch));
    }
    capj.push_back(to_double(caps[i]));
  }
  SmoothExpr f = terms.empty() ? ex_const(Rational(0), 2) : ex_sum(terms, 2);

  // residuals: prescribed data reproduced on each stratum
  json residuals = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Stratum& s = field.strata[i];
    double r = 0.0;
    if (s.kind == Stratum::Kind::Point) {
      auto d = f.derivs(s.jet.base_d(), s.jet.order);
      for (std::size_t q = 0; q < s.jet.a.size(); ++q)
        r = std::max(r, std::abs(d[q] - s.jet.a[q]));
      residuals.push_back(residual_entry("point " + std::to_string(i), r));
    } else {
      const int run = s.axis;
      const int Kt = int(s.transverse.size()) - 1;
      Rational eta = (s.b - s.a) / 10;
      double lo = to_double(s.a + eta), hi = to_double(s.b - eta);
      for (int q = 0; q <= 4; ++q) {
        double sv = lo + (hi - lo) * q / 4.0;
        Pt x = run == 0 ? Pt{sv, to_double(s.fixed)}
                        : Pt{to_double(s.fixed), sv};
        auto d = f.derivs(x, Kt);
        for (int k = 0; k <= Kt; ++k) {
          double got = d[run == 0 ? TaylorTable::idx2(0, k)
                                  : TaylorTable::idx2(k, 0)];
          double want = horner_at(s.transverse[std::size_t(k)], sv);
          r = std::max(r, std::abs(got - want));
        }
      }
      residuals.push_back(residual_entry("segment " + std::to_string(i), r));
    }
    worst = std::max(worst, r);
  }

  json report{{"op", "extend_strata"},
              {"strata", n},
              {"caps", capj},
              {"residuals", residuals},
              {"max_residual", worst}};
  json sj = json::array();
  for (const auto& s : schedules) sj.push_back(s.to_json());
  report["schedules"] = sj;
  return Realization{f, std::move(schedules), std::move(report)};
}

// ---- filtered completion ----

namespace {

// Tail bound for  tau_j g_j  at derivative order l < j, from the measured
// growth constant C_j, the support scale eps_j and the cascade amplification
// (c * nw / sum of widths) per derivative of tau_j.
bool filtered_ok(int j, double Cj, const Rational& ej, const Rational& inner,
                 std::vector<double>* row) {
  if (Cj == 0.0) {
    if (row) row->assign(std::size_t(j), 0.0);
    return true;
  }
  int nw = std::max(4, j);
  double lA =
      std::log(psi_c()) + std::log(double(nw)) - std::log(to_double(ej - inner));
  double le = std::log(to_double(ej));
  double lC = std::log(Cj);
  bool good = true;
  if (row) row->clear();
  for (int l = 0; l <= j - 1; ++l) {
    std::vector<double> parts;
    for (int i = 0; i <= l; ++i)
      parts.push_back(lbinom(l, i) + (j - i) * le + (l - i) * lA);
    double lb = lC + logsumexp(parts);
    if (row) row->push_back(std::exp(lb));
    if (lb > -lfact(j)) good = false;
  }
  return good;
}

}  // namespace

FilteredRealization realize_filtered(const CompletionPrefix& prefix,
                                     const Region& region) {
  if (region.dim() != 1)
    throw validation_error(
        "filtered realization currently handles one-dimensional regions");
  const SetDescriptor& Z = prefix.Z;
  if (Z.dim != 1)
    throw validation_error("flat set dimension must match the region");
  if (Z.empty())
    throw validation_error("filtered realization needs a nonempty flat set");
  const int m = int(prefix.terms.size());
  if (m == 0) throw validation_error("no terms to realize");
  if (m > 40)
    throw construction_error("term count exceeds the supported depth (40)");
  for (int j = 1; j <= m; ++j) {
    const PrefixTerm& t = prefix.terms[std::size_t(j - 1)];
    if (t.g.dim() != 1)
      throw validation_error("prefix terms must be one-dimensional");
    if (t.declared_order < j)
      throw validation_error("term " + std::to_string(j) +
                             ": declared order must be at least its level");
  }

  const Box& box = region.box;
  Rational cap = box.width_rat(0);
  for (const auto& comp : Z.comps) {
    Rational lo_slack = (comp.center[0] - comp.radius) - box.lo[0];
    Rational hi_slack = box.hi[0] - (comp.center[0] + comp.radius);
    if (!(lo_slack > 0) || !(hi_slack > 0))
      throw validation_error("flat set must lie strictly inside the region");
    cap = rat_min(cap, rat_min(lo_slack, hi_slack));
  }
  double cap_d = to_double(cap);

  // preconditions: each g_j really vanishes to order j on Z, measured
  double sup0 = 1.0;
  json order_meas = json::array();
  for (int j = 1; j <= m; ++j) {
    const SmoothExpr& g = prefix.terms[std::size_t(j - 1)].g;
    sup0 = std::max(sup0, sup_norm(g, region, 0)[0]);
    for (const auto& comp : Z.comps) {
      auto check_dir = [&](double x0, double dir) {
        OrderEstimate est = vanishing_order(g, {x0, 0.0}, {dir, 0.0}, cap_d / 4);
        bool pass = est.infinite || est.slope >= double(j) - 0.5;
        order_meas.push_back(json{{"level", j},
                                  {"at", x0},
                                  {"dir", dir},
                                  {"estimate", est.to_json()},
                                  {"pass", pass}});
        if (!pass) {
          std::ostringstream os;
          os << "term " << j << " does not vanish to order " << j << " at x="
             << x0 << " (measured slope " << est.slope << ")";
          throw validation_error(os.str());
        }
      };
      if (comp.radius == 0) {
        double cd = to_double(comp.center[0]);
        check_dir(cd, 1.0);
        check_dir(cd, -1.0);
      } else {
        check_dir(to_double(comp.center[0] - comp.radius), -1.0);
        check_dir(to_double(comp.center[0] + comp.radius), 1.0);
        // interior of a fat component: derivatives vanish pointwise
        double lo = to_double(comp.center[0] - comp.radius);
        double hi = to_double(comp.center[0] + comp.radius);
        for (int q = 1; q <= 5; ++q) {
          double x = lo + (hi - lo) * q / 6.0;
          auto d = g.derivs({x, 0.0}, j);
          for (int i = 0; i <= j; ++i)
            if (std::abs(d[std::size_t(i)]) > 1e-8 * sup0)
              throw validation_error(
                  "term " + std::to_string(j) +
                  " does not stay flat across a fat component of the set");
        }
      }
    }
  }

  // measured growth constants  C_j = sup |g^(i)(x)| / dist(x,Z)^(j-i)
  std::vector<double> C(std::size_t(m), 0.0);
  for (int j = 1; j <= m; ++j) {
    const SmoothExpr& g = prefix.terms[std::size_t(j - 1)].g;
    double best = 0.0;
    auto probe = [&](double x) {
      if (x <= to_double(box.lo[0]) || x >= to_double(box.hi[0])) return;
      double dist = Z.dist1(x);
      if (!(dist > 0)) return;
      auto d = g.derivs({x, 0.0}, j);
      for (int i = 0; i <= j; ++i) {
        double denom = std::pow(dist, double(j - i));
        if (denom > 0 && std::isfinite(denom))
          best = std::max(best, std::abs(d[std::size_t(i)]) / denom);
      }
    };
    for (const auto& comp : Z.comps) {
      double lo = to_double(comp.center[0] - comp.radius);
      double hi = to_double(comp.center[0] + comp.radius);
      for (int t = 0; t <= 24; ++t) {
        double h = 0.5 * cap_d * std::pow(2.0, -t);
        probe(lo - h);
        probe(hi + h);
      }
      for (int q = 0; q <= 64; ++q)
        probe(lo - cap_d + (hi - lo + 2 * cap_d) * q / 64.0);
    }
    if (!std::isfinite(best))
      throw construction_error("growth constant measurement diverged");
    C[std::size_t(j - 1)] = best;
  }

  // scale schedule: pick eps_j by halving against its own tail bounds with a
  // trial plateau at eps_j / 2, then hand eps_j / 2 down as the next start
  std::vector<Rational> scale(std::size_t(m) + 1, Rational(0));
  Schedule sch;
  Rational prev = cap;
  for (int j = 1; j <= m; ++j) {
    std::string lab = "level " + std::to_string(j);
    double Cj = C[std::size_t(j - 1)];
    scale[std::size_t(j - 1)] = halve_until(
        prev,
        [&](const Rational& e) { return filtered_ok(j, Cj, e, e / 2, nullptr); },
        lab, &sch.warnings);
    prev = scale[std::size_t(j - 1)] / 2;
  }
  scale[std::size_t(m)] = scale[std::size_t(m - 1)] / 2;

  for (int j = 1; j <= m; ++j) {
    std::vector<double> row;
    filtered_ok(j, C[std::size_t(j - 1)], scale[std::size_t(j - 1)],
                scale[std::size_t(j)], &row);
    sch.labels.push_back("level " + std::to_string(j));
    sch.eps.push_back(scale[std::size_t(j - 1)]);
    sch.tail.push_back(std::move(row));
    sch.budget.push_back(std::exp(-lfact(j)));
  }
  sch.labels.push_back("plateau scale");
  sch.eps.push_back(scale[std::size_t(m)]);
  sch.tail.emplace_back();
  sch.budget.push_back(1.0);
  sch.check();

  // cutoffs and terms
  FilteredRealization out;
  std::vector<SmoothExpr> sum_terms;
  for (int j = 1; j <= m; ++j) {
    auto inner = Z.neighborhood1(scale[std::size_t(j)]);
    int nw = std::max(4, j);
    Rational w =
        (scale[std::size_t(j - 1)] - scale[std::size_t(j)]) / nw;
    std::vector<Rational> widths(std::size_t(nw), w);
    auto model = std::make_shared<CutoffModel>(inner, widths);
    for (const auto& iv : model->support_intervals())
      if (iv.first < box.lo[0] || iv.second > box.hi[0])
        throw construction_error("cutoff support left the region");
    SmoothExpr tau = ex_cutoff1d(model, 0, 1);
    out.certificates.push_back(certify_cutoff(*model, j));
    out.taus.push_back(tau);
    SmoothExpr term = ex_mul(tau, prefix.terms[std::size_t(j - 1)].g);
    out.terms.push_back(term);
    sum_terms.push_back(term);
  }
  out.f = ex_sum(sum_terms, 1);
  out.schedule = sch;
  out.prefix = prefix;

  json certj = json::array();
  for (const auto& cert : out.certificates) certj.push_back(cert.to_json());
  out.report = json{{"op", "filtered"},
                    {"levels", m},
                    {"cap", cap_d},
                    {"growth_constants", C},
                    {"vanishing_orders", order_meas},
                    {"schedule", sch.to_json()},
                    {"certificates", certj}};
  return out;
}

SmoothExpr FilteredRealization::partial_sum(int N) const {
  const int m = int(terms.size());
  if (N < 0 || N > m) throw validation_error("partial sum index out of range");
  std::vector<SmoothExpr> parts;
  for (int j = 1; j <= N; ++j)
    parts.push_back(prefix.terms[std::size_t(j - 1)].g);
  return parts.empty() ? ex_const(Rational(0), 1) : ex_sum(parts, 1);
}

SmoothExpr FilteredRealization::remainder(int N) const {
  const int m = int(terms.size());
  if (N < 0 || N > m) throw validation_error("remainder index out of range");
  // f - sum_{j<=N} g_j, regrouped so each term is flat on the set: for j <= N
  // the difference (tau_j - 1) g_j, beyond N the realized terms themselves.
  std::vector<SmoothExpr> parts;
  for (int j = 1; j <= N; ++j)
    parts.push_back(ex_mul(ex_sub(taus[std::size_t(j - 1)], ex_const(Rational(1), 1)),
                           prefix.terms[std::size_t(j - 1)].g));
  for (int j = N + 1; j <= m; ++j) parts.push_back(terms[std::size_t(j - 1)]);
  return parts.empty() ? ex_const(Rational(0), 1) : ex_sum(parts, 1);
}

// ---- plateau cutoff wrapper ----

CutoffExpr hormander_cutoff(const SetDescriptor& inner,
                            const std::vector<Rational>& widths,
                            const Region& region, int max_order) {
  if (inner.dim != region.dim())
    throw validation_error("cutoff set and region dimensions differ");
  if (max_order < 0 || max_order > kMaxOrder)
    throw validation_error("cutoff certificate order out of range");
  if (widths.empty()) throw validation_error("cutoff needs at least one width");

  if (inner.empty()) {
    CutoffExpr out{ex_const(Rational(0), inner.dim), CutoffCertificate{}};
    out.certificate.widths = widths;
    out.certificate.m = max_order;
    return out;
  }

  const Box& box = region.box;
  if (inner.dim == 1) {
    std::vector<std::pair<Rational, Rational>> ivs;
    for (const auto& comp : inner.comps)
      ivs.emplace_back(comp.center[0] - comp.radius,
                       comp.center[0] + comp.radius);
    ivs = merge_intervals(std::move(ivs));
    auto model = std::make_shared<CutoffModel>(ivs, widths);
    for (const auto& iv : model->support_intervals())
      if (iv.first < box.lo[0] || iv.second > box.hi[0])
        throw validation_error("cutoff support exceeds the region");
    CutoffExpr out{ex_cutoff1d(model, 0, 1), certify_cutoff(*model, max_order)};
    return out;
  }

  if (inner.comps.size() != 1)
    throw validation_error(
        "two-dimensional cutoffs support a single component; combine "
        "per-component cutoffs by hand");
  const auto& comp = inner.comps[0];
  auto mx = std::make_shared<CutoffModel>(
      std::vector<std::pair<Rational, Rational>>{
          {comp.center[0] - comp.radius, comp.center[0] + comp.radius}},
      widths);
  auto my = std::make_shared<CutoffModel>(
      std::vector<std::pair<Rational, Rational>>{
          {comp.center[1] - comp.radius, comp.center[1] + comp.radius}},
      widths);
  for (const auto& iv : mx->support_intervals())
    if (iv.first < box.lo[0] || iv.second > box.hi[0])
      throw validation_error("cutoff support exceeds the region");
  for (const auto& iv : my->support_intervals())
    if (iv.first < box.lo[1] || iv.second > box.hi[1])
      throw validation_error("cutoff support exceeds the region");
  SmoothExpr t = ex_mul(ex_cutoff1d(mx, 0, 2), ex_cutoff1d(my, 1, 2));
  // the certificate describes the one-dimensional profile; the tensor bound
  // is the product of the per-axis bounds
  CutoffExpr out{t, certify_cutoff(*mx, max_order)};
  return out;
}

// ---- positivity repair ----

SmoothExpr ensure_positive(const SmoothExpr& f, const SetDescriptor& Z,
                           const Rational& eps, const Region& region,
                           json* report) {
  const int dim = region.dim();
  if (f.dim() != dim || Z.dim != dim)
    throw validation_error("positivity repair: dimension mismatch");
  if (!(eps > 0)) throw validation_error("positivity margin must be positive");
  if (Z.empty())
    throw validation_error("positivity repair needs a nonempty flat set");

  const Box& box = region.box;
  const double eps_d = to_double(eps);
  SmoothExpr gauge = ex_dist_gauge(Z, region, eps);

  double sup_f = 0.0, min_gauge = std::numeric_limits<double>::infinity();
  std::size_t off_count = 0;
  auto visit = [&](const Pt& x) {
    double v = f.eval(x);
    if (!std::isfinite(v))
      throw construction_error("input is not finite on the region");
    sup_f = std::max(sup_f, std::abs(v));
    if (Z.dist(x) > eps_d) {
      ++off_count;
      min_gauge = std::min(min_gauge, gauge.eval(x));
    }
  };
  const int n1 = dim == 1 ? 10000 : 100;
  if (dim == 1) {
    for (int i = 0; i <= n1; ++i)
      visit({to_double(box.lo[0]) + box.width(0) * i / n1, 0.0});
  } else {
    for (int i = 0; i <= n1; ++i)
      for (int j = 0; j <= n1; ++j)
        visit({to_double(box.lo[0]) + box.width(0) * i / n1,
               to_double(box.lo[1]) + box.width(1) * j / n1});
  }
  if (off_count == 0)
    throw validation_error(
        "the margin neighbourhood covers the whole region; nothing to repair");
  if (!(min_gauge > 0))
    throw construction_error("gauge vanished off the neighbourhood");

  Rational M = rat_of_double(round_up_3((sup_f + 1.0) / min_gauge));

  // collar: exactly 1 on the eps/2 neighbourhood, 0 past the eps one
  SmoothExpr sigma;
  std::vector<Rational> widths(4, eps / 8);
  if (dim == 1) {
    auto model =
        std::make_shared<CutoffModel>(Z.neighborhood1(eps / 2), widths);
    sigma = ex_cutoff1d(model, 0, 1);
  } else {
    SmoothExpr none = ex_const(Rational(1), 2);
    SmoothExpr prod = none;
    for (const auto& comp : Z.comps) {
      auto mx = std::make_shared<CutoffModel>(
          std::vector<std::pair<Rational, Rational>>{
              {comp.center[0] - comp.radius - eps / 2,
               comp.center[0] + comp.radius + eps / 2}},
          widths);
      auto my = std::make_shared<CutoffModel>(
          std::vector<std::pair<Rational, Rational>>{
              {comp.center[1] - comp.radius - eps / 2,
               comp.center[1] + comp.radius + eps / 2}},
          widths);
      SmoothExpr sc = ex_mul(ex_cutoff1d(mx, 0, 2), ex_cutoff1d(my, 1, 2));
      prod = ex_mul(prod, ex_sub(none, sc));
    }
    sigma = ex_sub(none, prod);
  }

  SmoothExpr corr =
      ex_mul(ex_scale(gauge, M), ex_sub(ex_const(Rational(1), dim), sigma));
  SmoothExpr out = ex_add(f, corr);

  // certify on the same grid
  double min_out = std::numeric_limits<double>::infinity();
  auto check = [&](const Pt& x) {
    if (Z.dist(x) > eps_d) min_out = std::min(min_out, out.eval(x));
  };
  if (dim == 1) {
    for (int i = 0; i <= n1; ++i)
      check({to_double(box.lo[0]) + box.width(0) * i / n1, 0.0});
  } else {
    for (int i = 0; i <= n1; ++i)
      for (int j = 0; j <= n1; ++j)
        check({to_double(box.lo[0]) + box.width(0) * i / n1,
               to_double(box.lo[1]) + box.width(1) * j / n1});
  }
  if (!(min_out > 0))
    throw construction_error(
        "repair failed to certify positivity on the sample grid");

  if (report)
    *report = json{{"op", "ensure_positive"},
                   {"sup_f", sup_f},
                   {"min_gauge", min_gauge},
                   {"M", to_double(M)},
                   {"grid_points_off", off_count},
                   {"min_off_value", min_out}};
  return out;
}

}  // namespace bf
