#include "bf/expr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

namespace bf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double ulp_down(double v) {
  return std::isfinite(v) ? std::nextafter(v, -kInf) : v;
}
double ulp_up(double v) { return std::isfinite(v) ? std::nextafter(v, kInf) : v; }

}  // namespace

Support Support::unite(const Support& a, const Support& b) {
  if (a.whole || b.whole) return everything();
  Support s;
  s.whole = false;
  s.boxes = a.boxes;
  s.boxes.insert(s.boxes.end(), b.boxes.begin(), b.boxes.end());
  return s;
}

Support Support::intersect(const Support& a, const Support& b) {
  if (a.whole) return b;
  if (b.whole) return a;
  Support s;
  s.whole = false;
  for (const auto& ba : a.boxes)
    for (const auto& bb : b.boxes) {
      BoxD c;
      bool ok = true;
      for (int ax = 0; ax < 2; ++ax) {
        c.lo[ax] = std::max(ba.lo[ax], bb.lo[ax]);
        c.hi[ax] = std::min(ba.hi[ax], bb.hi[ax]);
        if (c.lo[ax] > c.hi[ax]) ok = false;
      }
      if (ok) s.boxes.push_back(c);
    }
  return s;
}

// ---------------------------------------------------------------- evaluation

namespace {

double eval_node(const Node* n, const Pt& x,
                 std::unordered_map<const Node*, double>& memo);

double eval_fresh(const Node* n, const Pt& x) {
  std::unordered_map<const Node*, double> memo;
  return eval_node(n, x, memo);
}

double poly_horner(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
  return acc;
}

// soft minimum of the component signed distances; exact min for one component
double gauge_softmin(const Node* n, const Pt& x) {
  const auto& comps = n->set.comps;
  if (comps.empty()) return kInf;
  double m = kInf;
  std::vector<double> s(comps.size());
  for (std::size_t i = 0; i < comps.size(); ++i) {
    s[i] = n->set.signed_dist_comp(i, x);
    m = std::min(m, s[i]);
  }
  if (comps.size() == 1) return m;
  double T = to_double(n->temperature);
  double acc = 0.0;
  for (double si : s) acc += std::exp(-(si - m) / T);
  return m - T * std::log(acc);
}

double eval_node(const Node* n, const Pt& x,
                 std::unordered_map<const Node*, double>& memo) {
  if (!n->supp.contains(x, n->dim)) return 0.0;
  auto it = memo.find(n);
  if (it != memo.end()) return it->second;
  double v = 0.0;
  switch (n->op) {
    case Op::Const:
      v = to_double(n->cval);
      break;
    case Op::Coord:
      v = x[n->axis];
      break;
    case Op::LinComb:
      v = to_double(n->lin[0]) + to_double(n->lin[1]) * x[0] +
          to_double(n->lin[2]) * x[1];
      break;
    case Op::Poly1:
      v = poly_horner(n->polyd, x[n->axis] - n->poly_center_d);
      break;
    case Op::Add:
      v = eval_node(n->args[0].get(), x, memo) + eval_node(n->args[1].get(), x, memo);
      break;
    case Op::Sub:
      v = eval_node(n->args[0].get(), x, memo) - eval_node(n->args[1].get(), x, memo);
      break;
    case Op::Mul: {
      double a = eval_node(n->args[0].get(), x, memo);
      v = a == 0.0 ? 0.0 : a * eval_node(n->args[1].get(), x, memo);
      break;
    }
    case Op::Div: {
      double den = eval_node(n->args[1].get(), x, memo);
      if (den == 0.0)
        throw construction_error("division hit a vanishing denominator at evaluation point");
      v = eval_node(n->args[0].get(), x, memo) / den;
      break;
    }
    case Op::Exp:
      v = std::exp(eval_node(n->args[0].get(), x, memo));
      break;
    case Op::Beta:
      v = beta_val(eval_node(n->args[0].get(), x, memo));
      break;
    case Op::Phi:
      v = phi_val(eval_node(n->args[0].get(), x, memo));
      break;
    case Op::SmoothStep:
      v = smoothstep_val(eval_node(n->args[0].get(), x, memo));
      break;
    case Op::DistGauge: {
      if (n->set.empty()) {
        v = 1.0;
        break;
      }
      double d = gauge_softmin(n, x);
      v = d <= 0.0 ? 0.0 : std::exp(-to_double(n->gscale) / d);
      break;
    }
    case Op::Cutoff1D:
      v = n->cutoff->value(x[n->axis]);
      break;
    case Op::Deriv: {
      int k = n->dk[0] + n->dk[1];
      TaylorTable t = SmoothExpr(n->args[0]).taylor(x, k);
      v = t.deriv(n->dk[0], n->dim == 2 ? n->dk[1] : 0);
      break;
    }
    case Op::FixCoord: {
      Pt y;
      if (n->axis == 0)
        y = {to_double(n->fixval), x[0]};
      else
        y = {x[0], to_double(n->fixval)};
      v = eval_fresh(n->args[0].get(), y);
      break;
    }
    case Op::Sum:
      for (const auto& a : n->args) v += eval_node(a.get(), x, memo);
      break;
  }
  memo.emplace(n, v);
  return v;
}

// --------------------------------------------------------- Taylor expansion

using TayMemo = std::map<std::pair<const Node*, int>, TaylorTable>;

TaylorTable taylor_node(const Node* n, const Pt& x, int K, TayMemo& memo);

TaylorTable taylor_fresh(const Node* n, const Pt& x, int K) {
  TayMemo memo;
  return taylor_node(n, x, K, memo);
}

// Taylor shift of a dense polynomial: coefficients of p(t0+h) in powers of h.
std::vector<double> poly_shift(const std::vector<double>& a, double t0, int K) {
  std::vector<double> w = a;
  int deg = int(w.size()) - 1;
  for (int r = 0; r < deg; ++r)
    for (int i = deg - 1; i >= r; --i) w[i] += t0 * w[i + 1];
  w.resize(std::size_t(K) + 1, 0.0);
  return w;
}

TaylorTable axis_series(int dim, int K, int axis, const std::vector<double>& g) {
  TaylorTable t = TaylorTable::zero(dim, K);
  for (int k = 0; k <= K; ++k) {
    double v = k < int(g.size()) ? g[k] : 0.0;
    if (dim == 1)
      t.c[k] = v;
    else
      t.at2(axis == 0 ? k : 0, axis == 0 ? 0 : k) = v;
  }
  return t;
}

// series of the soft-min distance to the gauge set at x (positive value there)
TaylorTable gauge_dist_series(const Node* n, const Pt& x, int K) {
  const auto& comps = n->set.comps;
  std::vector<TaylorTable> s;
  s.reserve(comps.size());
  for (const auto& c : comps) {
    if (n->dim == 1) {
      double cc = to_double(c.center[0]);
      TaylorTable t = TaylorTable::zero(1, K);
      t.c[0] = std::abs(x[0] - cc) - to_double(c.radius);
      if (K >= 1) t.c[1] = x[0] > cc ? 1.0 : -1.0;
      s.push_back(t);
    } else {
      double dx = x[0] - to_double(c.center[0]);
      double dy = x[1] - to_double(c.center[1]);
      TaylorTable q = TaylorTable::zero(2, K);
      q.c[0] = dx * dx + dy * dy;
      if (K >= 1) {
        q.at2(1, 0) = 2.0 * dx;
        q.at2(0, 1) = 2.0 * dy;
      }
      if (K >= 2) {
        q.at2(2, 0) = 1.0;
        q.at2(0, 2) = 1.0;
      }
      TaylorTable r = tt_compose(gen_sqrt(q.c[0], K), q);
      r.c[0] -= to_double(c.radius);
      s.push_back(r);
    }
  }
  if (s.size() == 1) return s[0];
  double T = to_double(n->temperature);
  double m = kInf;
  for (const auto& t : s) m = std::min(m, t.c[0]);
  TaylorTable sum = TaylorTable::zero(n->dim, K);
  for (const auto& t : s) {
    TaylorTable arg = t;
    arg.c[0] -= m;
    arg = tt_scale(arg, -1.0 / T);
    sum = tt_add(sum, tt_compose(gen_exp(arg.c[0], K), arg));
  }
  TaylorTable L = tt_compose(gen_log(sum.c[0], K), sum);
  TaylorTable out = tt_scale(L, -T);
  out.c[0] += m;
  return out;
}

TaylorTable taylor_node(const Node* n, const Pt& x, int K, TayMemo& memo) {
  if (K > kMaxOrder)
    throw validation_error("derivative order exceeds the supported maximum (" +
                           std::to_string(kMaxOrder) + ")");
  if (!n->supp.contains(x, n->dim)) return TaylorTable::zero(n->dim, K);
  auto key = std::make_pair(n, K);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  TaylorTable t;
  switch (n->op) {
    case Op::Const:
      t = TaylorTable::constant(n->dim, K, to_double(n->cval));
      break;
    case Op::Coord:
      t = TaylorTable::coordinate(n->dim, K, n->axis, x[n->axis]);
      break;
    case Op::LinComb: {
      t = TaylorTable::zero(n->dim, K);
      t.c[0] = to_double(n->lin[0]) + to_double(n->lin[1]) * x[0] +
               to_double(n->lin[2]) * x[1];
      if (K >= 1) {
        if (n->dim == 1)
          t.c[1] = to_double(n->lin[1]);
        else {
          t.at2(1, 0) = to_double(n->lin[1]);
          t.at2(0, 1) = to_double(n->lin[2]);
        }
      }
      break;
    }
    case Op::Poly1:
      t = axis_series(n->dim, K, n->axis,
                      poly_shift(n->polyd, x[n->axis] - n->poly_center_d, K));
      break;
    case Op::Add:
      t = tt_add(taylor_node(n->args[0].get(), x, K, memo),
                 taylor_node(n->args[1].get(), x, K, memo));
      break;
    case Op::Sub:
      t = tt_sub(taylor_node(n->args[0].get(), x, K, memo),
                 taylor_node(n->args[1].get(), x, K, memo));
      break;
    case Op::Mul:
      if (!n->args[0]->supp.contains(x, n->dim) ||
          !n->args[1]->supp.contains(x, n->dim))
        t = TaylorTable::zero(n->dim, K);
      else
        t = tt_mul(taylor_node(n->args[0].get(), x, K, memo),
                   taylor_node(n->args[1].get(), x, K, memo));
      break;
    case Op::Div: {
      TaylorTable den = taylor_node(n->args[1].get(), x, K, memo);
      if (den.c[0] == 0.0)
        throw construction_error("division hit a vanishing denominator at evaluation point");
      t = tt_div(taylor_node(n->args[0].get(), x, K, memo), den);
      break;
    }
    case Op::Exp: {
      TaylorTable u = taylor_node(n->args[0].get(), x, K, memo);
      t = tt_compose(gen_exp(u.c[0], K), u);
      break;
    }
    case Op::Beta: {
      TaylorTable u = taylor_node(n->args[0].get(), x, K, memo);
      t = tt_compose(gen_beta(u.c[0], K), u);
      break;
    }
    case Op::Phi: {
      TaylorTable u = taylor_node(n->args[0].get(), x, K, memo);
      t = tt_compose(gen_phi(u.c[0], K), u);
      break;
    }
    case Op::SmoothStep: {
      TaylorTable u = taylor_node(n->args[0].get(), x, K, memo);
      t = tt_compose(gen_smoothstep(u.c[0], K), u);
      break;
    }
    case Op::DistGauge: {
      if (n->set.empty()) {
        t = TaylorTable::constant(n->dim, K, 1.0);
        break;
      }
      double d0 = gauge_softmin(n, x);
      if (d0 <= 0.0) {
        t = TaylorTable::zero(n->dim, K);
        break;
      }
      TaylorTable d = gauge_dist_series(n, x, K);
      TaylorTable u = tt_scale(d, 1.0 / to_double(n->gscale));
      t = tt_compose(gen_phi(u.c[0], K), u);
      break;
    }
    case Op::Cutoff1D: {
      std::vector<double> g(std::size_t(K) + 1);
      double f = 1.0;
      for (int r = 0; r <= K; ++r) {
        if (r > 0) f *= r;
        g[r] = n->cutoff->deriv(r, x[n->axis]) / f;
      }
      t = axis_series(n->dim, K, n->axis, g);
      break;
    }
    case Op::Deriv: {
      int dx = n->dk[0], dy = n->dim == 2 ? n->dk[1] : 0;
      TaylorTable u = taylor_node(n->args[0].get(), x, K + dx + dy, memo);
      t = TaylorTable::zero(n->dim, K);
      if (n->dim == 1) {
        for (int k = 0; k <= K; ++k) {
          double r = 1.0;
          for (int i = 1; i <= dx; ++i) r *= k + i;
          t.c[k] = u.c[k + dx] * r;
        }
      } else {
        for (int k = 0; k <= K; ++k)
          for (int j = 0; j <= k; ++j) {
            int i = k - j;
            double r = 1.0;
            for (int a = 1; a <= dx; ++a) r *= i + a;
            for (int a = 1; a <= dy; ++a) r *= j + a;
            t.at2(i, j) = u.at2(i + dx, j + dy) * r;
          }
      }
      break;
    }
    case Op::FixCoord: {
      Pt y;
      if (n->axis == 0)
        y = {to_double(n->fixval), x[0]};
      else
        y = {x[0], to_double(n->fixval)};
      TaylorTable u = taylor_fresh(n->args[0].get(), y, K);
      t = TaylorTable::zero(1, K);
      for (int k = 0; k <= K; ++k)
        t.c[k] = n->axis == 0 ? u.at2(0, k) : u.at2(k, 0);
      break;
    }
    case Op::Sum: {
      t = TaylorTable::zero(n->dim, K);
      for (const auto& a : n->args) {
        if (!a->supp.contains(x, n->dim)) continue;
        t = tt_add(t, taylor_node(a.get(), x, K, memo));
      }
      break;
    }
  }
  memo.emplace(key, t);
  return t;
}

}  // namespace

double SmoothExpr::eval(const Pt& x) const {
  if (!n_) throw validation_error("empty expression");
  return eval_fresh(n_.get(), x);
}

TaylorTable SmoothExpr::taylor(const Pt& x, int K) const {
  if (!n_) throw validation_error("empty expression");
  if (K < 0) throw validation_error("negative derivative order");
  return taylor_fresh(n_.get(), x, K);
}

std::vector<double> SmoothExpr::derivs(const Pt& x, int K) const {
  TaylorTable t = taylor(x, K);
  std::vector<double> out(t.c.size());
  if (dim() == 1) {
    double f = 1.0;
    for (int k = 0; k <= K; ++k) {
      if (k > 0) f *= k;
      out[k] = t.c[k] * f;
    }
  } else {
    for (int k = 0; k <= K; ++k)
      for (int j = 0; j <= k; ++j)
        out[TaylorTable::idx2(k - j, j)] = t.deriv(k - j, j);
  }
  return out;
}

// ------------------------------------------------------- exact evaluation

namespace {

Rational eval_exact_node(const Node* n, const std::array<Rational, 2>& x);

Rational poly_horner_exact(const std::vector<Rational>& c, const Rational& t) {
  Rational acc(0);
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * t + c[i];
  return acc;
}

bool rat_in_intervals(const std::vector<std::pair<Rational, Rational>>& iv,
                      const Rational& t) {
  for (const auto& p : iv)
    if (p.first <= t && t <= p.second) return true;
  return false;
}

Rational eval_exact_node(const Node* n, const std::array<Rational, 2>& x) {
  switch (n->op) {
    case Op::Const:
      return n->cval;
    case Op::Coord:
      return x[n->axis];
    case Op::LinComb:
      return n->lin[0] + n->lin[1] * x[0] + n->lin[2] * x[1];
    case Op::Poly1:
      return poly_horner_exact(n->poly, x[n->axis] - n->poly_center);
    case Op::Add:
      return eval_exact_node(n->args[0].get(), x) + eval_exact_node(n->args[1].get(), x);
    case Op::Sub:
      return eval_exact_node(n->args[0].get(), x) - eval_exact_node(n->args[1].get(), x);
    case Op::Mul: {
      Rational a = eval_exact_node(n->args[0].get(), x);
      if (a == 0) return Rational(0);
      return a * eval_exact_node(n->args[1].get(), x);
    }
    case Op::Div: {
      Rational den = eval_exact_node(n->args[1].get(), x);
      if (den == 0) throw construction_error("exact evaluation: zero denominator");
      return eval_exact_node(n->args[0].get(), x) / den;
    }
    case Op::Exp: {
      Rational u = eval_exact_node(n->args[0].get(), x);
      if (u == 0) return Rational(1);
      throw construction_error("exact evaluation: exp of nonzero argument is irrational");
    }
    case Op::Beta: {
      Rational u = eval_exact_node(n->args[0].get(), x);
      if (u <= -1 || u >= 1) return Rational(0);
      throw construction_error("exact evaluation: bump kernel interior value is irrational");
    }
    case Op::Phi: {
      Rational u = eval_exact_node(n->args[0].get(), x);
      if (u <= 0) return Rational(0);
      throw construction_error("exact evaluation: flat kernel interior value is irrational");
    }
    case Op::SmoothStep: {
      Rational u = eval_exact_node(n->args[0].get(), x);
      if (u <= 0) return Rational(0);
      if (u >= 1) return Rational(1);
      throw construction_error("exact evaluation: step transition value is irrational");
    }
    case Op::DistGauge: {
      if (n->set.empty()) return Rational(1);
      if (n->set.contains(x)) return Rational(0);
      throw construction_error("exact evaluation: gauge away from its zero set is irrational");
    }
    case Op::Cutoff1D: {
      const Rational& t = x[n->axis];
      if (rat_in_intervals(n->cutoff->plateau_intervals(), t)) return Rational(1);
      if (!rat_in_intervals(n->cutoff->support_intervals(), t)) return Rational(0);
      throw construction_error("exact evaluation: cutoff transition value is irrational");
    }
    case Op::FixCoord: {
      std::array<Rational, 2> y;
      if (n->axis == 0)
        y = {n->fixval, x[0]};
      else
        y = {x[0], n->fixval};
      return eval_exact_node(n->args[0].get(), y);
    }
    case Op::Sum: {
      Rational acc(0);
      for (const auto& a : n->args) acc += eval_exact_node(a.get(), x);
      return acc;
    }
    case Op::Deriv:
      break;
  }
  throw construction_error("exact evaluation not available for this node kind");
}

}  // namespace

Rational SmoothExpr::eval_exact(const std::array<Rational, 2>& x) const {
  if (!n_) throw validation_error("empty expression");
  return eval_exact_node(n_.get(), x);
}

// ---------------------------------------------------------------- builders

namespace {

NodePtr make_node(Node&& n) { return std::make_shared<const Node>(std::move(n)); }

void require_dim(const SmoothExpr& e, int dim, const char* what) {
  if (!e.valid()) throw validation_error(std::string(what) + ": empty operand");
  if (e.dim() != dim)
    throw validation_error(std::string(what) + ": operand dimension mismatch");
}

Support strip_support(int dim, int axis,
                      const std::vector<std::pair<Rational, Rational>>& iv) {
  Support s;
  s.whole = false;
  for (const auto& p : iv) {
    Support::BoxD b;
    b.lo[axis] = ulp_down(to_double(p.first));
    b.hi[axis] = ulp_up(to_double(p.second));
    if (dim == 1) {
      b.lo[1] = 0.0;
      b.hi[1] = 0.0;
    }
    s.boxes.push_back(b);
  }
  return s;
}

}  // namespace

SmoothExpr ex_const(const Rational& v, int dim) {
  Node n;
  n.op = Op::Const;
  n.dim = dim;
  n.cval = v;
  n.supp = v == 0 ? Support::nothing() : Support::everything();
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_coord(int axis, int dim) {
  if (axis < 0 || axis >= dim) throw validation_error("coordinate axis out of range");
  Node n;
  n.op = Op::Coord;
  n.dim = dim;
  n.axis = axis;
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_lin(const Rational& c0, const Rational& cx, const Rational& cy, int dim) {
  if (dim == 1 && cy != 0) throw validation_error("linear form uses axis 1 in dimension 1");
  Node n;
  n.op = Op::LinComb;
  n.dim = dim;
  n.lin = {c0, cx, cy};
  if (c0 == 0 && cx == 0 && cy == 0) n.supp = Support::nothing();
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_poly1(std::vector<Rational> coeffs, int axis, int dim,
                    const Rational& center) {
  if (axis < 0 || axis >= dim) throw validation_error("polynomial axis out of range");
  while (!coeffs.empty() && coeffs.back() == 0) coeffs.pop_back();
  Node n;
  n.op = Op::Poly1;
  n.dim = dim;
  n.axis = axis;
  n.poly = std::move(coeffs);
  n.poly_center = center;
  n.poly_center_d = to_double(center);
  n.polyd.reserve(n.poly.size());
  for (const auto& c : n.poly) n.polyd.push_back(to_double(c));
  if (n.poly.empty()) n.supp = Support::nothing();
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_add(const SmoothExpr& a, const SmoothExpr& b) {
  require_dim(b, a.dim(), "add");
  Node n;
  n.op = Op::Add;
  n.dim = a.dim();
  n.args = {a.node(), b.node()};
  n.supp = Support::unite(a.support(), b.support());
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_sub(const SmoothExpr& a, const SmoothExpr& b) {
  require_dim(b, a.dim(), "sub");
  Node n;
  n.op = Op::Sub;
  n.dim = a.dim();
  n.args = {a.node(), b.node()};
  n.supp = Support::unite(a.support(), b.support());
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_mul(const SmoothExpr& a, const SmoothExpr& b) {
  require_dim(b, a.dim(), "mul");
  Node n;
  n.op = Op::Mul;
  n.dim = a.dim();
  n.args = {a.node(), b.node()};
  n.supp = Support::intersect(a.support(), b.support());
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_scale(const SmoothExpr& a, const Rational& s) {
  return ex_mul(ex_const(s, a.dim()), a);
}

SmoothExpr ex_div(const SmoothExpr& a, const SmoothExpr& b, const Region& region) {
  require_dim(b, a.dim(), "div");
  if (region.dim() != a.dim()) throw validation_error("div: region dimension mismatch");
  // sample the denominator over the region grid; exclusions checked exactly
  int n1 = region.dim() == 1 ? 2048 : 96;
  double minabs = kInf;
  const Box& box = region.box;
  for (int i = 0; i <= n1; ++i) {
    Rational xr = box.lo[0] + (box.hi[0] - box.lo[0]) * Rational(i, n1);
    int n2 = region.dim() == 1 ? 0 : n1;
    for (int j = 0; j <= n2; ++j) {
      std::array<Rational, 2> pr{xr, Rational(0)};
      if (region.dim() == 2)
        pr[1] = box.lo[1] + (box.hi[1] - box.lo[1]) * Rational(j, n1);
      if (region.excluded && region.excluded->contains(pr)) continue;
      Pt p{to_double(pr[0]), to_double(pr[1])};
      minabs = std::min(minabs, std::abs(b.eval(p)));
    }
  }
  if (!(minabs > 1e-300))
    throw construction_error(
        "division rejected: denominator not certified nonvanishing on the region "
        "(grid minimum " +
        std::to_string(minabs) + ")");
  Node n;
  n.op = Op::Div;
  n.dim = a.dim();
  n.args = {a.node(), b.node()};
  n.div_floor = minabs;
  n.supp = a.support();
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_div(const SmoothExpr& a, const SmoothExpr& b, const Rational& floor_bound) {
  require_dim(b, a.dim(), "div");
  if (floor_bound <= 0)
    throw validation_error("div: supplied denominator bound must be positive");
  Node n;
  n.op = Op::Div;
  n.dim = a.dim();
  n.args = {a.node(), b.node()};
  n.div_floor = to_double(floor_bound);
  n.supp = a.support();
  return SmoothExpr(make_node(std::move(n)));
}

namespace {
SmoothExpr unary(Op op, const SmoothExpr& a, Support supp) {
  if (!a.valid()) throw validation_error("empty operand");
  Node n;
  n.op = op;
  n.dim = a.dim();
  n.args = {a.node()};
  n.supp = std::move(supp);
  return SmoothExpr(make_node(std::move(n)));
}
}  // namespace

SmoothExpr ex_exp(const SmoothExpr& a) { return unary(Op::Exp, a, Support::everything()); }
SmoothExpr ex_beta(const SmoothExpr& a) { return unary(Op::Beta, a, Support::everything()); }
SmoothExpr ex_phi(const SmoothExpr& a) { return unary(Op::Phi, a, Support::everything()); }
SmoothExpr ex_smoothstep(const SmoothExpr& a) {
  return unary(Op::SmoothStep, a, Support::everything());
}

SmoothExpr ex_deriv(const SmoothExpr& a, int dx, int dy) {
  if (!a.valid()) throw validation_error("empty operand");
  if (dx < 0 || dy < 0) throw validation_error("negative derivative order");
  if (a.dim() == 1 && dy != 0)
    throw validation_error("derivative along axis 1 of a one-dimensional function");
  if (dx + dy > kMaxOrder)
    throw validation_error("derivative order exceeds the supported maximum");
  Node n;
  n.op = Op::Deriv;
  n.dim = a.dim();
  n.args = {a.node()};
  n.dk = {dx, dy};
  n.supp = a.support();
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_fix(const SmoothExpr& a, int axis, const Rational& value) {
  if (!a.valid()) throw validation_error("empty operand");
  if (a.dim() != 2) throw validation_error("coordinate fixing needs a two-dimensional function");
  if (axis < 0 || axis > 1) throw validation_error("fixed axis out of range");
  Node n;
  n.op = Op::FixCoord;
  n.dim = 1;
  n.args = {a.node()};
  n.axis = axis;
  n.fixval = value;
  if (a.support().whole)
    n.supp = Support::everything();
  else {
    double v = to_double(value);
    Support s;
    s.whole = false;
    int keep = axis == 0 ? 1 : 0;
    for (const auto& b : a.support().boxes) {
      if (v < ulp_down(b.lo[axis]) || v > ulp_up(b.hi[axis])) continue;
      Support::BoxD p;
      p.lo = {b.lo[keep], 0.0};
      p.hi = {b.hi[keep], 0.0};
      s.boxes.push_back(p);
    }
    n.supp = std::move(s);
  }
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_sum(const std::vector<SmoothExpr>& terms, int dim) {
  Node n;
  n.op = Op::Sum;
  n.dim = dim;
  Support s = Support::nothing();
  for (const auto& t : terms) {
    require_dim(t, dim, "sum");
    n.args.push_back(t.node());
    s = Support::unite(s, t.support());
  }
  n.supp = std::move(s);
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_dist_gauge(const SetDescriptor& set, const Region& region,
                         const Rational& scale) {
  if (set.dim != region.dim())
    throw validation_error("gauge set and region dimensions differ");
  if (scale <= 0) throw validation_error("gauge scale must be positive");
  Node n;
  n.op = Op::DistGauge;
  n.dim = set.dim;
  n.set = set;
  n.gscale = scale;
  if (set.comps.size() > 1) {
    double mf = set.min_feature(region.box);
    n.temperature = rat_of_double(1e-3 * mf);
    if (n.temperature <= 0)
      throw construction_error("gauge set has coincident components; soft-min undefined");
  }
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_cutoff1d(std::vector<std::pair<Rational, Rational>> inner,
                       std::vector<Rational> widths, int axis, int dim) {
  if (axis < 0 || axis >= dim) throw validation_error("cutoff axis out of range");
  Node n;
  n.op = Op::Cutoff1D;
  n.dim = dim;
  n.axis = axis;
  n.cutoff = std::make_shared<const CutoffModel>(std::move(inner), std::move(widths));
  n.cut_inner = n.cutoff->inner();
  n.cut_widths = n.cutoff->widths();
  n.supp = strip_support(dim, axis, n.cutoff->support_intervals());
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_cutoff1d(std::shared_ptr<const CutoffModel> model, int axis, int dim) {
  if (!model) throw validation_error("cutoff model missing");
  if (axis < 0 || axis >= dim) throw validation_error("cutoff axis out of range");
  Node n;
  n.op = Op::Cutoff1D;
  n.dim = dim;
  n.axis = axis;
  n.cutoff = std::move(model);
  n.cut_inner = n.cutoff->inner();
  n.cut_widths = n.cutoff->widths();
  n.supp = strip_support(dim, axis, n.cutoff->support_intervals());
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_clip_support(const SmoothExpr& e, int axis,
                           const std::optional<Rational>& lo,
                           const std::optional<Rational>& hi) {
  if (!e.valid()) throw validation_error("empty operand");
  if (axis < 0 || axis >= e.dim()) throw validation_error("clip axis out of range");
  if (lo && hi && *lo > *hi) throw validation_error("clip slab is empty");
  Support slab;
  slab.whole = false;
  Support::BoxD b;
  if (lo) b.lo[axis] = ulp_down(to_double(*lo));
  if (hi) b.hi[axis] = ulp_up(to_double(*hi));
  slab.boxes.push_back(b);
  Node n = *e.node();
  n.supp = Support::intersect(n.supp, slab);
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_base_cutoff(int axis, const Rational& center, const Rational& eps,
                          int dim) {
  if (eps <= 0) throw validation_error("base cutoff needs a positive width");
  if (axis < 0 || axis >= dim) throw validation_error("base cutoff axis out of range");
  // u = 2 - 2((x-c)/eps)^2, then the smooth step: 1 on |x-c|<=eps/2 (in fact
  // up to eps/sqrt(2)), 0 on |x-c|>=eps, strictly between elsewhere.  Kept in
  // powers of (x-c) so tiny eps does not blow the coefficients up.
  std::vector<Rational> coeffs = {Rational(2), Rational(0),
                                  Rational(-2) / (eps * eps)};
  SmoothExpr s = ex_smoothstep(ex_poly1(std::move(coeffs), axis, dim, center));
  Node n = *s.node();
  n.supp = strip_support(dim, axis, {{center - eps, center + eps}});
  return SmoothExpr(make_node(std::move(n)));
}

SmoothExpr ex_monomial(int axis, const Rational& p, int k, int dim,
                       bool divide_factorial) {
  if (k < 0) throw validation_error("monomial degree must be nonnegative");
  // stored in powers of (x-p): a single coefficient, no binomial expansion
  std::vector<Rational> coeffs(std::size_t(k) + 1, Rational(0));
  if (divide_factorial) {
    BigInt f(1);
    for (int i = 2; i <= k; ++i) f *= i;
    coeffs[std::size_t(k)] = Rational(1) / Rational(f, 1);
  } else {
    coeffs[std::size_t(k)] = 1;
  }
  return ex_poly1(std::move(coeffs), axis, dim, p);
}

// -------------------------------------------------------------- serialization

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Coord: return "coord";
    case Op::LinComb: return "lin";
    case Op::Poly1: return "poly1";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Exp: return "exp";
    case Op::Beta: return "beta";
    case Op::Phi: return "phi";
    case Op::SmoothStep: return "smoothstep";
    case Op::DistGauge: return "dist_gauge";
    case Op::Cutoff1D: return "cutoff1d";
    case Op::Deriv: return "deriv";
    case Op::FixCoord: return "fix";
    case Op::Sum: return "sum";
  }
  return "?";
}

Op op_from_name(const std::string& s, const std::string& where) {
  static const std::unordered_map<std::string, Op> m = {
      {"const", Op::Const},     {"coord", Op::Coord},
      {"lin", Op::LinComb},     {"poly1", Op::Poly1},
      {"add", Op::Add},         {"sub", Op::Sub},
      {"mul", Op::Mul},         {"div", Op::Div},
      {"exp", Op::Exp},         {"beta", Op::Beta},
      {"phi", Op::Phi},         {"smoothstep", Op::SmoothStep},
      {"dist_gauge", Op::DistGauge}, {"cutoff1d", Op::Cutoff1D},
      {"deriv", Op::Deriv},     {"fix", Op::FixCoord},
      {"sum", Op::Sum}};
  auto it = m.find(s);
  if (it == m.end()) throw validation_error(where + ": unknown node kind '" + s + "'");
  return it->second;
}

json supp_to_json(const Support& s, int dim) {
  if (s.whole) return json{{"whole", true}};
  json boxes = json::array();
  auto put = [](json& arr, double v) {
    if (std::isinf(v))
      arr.push_back(nullptr);
    else
      arr.push_back(v);
  };
  for (const auto& b : s.boxes) {
    json e = json::array();
    put(e, b.lo[0]);
    put(e, b.hi[0]);
    if (dim == 2) {
      put(e, b.lo[1]);
      put(e, b.hi[1]);
    }
    boxes.push_back(e);
  }
  return json{{"boxes", boxes}};
}

Support supp_from_json(const json& j, int dim, const std::string& where) {
  if (!j.is_object()) throw validation_error(where + ": bad support");
  if (j.contains("whole")) return Support::everything();
  Support s;
  s.whole = false;
  auto get = [&](const json& v, bool low) {
    if (v.is_null()) return low ? -kInf : kInf;
    if (!v.is_number()) throw validation_error(where + ": bad support bound");
    return v.get<double>();
  };
  for (const auto& e : j.at("boxes")) {
    if (!e.is_array() || int(e.size()) != 2 * dim)
      throw validation_error(where + ": support box has wrong arity");
    Support::BoxD b;
    b.lo[0] = get(e[0], true);
    b.hi[0] = get(e[1], false);
    if (dim == 2) {
      b.lo[1] = get(e[2], true);
      b.hi[1] = get(e[3], false);
    } else {
      b.lo[1] = 0.0;
      b.hi[1] = 0.0;
    }
    s.boxes.push_back(b);
  }
  return s;
}

int expected_arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Exp:
    case Op::Beta:
    case Op::Phi:
    case Op::SmoothStep:
    case Op::Deriv:
    case Op::FixCoord:
      return 1;
    case Op::Sum:
      return -1;  // variadic
    default:
      return 0;
  }
}

}  // namespace

json SmoothExpr::to_json() const {
  if (!n_) throw validation_error("empty expression");
  json nodes = json::array();
  std::unordered_map<const Node*, int> index;
  std::function<int(const NodePtr&)> emit = [&](const NodePtr& p) -> int {
    auto it = index.find(p.get());
    if (it != index.end()) return it->second;
    const Node& n = *p;
    json args = json::array();
    for (const auto& a : n.args) args.push_back(emit(a));
    json jn;
    jn["op"] = op_name(n.op);
    jn["dim"] = n.dim;
    if (!n.args.empty()) jn["args"] = args;
    switch (n.op) {
      case Op::Const:
        jn["value"] = rat_to_json(n.cval);
        break;
      case Op::Coord:
        jn["axis"] = n.axis;
        break;
      case Op::LinComb:
        jn["c"] = json::array({rat_to_json(n.lin[0]), rat_to_json(n.lin[1]),
                               rat_to_json(n.lin[2])});
        break;
      case Op::Poly1: {
        jn["axis"] = n.axis;
        json c = json::array();
        for (const auto& q : n.poly) c.push_back(rat_to_json(q));
        jn["coeffs"] = c;
        jn["center"] = rat_to_json(n.poly_center);
        break;
      }
      case Op::Div:
        jn["floor"] = n.div_floor;
        break;
      case Op::DistGauge:
        jn["set"] = n.set.to_json();
        jn["scale"] = rat_to_json(n.gscale);
        jn["temperature"] = rat_to_json(n.temperature);
        break;
      case Op::Cutoff1D: {
        jn["axis"] = n.axis;
        json iv = json::array();
        for (const auto& p2 : n.cut_inner)
          iv.push_back(json::array({rat_to_json(p2.first), rat_to_json(p2.second)}));
        jn["inner"] = iv;
        json w = json::array();
        for (const auto& q : n.cut_widths) w.push_back(rat_to_json(q));
        jn["widths"] = w;
        break;
      }
      case Op::Deriv:
        jn["k"] = json::array({n.dk[0], n.dk[1]});
        break;
      case Op::FixCoord:
        jn["axis"] = n.axis;
        jn["value"] = rat_to_json(n.fixval);
        break;
      default:
        break;
    }
    jn["supp"] = supp_to_json(n.supp, n.dim);
    int id = int(nodes.size());
    nodes.push_back(std::move(jn));
    index.emplace(p.get(), id);
    return id;
  };
  int root = emit(n_);
  return json{{"format", "smooth-expr"},
              {"version", 1},
              {"dim", n_->dim},
              {"root", root},
              {"nodes", std::move(nodes)}};
}

SmoothExpr SmoothExpr::from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "smooth-expr")
    throw validation_error("expression: missing format tag 'smooth-expr'");
  if (j.value("version", 0) != 1)
    throw validation_error("expression: unsupported version");
  const json& jn = j.at("nodes");
  if (!jn.is_array() || jn.empty())
    throw validation_error("expression: empty node list");
  std::vector<NodePtr> built;
  built.reserve(jn.size());
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const json& e = jn[i];
    std::string where = "expression.nodes[" + std::to_string(i) + "]";
    Node n;
    n.op = op_from_name(e.value("op", ""), where);
    n.dim = e.value("dim", 0);
    if (n.dim != 1 && n.dim != 2)
      throw validation_error(where + ": dim must be 1 or 2");
    if (e.contains("args"))
      for (const auto& a : e.at("args")) {
        std::size_t k = a.get<std::size_t>();
        if (k >= i) throw validation_error(where + ": forward argument reference");
        n.args.push_back(built[k]);
      }
    int want = expected_arity(n.op);
    if (want >= 0 && int(n.args.size()) != want)
      throw validation_error(where + ": wrong argument count");
    int adim = n.op == Op::FixCoord ? 2 : n.dim;
    for (const auto& a : n.args)
      if (a->dim != adim) throw validation_error(where + ": argument dimension mismatch");
    switch (n.op) {
      case Op::Const:
        n.cval = rat_from_json(e.at("value"), where + ".value");
        break;
      case Op::Coord:
        n.axis = e.at("axis").get<int>();
        if (n.axis < 0 || n.axis >= n.dim)
          throw validation_error(where + ": axis out of range");
        break;
      case Op::LinComb: {
        const json& c = e.at("c");
        if (!c.is_array() || c.size() != 3)
          throw validation_error(where + ": 'c' must have three entries");
        for (int q = 0; q < 3; ++q) n.lin[q] = rat_from_json(c[q], where + ".c");
        break;
      }
      case Op::Poly1: {
        n.axis = e.at("axis").get<int>();
        if (n.axis < 0 || n.axis >= n.dim)
          throw validation_error(where + ": axis out of range");
        for (const auto& q : e.at("coeffs"))
          n.poly.push_back(rat_from_json(q, where + ".coeffs"));
        for (const auto& q : n.poly) n.polyd.push_back(to_double(q));
        if (e.contains("center"))
          n.poly_center = rat_from_json(e.at("center"), where + ".center");
        n.poly_center_d = to_double(n.poly_center);
        break;
      }
      case Op::Div:
        n.div_floor = e.value("floor", 0.0);
        break;
      case Op::DistGauge:
        n.set = SetDescriptor::from_json(e.at("set"), where + ".set");
        n.gscale = rat_from_json(e.at("scale"), where + ".scale");
        n.temperature = rat_from_json(e.at("temperature"), where + ".temperature");
        if (n.set.dim != n.dim) throw validation_error(where + ": set dimension mismatch");
        if (n.gscale <= 0) throw validation_error(where + ": scale must be positive");
        if (n.set.comps.size() > 1 && n.temperature <= 0)
          throw validation_error(where + ": multi-component gauge needs a positive temperature");
        break;
      case Op::Cutoff1D: {
        n.axis = e.at("axis").get<int>();
        if (n.axis < 0 || n.axis >= n.dim)
          throw validation_error(where + ": axis out of range");
        std::vector<std::pair<Rational, Rational>> inner;
        for (const auto& iv : e.at("inner")) {
          if (!iv.is_array() || iv.size() != 2)
            throw validation_error(where + ": inner interval must be a pair");
          inner.emplace_back(rat_from_json(iv[0], where + ".inner"),
                             rat_from_json(iv[1], where + ".inner"));
        }
        std::vector<Rational> widths;
        for (const auto& w : e.at("widths"))
          widths.push_back(rat_from_json(w, where + ".widths"));
        try {
          n.cutoff = std::make_shared<const CutoffModel>(std::move(inner), std::move(widths));
        } catch (const error& err) {
          throw validation_error(where + ": " + err.what());
        }
        n.cut_inner = n.cutoff->inner();
        n.cut_widths = n.cutoff->widths();
        break;
      }
      case Op::Deriv: {
        const json& k = e.at("k");
        if (!k.is_array() || k.size() != 2)
          throw validation_error(where + ": 'k' must be a pair");
        n.dk = {k[0].get<int>(), k[1].get<int>()};
        if (n.dk[0] < 0 || n.dk[1] < 0 || n.dk[0] + n.dk[1] > kMaxOrder)
          throw validation_error(where + ": derivative order out of range");
        if (n.dim == 1 && n.dk[1] != 0)
          throw validation_error(where + ": axis-1 derivative in dimension 1");
        break;
      }
      case Op::FixCoord:
        n.axis = e.at("axis").get<int>();
        if (n.axis < 0 || n.axis > 1)
          throw validation_error(where + ": axis out of range");
        n.fixval = rat_from_json(e.at("value"), where + ".value");
        if (n.dim != 1) throw validation_error(where + ": result must be one-dimensional");
        break;
      default:
        break;
    }
    n.supp = supp_from_json(e.value("supp", json{{"whole", true}}), n.dim, where);
    built.push_back(make_node(std::move(n)));
  }
  std::size_t root = j.value("root", jn.size() - 1);
  if (root >= built.size()) throw validation_error("expression: root index out of range");
  if (built[root]->dim != j.value("dim", built[root]->dim))
    throw validation_error("expression: root dimension mismatch");
  return SmoothExpr(built[root]);
}

const std::array<double, kMaxOrder + 1>& base_cutoff_sup() {
  static const std::array<double, kMaxOrder + 1> table = {
#include "base_cutoff_table.inc"
  };
  return table;
}

}  // namespace bf
