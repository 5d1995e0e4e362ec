#include "bf/jets.hpp"

#include <algorithm>
#include <cmath>

namespace bf {

Jet Jet::zero(int dim, int order, const std::array<Rational, 2>& base) {
  Jet j;
  j.dim = dim;
  j.order = order;
  j.base = base;
  j.a.assign(TaylorTable::size_for(dim, order), 0.0);
  return j;
}

json Jet::to_json() const {
  return json{{"dim", dim},
              {"order", order},
              {"base", json::array({rat_to_json(base[0]), rat_to_json(base[1])})},
              {"partials", a}};
}

Jet Jet::from_json(const json& j, const std::string& where) {
  Jet out;
  try {
    out.dim = j.at("dim").get<int>();
    out.order = j.at("order").get<int>();
    const json& b = j.at("base");
    out.base[0] = rat_from_json(b.at(0), where + ".base");
    out.base[1] = rat_from_json(b.at(1), where + ".base");
    out.a = j.at("partials").get<std::vector<double>>();
  } catch (const validation_error&) {
    throw;
  } catch (const std::exception& e) {
    throw validation_error(where + ": bad jet (" + e.what() + ")");
  }
  if (out.dim != 1 && out.dim != 2) throw validation_error(where + ": dim must be 1 or 2");
  if (out.order < 0 || out.order > kMaxOrder)
    throw validation_error(where + ": order out of range");
  if (out.a.size() != TaylorTable::size_for(out.dim, out.order))
    throw validation_error(where + ": partials length does not match order");
  return out;
}

Jet jet_of(const SmoothExpr& f, const std::array<Rational, 2>& x, int order) {
  Jet j = Jet::zero(f.dim(), order, x);
  j.a = f.derivs({to_double(x[0]), to_double(x[1])}, order);
  return j;
}

Jet jet_mul(const Jet& A, const Jet& B) {
  if (A.dim != B.dim) throw validation_error("jet product: dimension mismatch");
  if (A.base != B.base)
    throw validation_error("jet product: jets must share a base point");
  int d = std::min(A.order, B.order);
  Jet C = Jet::zero(A.dim, d, A.base);
  if (A.dim == 1) {
    for (int k = 0; k <= d; ++k) {
      double s = 0.0;
      for (int p = 0; p <= k; ++p) s += binom(k, p) * A.a[p] * B.a[k - p];
      C.a[k] = s;
    }
  } else {
    for (int k = 0; k <= d; ++k)
      for (int j = 0; j <= k; ++j) {
        int i = k - j;
        double s = 0.0;
        for (int p = 0; p <= i; ++p)
          for (int q = 0; q <= j; ++q)
            s += binom(i, p) * binom(j, q) * A.at(p, q) * B.at(i - p, j - q);
        C.at(i, j) = s;
      }
  }
  return C;
}

Jet jet_shift(const Jet& A, const std::array<Rational, 2>& y) {
  double dx = to_double(y[0] - A.base[0]);
  double dy = to_double(y[1] - A.base[1]);
  Jet B = Jet::zero(A.dim, A.order, y);
  int d = A.order;
  if (A.dim == 1) {
    for (int m = 0; m <= d; ++m) {
      double s = 0.0;
      double f = 1.0, p = 1.0;
      for (int t = 0; m + t <= d; ++t) {
        if (t > 0) {
          f *= t;
          p *= dx;
        }
        s += A.a[m + t] * p / f;
      }
      B.a[m] = s;
    }
  } else {
    std::vector<double> px(std::size_t(d) + 1, 1.0), py(std::size_t(d) + 1, 1.0);
    std::vector<double> fct(std::size_t(d) + 1, 1.0);
    for (int t = 1; t <= d; ++t) {
      px[t] = px[t - 1] * dx;
      py[t] = py[t - 1] * dy;
      fct[t] = fct[t - 1] * t;
    }
    for (int k = 0; k <= d; ++k)
      for (int j = 0; j <= k; ++j) {
        int i = k - j;
        double s = 0.0;
        for (int t1 = 0; i + t1 <= d; ++t1)
          for (int t2 = 0; i + t1 + j + t2 <= d; ++t2)
            s += A.at(i + t1, j + t2) * px[t1] * py[t2] / (fct[t1] * fct[t2]);
        B.at(i, j) = s;
      }
  }
  return B;
}

std::vector<double> compat_residual(const Jet& A, const Jet& B) {
  if (A.dim != B.dim || A.order != B.order)
    throw validation_error("compatibility residual: jets must match in dim and order");
  Jet P = jet_shift(B, A.base);
  std::vector<double> r(A.a.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = A.a[i] - P.a[i];
  return r;
}

bool compat_verdict(const Jet& A, const Jet& B, double C, double* worst_ratio) {
  std::vector<double> r = compat_residual(A, B);
  double sx = to_double(A.base[0] - B.base[0]);
  double sy = to_double(A.base[1] - B.base[1]);
  double sep = std::hypot(sx, sy);
  if (!(sep > 0)) throw validation_error("compatibility verdict: coincident base points");
  int d = A.order;
  double worst = 0.0;
  if (A.dim == 1) {
    for (int k = 0; k <= d; ++k)
      worst = std::max(worst, std::abs(r[k]) / std::pow(sep, d - k));
  } else {
    for (int k = 0; k <= d; ++k)
      for (int j = 0; j <= k; ++j)
        worst = std::max(worst, std::abs(r[TaylorTable::idx2(k - j, j)]) /
                                    std::pow(sep, d - k));
  }
  if (worst_ratio) *worst_ratio = worst;
  return worst <= C;
}

CompatReport jet_compat(const SmoothExpr& f, const Pt& x, const Pt& dir,
                        int order, double h0, int rungs) {
  if (rungs < 2) throw validation_error("compatibility ladder needs at least two rungs");
  double nrm = std::hypot(dir[0], dir[1]);
  if (!(nrm > 0)) throw validation_error("compatibility ladder needs a direction");
  Pt u{dir[0] / nrm, dir[1] / nrm};
  CompatReport rep;
  rep.order = order;
  std::array<Rational, 2> xr{rat_of_double(x[0]), rat_of_double(x[1])};
  Jet A = jet_of(f, xr, order);
  double scale = 1.0;
  for (double v : A.a) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < rungs; ++i) {
    double h = h0 / double(1 << i);
    std::array<Rational, 2> yr{rat_of_double(x[0] + h * u[0]),
                               rat_of_double(x[1] + h * u[1])};
    Jet B = jet_of(f, yr, order);
    double worst = 0.0;
    compat_verdict(A, B, 0.0, &worst);
    rep.sep.push_back(h);
    rep.worst_ratio.push_back(worst);
  }
  double r0 = rep.worst_ratio.front(), rl = rep.worst_ratio.back();
  if (rl <= 1e-10 * scale) {
    // residuals at the roundoff floor: flatter than any measurable rate
    rep.pass = true;
    rep.decay_exponent = std::numeric_limits<double>::infinity();
  } else {
    rep.decay_exponent = std::log2(r0 / rl) / (rungs - 1);
    rep.pass = rep.decay_exponent > 0.3;
  }
  return rep;
}

json CompatReport::to_json() const {
  return json{{"order", order},
              {"pass", pass},
              {"separations", sep},
              {"worst_ratio", worst_ratio},
              {"decay_exponent", decay_exponent}};
}

// ------------------------------------------------------------------ strata

json Stratum::to_json() const {
  if (kind == Kind::Point) return json{{"kind", "point"}, {"jet", jet.to_json()}};
  json tv = json::array();
  for (const auto& q : transverse) {
    json c = json::array();
    for (const auto& v : q) c.push_back(rat_to_json(v));
    tv.push_back(c);
  }
  return json{{"kind", "segment"},
              {"axis", axis},
              {"fixed", rat_to_json(fixed)},
              {"range", json::array({rat_to_json(a), rat_to_json(b)})},
              {"transverse", tv}};
}

Stratum Stratum::from_json(const json& j, int order, const std::string& where) {
  Stratum s;
  std::string kind = j.value("kind", "");
  if (kind == "point") {
    s.kind = Kind::Point;
    s.jet = Jet::from_json(j.at("jet"), where + ".jet");
    if (s.jet.dim != 2) throw validation_error(where + ": point jets must be two-dimensional");
    if (s.jet.order != order)
      throw validation_error(where + ": jet order differs from the field order");
    return s;
  }
  if (kind != "segment")
    throw validation_error(where + ": kind must be 'point' or 'segment'");
  s.kind = Kind::Segment;
  s.axis = j.at("axis").get<int>();
  if (s.axis != 0 && s.axis != 1) throw validation_error(where + ": axis must be 0 or 1");
  s.fixed = rat_from_json(j.at("fixed"), where + ".fixed");
  const json& r = j.at("range");
  if (!r.is_array() || r.size() != 2)
    throw validation_error(where + ": range must be a pair");
  s.a = rat_from_json(r[0], where + ".range");
  s.b = rat_from_json(r[1], where + ".range");
  if (!(s.a < s.b)) throw validation_error(where + ": degenerate segment range");
  const json& tv = j.at("transverse");
  if (!tv.is_array() || int(tv.size()) > order + 1)
    throw validation_error(where + ": transverse data exceeds the field order");
  for (const auto& q : tv) {
    std::vector<Rational> poly;
    for (const auto& c : q) poly.push_back(rat_from_json(c, where + ".transverse"));
    s.transverse.push_back(std::move(poly));
  }
  return s;
}

void JetField::validate() const {
  if (dim != 1 && dim != 2)
    throw validation_error("jet fields live in dimension 1 or 2");
  if (order < 0 || order > kMaxOrder)
    throw validation_error("jet field order out of range");
  for (std::size_t i = 0; i < strata.size(); ++i) {
    const Stratum& s = strata[i];
    std::string where = "strata[" + std::to_string(i) + "]";
    if (s.kind == Stratum::Kind::Point) {
      if (s.jet.dim != dim || s.jet.order != order)
        throw validation_error(where + ": jet does not match the field");
    } else {
      if (dim == 1)
        throw validation_error(where + ": segment strata need two dimensions");
      if (!(s.a < s.b)) throw validation_error(where + ": degenerate segment");
      if (int(s.transverse.size()) > order + 1)
        throw validation_error(where + ": transverse data exceeds the field order");
    }
  }
  // exact pairwise disjointness of closures
  auto on_segment = [](const Stratum& seg, const std::array<Rational, 2>& p) {
    const Rational& run = seg.axis == 0 ? p[0] : p[1];
    const Rational& fix = seg.axis == 0 ? p[1] : p[0];
    return fix == seg.fixed && seg.a <= run && run <= seg.b;
  };
  for (std::size_t i = 0; i < strata.size(); ++i)
    for (std::size_t j = i + 1; j < strata.size(); ++j) {
      const Stratum &s = strata[i], &t = strata[j];
      std::string where =
          "strata[" + std::to_string(i) + "]/[" + std::to_string(j) + "]";
      if (s.kind == Stratum::Kind::Point && t.kind == Stratum::Kind::Point) {
        if (s.jet.base == t.jet.base)
          throw validation_error(where + ": coincident point strata");
      } else if (s.kind == Stratum::Kind::Point) {
        if (on_segment(t, s.jet.base))
          throw validation_error(where + ": point stratum lies on a segment");
      } else if (t.kind == Stratum::Kind::Point) {
        if (on_segment(s, t.jet.base))
          throw validation_error(where + ": point stratum lies on a segment");
      } else if (s.axis == t.axis) {
        if (s.fixed == t.fixed && std::max(s.a, t.a) <= std::min(s.b, t.b))
          throw validation_error(where + ": overlapping collinear segments");
      } else {
        const Stratum& h = s.axis == 0 ? s : t;  // horizontal: y fixed
        const Stratum& v = s.axis == 0 ? t : s;  // vertical: x fixed
        if (h.a <= v.fixed && v.fixed <= h.b && v.a <= h.fixed && h.fixed <= v.b)
          throw validation_error(where + ": crossing segments");
      }
    }
}

json JetField::to_json() const {
  json arr = json::array();
  for (const auto& s : strata) arr.push_back(s.to_json());
  return json{{"dim", dim}, {"order", order}, {"strata", arr}};
}

JetField JetField::from_json(const json& j) {
  JetField f;
  f.dim = j.value("dim", 2);
  f.order = j.value("order", -1);
  if (f.order < 0) throw validation_error("jet field: missing order");
  const json& arr = j.at("strata");
  if (!arr.is_array()) throw validation_error("jet field: strata must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i)
    f.strata.push_back(
        Stratum::from_json(arr[i], f.order, "strata[" + std::to_string(i) + "]"));
  f.validate();
  return f;
}

}  // namespace bf
