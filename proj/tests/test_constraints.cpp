#include "doctest.h"

#include <cmath>

#include "bf/constraints.hpp"
#include "bf/verify.hpp"

using namespace bf;

namespace {

Region box1(double lo, double hi) {
  Region r;
  r.box.dim = 1;
  r.box.lo = {rat_of_double(lo), Rational(0)};
  r.box.hi = {rat_of_double(hi), Rational(0)};
  return r;
}

Box ibox(const Rational& lo, const Rational& hi) {
  Box b;
  b.dim = 1;
  b.lo = {lo, Rational(0)};
  b.hi = {hi, Rational(0)};
  return b;
}

SetDescriptor points1(std::initializer_list<Rational> xs) {
  SetDescriptor s;
  s.dim = 1;
  for (const auto& x : xs) s.comps.push_back({{x, Rational(0)}, Rational(0)});
  return s;
}

Functional value_at(const Rational& p, double target) {
  Functional l;
  l.kind = Functional::Kind::Punctual;
  l.base = {p, Rational(0)};
  l.order = {0, 0};
  l.target = target;
  return l;
}

Functional deriv_at(const Rational& p, int k, double target) {
  Functional l = value_at(p, target);
  l.order = {k, 0};
  return l;
}

Functional moment(const Rational& lo, const Rational& hi, double target) {
  Functional l;
  l.kind = Functional::Kind::Moment;
  l.weight = ex_const(Rational(1), 1);
  l.box = ibox(lo, hi);
  l.target = target;
  return l;
}

}  // namespace

TEST_CASE("no conditions: input returned untouched") {
  auto f0 = ex_exp(ex_coord(0, 1));
  auto f = solve_constraints(f0, points1({Rational(0)}), Rational(1, 100), {},
                             box1(-1, 1));
  for (double x : {-0.5, 0.2, 0.9}) CHECK(f.eval1(x) == f0.eval1(x));
}

TEST_CASE("three mixed conditions, jet pinned at the protected set") {
  auto f0 = ex_exp(ex_coord(0, 1));
  SetDescriptor Z = points1({Rational(0)});
  Region reg = box1(-0.5, 2.5);
  std::vector<Functional> conds = {
      value_at(Rational(1), 5.0),
      moment(Rational(0), Rational(2), 0.0),
      deriv_at(Rational(3, 2), 2, -2.0),
  };
  json rep;
  auto f = solve_constraints(f0, Z, Rational(1, 100), conds, reg, &rep);

  for (const auto& l : conds)
    CHECK(std::abs(apply_functional(l, f) - l.target) <= 1e-8);
  CHECK(rep.at("max_residual").get<double>() <= 1e-8);

  // the correction is identically zero near Z: derivatives identical
  auto d0 = f0.derivs({0.0, 0.0}, 20);
  auto d = f.derivs({0.0, 0.0}, 20);
  for (int k = 0; k <= 20; ++k) CHECK(d[std::size_t(k)] == d0[std::size_t(k)]);
}

TEST_CASE("correction is linear in the targets") {
  auto f0 = ex_const(Rational(0), 1);
  SetDescriptor Z = points1({Rational(0)});
  Region reg = box1(-0.5, 2.5);
  auto solve_to = [&](double t1, double t2) {
    std::vector<Functional> conds = {value_at(Rational(1), t1),
                                     deriv_at(Rational(7, 4), 1, t2)};
    return solve_constraints(f0, Z, Rational(1, 100), conds, reg);
  };
  auto fa = solve_to(1.0, -3.0);
  auto fb = solve_to(2.0, 5.0);
  auto fm = solve_to(1.5, 1.0);
  for (double x : {0.7, 1.0, 1.3, 1.9})
    CHECK(std::abs((fa.eval1(x) + fb.eval1(x)) / 2 - fm.eval1(x)) <= 1e-10);
}

TEST_CASE("contradictions and precondition violations") {
  auto f0 = ex_const(Rational(0), 1);
  SetDescriptor Z = points1({Rational(0)});
  Region reg = box1(-0.5, 2.5);

  std::vector<Functional> dup = {value_at(Rational(1), 5.0),
                                 value_at(Rational(1), 6.0)};
  CHECK_THROWS_AS(
      solve_constraints(f0, Z, Rational(1, 100), dup, reg),
      construction_error);

  std::vector<Functional> tooclose = {value_at(Rational(1, 200), 1.0)};
  CHECK_THROWS_AS(
      solve_constraints(f0, Z, Rational(1, 100), tooclose, reg),
      validation_error);

  // a moment whose whole box is condensed inside the protected zone
  std::vector<Functional> condensed = {
      moment(Rational(-1, 300), Rational(1, 300), 1.0)};
  CHECK_THROWS_AS(
      solve_constraints(f0, Z, Rational(1, 100), condensed, reg),
      validation_error);

  // a moment that merely touches the protected zone is allowed
  std::vector<Functional> touching = {moment(Rational(0), Rational(2), 3.0)};
  auto f = solve_constraints(f0, Z, Rational(1, 100), touching, reg);
  CHECK(std::abs(apply_functional(touching[0], f) - 3.0) <= 1e-8);

  std::vector<Functional> many(65, value_at(Rational(1), 1.0));
  CHECK_THROWS_AS(
      solve_constraints(f0, Z, Rational(1, 100), many, reg),
      validation_error);
}

TEST_CASE("functional JSON round-trip") {
  Functional l = moment(Rational(0), Rational(2), -1.5);
  Functional m = Functional::from_json(l.to_json(), 1, "test");
  CHECK(m.kind == Functional::Kind::Moment);
  CHECK(m.target == -1.5);
  CHECK(m.box.lo[0] == 0);
  CHECK(m.box.hi[0] == 2);

  Functional p = deriv_at(Rational(3, 2), 2, -2.0);
  Functional q = Functional::from_json(p.to_json(), 1, "test");
  CHECK(q.order[0] == 2);
  CHECK(q.base[0] == Rational(3, 2));
}

TEST_CASE("boundary decay wrap") {
  // region (0,1), protected point 1/2, envelope vanishing at both ends
  Region reg = box1(0, 1);
  auto x = ex_coord(0, 1);
  auto q = ex_mul(ex_phi(x), ex_phi(ex_sub(ex_const(Rational(1), 1), x)));

  CompletionPrefix P;
  P.Z = points1({Rational(1, 2)});
  for (int j = 1; j <= 2; ++j) {
    std::vector<Rational> c(std::size_t(2 * j + 1), Rational(0));
    c.back() = 1;
    P.terms.push_back({ex_mul(ex_poly1(c, 0, 1, Rational(1, 2)), q), j});
  }
  DecaySpec spec;
  for (int k = 0; k <= 3; ++k) spec.envelopes.push_back(q);

  json rep;
  auto f = decay_wrap(P, spec, reg, &rep);
  CHECK(rep.at("z_compactly_embedded").get<bool>());
  CHECK(rep.at("collar_verified_only").get<bool>());

  // ratio ladders: |f^(k)(x)| / q_k(x) bounded approaching both ends
  for (int k = 0; k <= 3; ++k) {
    for (bool left : {true, false}) {
      double worst = 0.0;
      int arg = -1;
      for (int t = 0; t < 10; ++t) {
        double d = 0.125 * std::pow(2.0, -t);
        double xv = left ? d : 1.0 - d;
        double qv = q.eval1(xv);
        double fv = f.derivs({xv, 0.0}, k)[std::size_t(k)];
        double ratio = fv == 0.0 ? 0.0 : std::abs(fv) / qv;
        CHECK(std::isfinite(ratio));
        if (ratio > worst) {
          worst = ratio;
          arg = t;
        }
      }
      CHECK(arg < 9);  // the max sits away from the deepest rung
    }
  }

  // deep inside the collar the wrap is exactly zero
  CHECK(f.eval1(1e-4) == 0.0);
  CHECK(f.eval1(1.0 - 1e-4) == 0.0);

  // near the compactly embedded Z the assembly is untouched: the window
  // factors are identically 1 there
  auto plain = realize_filtered(P, reg);
  auto dw = f.derivs({0.5, 0.0}, 2);
  auto dp = plain.f.derivs({0.5, 0.0}, 2);
  for (int k = 0; k <= 2; ++k)
    CHECK(dw[std::size_t(k)] == doctest::Approx(dp[std::size_t(k)]));
}

TEST_CASE("decay wrap rejects envelope violations and empty prefixes pass") {
  Region reg = box1(0, 1);
  auto x = ex_coord(0, 1);
  auto q = ex_mul(ex_phi(x), ex_phi(ex_sub(ex_const(Rational(1), 1), x)));

  CompletionPrefix Z0;
  Z0.Z = points1({Rational(1, 2)});
  Z0.terms.push_back({ex_const(Rational(0), 1), 1});
  DecaySpec spec;
  spec.envelopes = {q, q};
  auto f0 = decay_wrap(Z0, spec, reg);
  for (double xv : {0.1, 0.5, 0.77}) CHECK(f0.eval1(xv) == 0.0);

  // a term with a germ far above the envelope at a boundary end touched by
  // the closure of Z is rejected with the offending sample
  CompletionPrefix bad;
  bad.Z = points1({Rational(0)});
  bad.terms.push_back(
      {ex_poly1({Rational(0), Rational(1)}, 0), 1});  // x: way above q near 0
  DecaySpec spec2;
  spec2.envelopes = {q};
  CHECK_THROWS_AS(decay_wrap(bad, spec2, reg), validation_error);
}
