#include "doctest.h"

#include <cmath>

#include "bf/realize.hpp"
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

Region box2(double lo, double hi) {
  Region r;
  r.box.dim = 2;
  r.box.lo = {rat_of_double(lo), rat_of_double(lo)};
  r.box.hi = {rat_of_double(hi), rat_of_double(hi)};
  return r;
}

SetDescriptor points1(std::initializer_list<Rational> xs) {
  SetDescriptor s;
  s.dim = 1;
  for (const auto& x : xs) s.comps.push_back({{x, Rational(0)}, Rational(0)});
  return s;
}

double fact(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

TEST_CASE("borel: zero and polynomial jets") {
  Jet z = Jet::zero(1, 4, {Rational(0), Rational(0)});
  auto Rz = borel_realize(z, box1(-1, 1));
  for (double x : {-0.9, -0.1, 0.0, 0.4}) CHECK(Rz.f.eval1(x) == 0.0);

  Jet p = Jet::zero(1, 3, {Rational(0), Rational(0)});
  p.at(0) = 2.0;
  p.at(1) = -1.0;
  p.at(2) = 4.0;
  p.at(3) = 6.0;
  auto Rp = borel_realize(p, box1(-8, 8));
  auto d = Rp.f.derivs({0.0, 0.0}, 3);
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(d[3] == doctest::Approx(6.0).epsilon(1e-12));
  // near the base point every cutoff is 1: f is the Taylor polynomial
  double x = to_double(Rp.schedules[0].eps.back()) / 4;
  double taylor = 2.0 - x + 2.0 * x * x + x * x * x;
  CHECK(Rp.f.eval1(x) == doctest::Approx(taylor).epsilon(1e-13));
}

TEST_CASE("borel: schedule tails sit inside the factorial budget") {
  Jet j = Jet::zero(1, 8, {Rational(0), Rational(0)});
  for (int k = 0; k <= 8; ++k) j.at(k) = fact(k);
  auto R = borel_realize(j, box1(-1, 1));
  REQUIRE(R.schedules.size() == 1);
  const Schedule& sch = R.schedules[0];
  sch.check();
  for (std::size_t k = 0; k < sch.tail.size(); ++k)
    for (double t : sch.tail[k]) CHECK(t <= sch.budget[k]);
  for (std::size_t k = 1; k < sch.eps.size(); ++k)
    CHECK(sch.eps[k] <= sch.eps[k - 1]);
}

TEST_CASE("multi-point realization matches every jet and has tagged support") {
  JetField F;
  F.dim = 1;
  F.order = 2;
  auto add_point = [&](const Rational& base, double a0, double a1, double a2) {
    Stratum s;
    s.kind = Stratum::Kind::Point;
    s.jet = Jet::zero(1, 2, {base, Rational(0)});
    s.jet.at(0) = a0;
    s.jet.at(1) = a1;
    s.jet.at(2) = a2;
    F.strata.push_back(s);
  };
  add_point(Rational(0), 1.0, -2.0, 0.5);
  add_point(Rational(1, 2), -3.0, 7.0, 11.0);
  auto R = multi_borel(F, box1(-1, 2));
  for (const auto& s : F.strata) {
    auto d = R.f.derivs(s.jet.base_d(), 2);
    for (int k = 0; k <= 2; ++k)
      CHECK(d[std::size_t(k)] ==
            doctest::Approx(s.jet.at(k)).epsilon(1e-11));
  }
  // outside both schedules' widest cutoffs the sum is identically zero
  double r0 = to_double(R.schedules[0].eps[0]);
  double r1 = to_double(R.schedules[1].eps[0]);
  double far = std::max(r0, 0.5 + r1) + 0.01;
  CHECK(R.f.eval1(far) == 0.0);
  CHECK(R.f.eval1(-r0 - 0.01) == 0.0);
}

TEST_CASE("single-point field reduces to borel") {
  JetField F;
  F.dim = 1;
  F.order = 3;
  Stratum s;
  s.kind = Stratum::Kind::Point;
  s.jet = Jet::zero(1, 3, {Rational(1, 4), Rational(0)});
  s.jet.at(0) = 2.0;
  s.jet.at(2) = -6.0;
  F.strata.push_back(s);
  auto R = multi_borel(F, box1(-1, 1));
  auto d = R.f.derivs({0.25, 0.0}, 3);
  CHECK(d[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(-6.0).epsilon(1e-12));
  CHECK(d[3] == doctest::Approx(0.0));
}

TEST_CASE("stratified extension: segment data and endpoint flatness") {
  JetField F;
  F.dim = 2;
  F.order = 1;

  Stratum pt;
  pt.kind = Stratum::Kind::Point;
  pt.jet = Jet::zero(2, 1, {Rational(0), Rational(0)});
  pt.jet.at(0, 0) = 5.0;
  F.strata.push_back(pt);

  Stratum seg;
  seg.kind = Stratum::Kind::Segment;
  seg.axis = 0;
  seg.fixed = Rational(0);
  seg.a = Rational(1, 5);
  seg.b = Rational(4, 5);
  seg.transverse = {{Rational(1)}, {Rational(0), Rational(1)}};
  F.strata.push_back(seg);

  auto R = whitney_extend_strata(F, box2(-1, 1));

  // the ramp margin is a tenth of the segment: sample the certified middle
  for (double x : {0.3, 0.45, 0.6, 0.7}) {
    auto d = R.f.derivs({x, 0.0}, 1);
    CHECK(std::abs(d[TaylorTable::idx2(0, 0)] - 1.0) <= 1e-9);
    CHECK(std::abs(d[TaylorTable::idx2(0, 1)] - x) <= 1e-9);
  }
  auto dp = R.f.derivs({0.0, 0.0}, 1);
  CHECK(dp[TaylorTable::idx2(0, 0)] == doctest::Approx(5.0).epsilon(1e-11));

  // segment term switches on flatly at its endpoint
  auto est = vanishing_order(R.f, {0.2, 0.0}, {1.0, 0.0}, 1e-2);
  CHECK((est.infinite || (est.stable && est.slope >= 8.0)));
}

TEST_CASE("filtered assembly: zero prefix and declared-order rejection") {
  SetDescriptor Z = points1({Rational(0)});
  CompletionPrefix zero;
  zero.Z = Z;
  zero.terms.push_back({ex_const(Rational(0), 1), 1});
  auto R0 = realize_filtered(zero, box1(-1, 1));
  for (double x : {-0.5, 0.0, 0.7}) CHECK(R0.f.eval1(x) == 0.0);

  CompletionPrefix bad;
  bad.Z = Z;
  // constant 1 does not vanish at 0 at all: the declaration is rejected
  bad.terms.push_back({ex_const(Rational(1), 1), 1});
  CHECK_THROWS_AS(realize_filtered(bad, box1(-1, 1)), validation_error);
}

TEST_CASE("filtered assembly: prefix derivatives survive at the base set") {
  SetDescriptor Z = points1({Rational(0)});
  CompletionPrefix P;
  P.Z = Z;
  for (int j = 1; j <= 3; ++j) {
    std::vector<Rational> c(std::size_t(2 * j + 1), Rational(0));
    c.back() = 1;  // x^(2j)
    P.terms.push_back({ex_poly1(c, 0), j});
  }
  auto R = realize_filtered(P, box1(-1, 1));
  auto d = R.f.derivs({0.0, 0.0}, 6);
  // tau_j = 1 near 0, so derivatives of f at 0 are those of sum x^(2j)
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(d[4] == doctest::Approx(24.0).epsilon(1e-10));
  CHECK(d[6] == doctest::Approx(720.0).epsilon(1e-10));

  // remainder after N terms vanishes to order >= N at 0
  double h0 = to_double(R.schedule.eps.back()) / 2;
  for (int N = 1; N <= 2; ++N) {
    auto est = vanishing_order1(R.remainder(N), 0.0, h0);
    CHECK((est.infinite || (est.stable && est.slope >= N - 0.1)));
  }
}

TEST_CASE("cubic under the two-point filtration keeps its slopes") {
  // g1 = x(x-1)(x-1/2) = x^3 - 3/2 x^2 + 1/2 x, vanishing set {0, 1}
  SetDescriptor Z = points1({Rational(0), Rational(1)});
  CompletionPrefix P;
  P.Z = Z;
  P.terms.push_back(
      {ex_poly1({Rational(0), Rational(1, 2), Rational(-3, 2), Rational(1)}, 0),
       1});
  auto R = realize_filtered(P, box1(-0.5, 1.5));
  auto d0 = R.f.derivs({0.0, 0.0}, 1);
  auto d1 = R.f.derivs({1.0, 0.0}, 1);
  CHECK(d0[0] == 0.0);
  CHECK(std::abs(d0[1] - 0.5) <= 1e-10);
  CHECK(d1[0] == 0.0);
  CHECK(std::abs(d1[1] - 0.5) <= 1e-10);

  // any such interpolant crosses zero between the plateaus
  bool pos = false, neg = false;
  for (int i = 0; i <= 900; ++i) {
    double v = R.f.eval1(0.05 + 0.9 * i / 900);
    pos = pos || v > 0;
    neg = neg || v < 0;
  }
  CHECK(pos);
  CHECK(neg);
}

TEST_CASE("positivity repair leaves the set's derivatives alone") {
  SetDescriptor Z = points1({Rational(0)});
  Region reg = box1(-1, 1);

  auto Rz = ensure_positive(ex_const(Rational(0), 1), Z, Rational(1, 10), reg);
  CHECK(Rz.eval1(0.0) == 0.0);
  CHECK(Rz.eval1(0.04) == 0.0);  // cut to vanish on the eps/2 core
  for (double x : {-0.9, -0.3, 0.2, 0.8}) CHECK(Rz.eval1(x) > 0.0);

  json rep;
  auto Rm = ensure_positive(ex_const(Rational(-1), 1), Z, Rational(1, 10), reg,
                            &rep);
  for (double x : {-0.9, -0.5, 0.2, 0.11, 0.8}) CHECK(Rm.eval1(x) > 0.0);

  // derivative preservation at Z, orders <= 10
  auto base = ex_mul(ex_exp(ex_coord(0, 1)), ex_beta(ex_coord(0, 1)));
  auto fixed = ensure_positive(base, Z, Rational(1, 10), reg);
  auto db = base.derivs({0.0, 0.0}, 10);
  auto df = fixed.derivs({0.0, 0.0}, 10);
  for (int k = 0; k <= 10; ++k)
    CHECK(std::abs(db[std::size_t(k)] - df[std::size_t(k)]) <= 1e-12);
}

TEST_CASE("flat ramp contact is exact on both sides") {
  auto r = flat_ramp(0, Rational(0), Rational(1, 4), true, 1);
  CHECK(r.eval1(-0.5) == 0.0);
  CHECK(r.eval1(0.0) == 0.0);
  CHECK(r.eval1(0.25) == 1.0);
  CHECK(r.eval1(0.9) == 1.0);
  double mid = r.eval1(0.125);
  CHECK(mid > 0.0);
  CHECK(mid < 1.0);
  auto est = vanishing_order1(r, 0.0, 1e-2);
  CHECK((est.infinite || est.slope > 8));
}
