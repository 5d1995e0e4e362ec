#include "doctest.h"

#include <cmath>
#include <random>

#include "bf/cutoff.hpp"
#include "bf/expr.hpp"
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

SetDescriptor points1(std::initializer_list<Rational> xs) {
  SetDescriptor s;
  s.dim = 1;
  for (const auto& x : xs) s.comps.push_back({{x, Rational(0)}, Rational(0)});
  return s;
}

}  // namespace

TEST_CASE("eval basics") {
  auto one = ex_const(Rational(1), 1);
  CHECK(one.eval1(0.37) == 1.0);
  CHECK(one.eval1(-5.0) == 1.0);

  auto b = ex_beta(ex_coord(0, 1));
  CHECK(b.eval1(0.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(b.eval1(1.5) == 0.0);   // exact: outside the support
  CHECK(b.eval1(-2.0) == 0.0);
  CHECK(b.eval1(1.0) == 0.0);   // closure boundary included
}

TEST_CASE("derivative tables on closed forms") {
  auto e = ex_exp(ex_coord(0, 1));
  auto d = e.derivs({1.0, 0.0}, 5);
  for (int k = 0; k <= 5; ++k)
    CHECK(d[std::size_t(k)] ==
          doctest::Approx(2.718281828459045).epsilon(1e-13));

  auto x2 = ex_poly1({Rational(0), Rational(0), Rational(1)}, 0);
  auto d2 = x2.derivs({3.0, 0.0}, 3);
  CHECK(d2[0] == doctest::Approx(9.0));
  CHECK(d2[1] == doctest::Approx(6.0));
  CHECK(d2[2] == doctest::Approx(2.0));
  CHECK(d2[3] == 0.0);

  // one-sided flat kernel: all derivatives vanish at the contact point
  auto p = ex_phi(ex_coord(0, 1));
  auto dp = p.derivs({0.0, 0.0}, 10);
  for (double v : dp) CHECK(v == 0.0);
  // oracle from the right: the values themselves collapse
  for (double h : {1e-2, 1e-3}) CHECK(p.eval1(h) < 1e-12);
}

TEST_CASE("derivative propagation agrees with finite differences") {
  auto x = ex_coord(0, 1);
  auto x3 = ex_poly1({Rational(0), Rational(0), Rational(0), Rational(1)}, 0);
  auto f = ex_add(ex_mul(ex_exp(x), ex_beta(ex_scale(x, Rational(1, 2)))), x3);
  for (double pt : {-0.7, 0.1, 0.8}) {
    auto d = f.derivs({pt, 0.0}, 6);
    FdJet fd = fd_jet(f, {pt, 0.0}, 6);
    for (int k = 0; k <= 6; ++k) {
      double ref = d[std::size_t(k)];
      double tol = 1e-6 * std::max(1.0, std::abs(ref)) + fd.err[std::size_t(k)];
      CHECK(std::abs(fd.value[std::size_t(k)] - ref) <= tol);
    }
  }
}

TEST_CASE("support tags are sound") {
  auto bump = ex_base_cutoff(0, Rational(0), Rational(1, 4), 1);
  CHECK(bump.eval1(0.0) == 1.0);      // plateau is exact
  CHECK(bump.eval1(0.12) == 1.0);     // |x| <= eps/2
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.2500001, 2.0);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng) * (i % 2 ? 1.0 : -1.0);
    CHECK(bump.eval1(x) == 0.0);
  }
  CHECK_FALSE(bump.support().whole);
}

TEST_CASE("division requires a certified denominator") {
  auto x = ex_coord(0, 1);
  auto one = ex_const(Rational(1), 1);
  CHECK_THROWS_AS(ex_div(one, x, box1(-1, 1)), construction_error);

  auto den = ex_poly1({Rational(1), Rational(0), Rational(1)}, 0);  // 1 + x^2
  auto q = ex_div(one, den, box1(-1, 1));
  CHECK(q.eval1(0.0) == doctest::Approx(1.0));
  CHECK(q.eval1(1.0) == doctest::Approx(0.5));
  auto dq = q.derivs({0.5, 0.0}, 2);
  // d/dx 1/(1+x^2) = -2x/(1+x^2)^2
  CHECK(dq[1] == doctest::Approx(-1.0 / 1.5625).epsilon(1e-12));
}

TEST_CASE("plateau cutoff: sandwich and transition bounds") {
  CutoffModel m({{Rational(-1), Rational(1)}}, {Rational(1, 10)});
  for (double x = -1.0; x <= 1.0; x += 0.125) CHECK(m.value(x) == 1.0);
  CHECK(m.value(1.1000001) == 0.0);
  CHECK(m.value(-1.2) == 0.0);
  for (double x = -1.3; x <= 1.3; x += 0.01) {
    double v = m.value(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  auto cert = certify_cutoff(m, 1);
  CHECK(cert.measured_sup[1] <= cert.bound[1]);
  CHECK(cert.bound[1] <= psi_l1_deriv() / 0.1 * 1.0000001);
}

TEST_CASE("cutoff certificate: four widths, fitted constant") {
  CutoffModel m({{Rational(-1), Rational(1)}},
                {Rational(1, 10), Rational(1, 20), Rational(1, 40),
                 Rational(1, 80)});
  auto cert = certify_cutoff(m, 4);
  CHECK(cert.fitted_C <= 10.0);
  double dprod = 1.0;
  const double ds[] = {0.1, 0.05, 0.025, 0.0125};
  for (int k = 1; k <= 4; ++k) {
    dprod *= ds[k - 1];
    CHECK(cert.measured_sup[std::size_t(k)] <=
          std::pow(cert.fitted_C, k) / dprod * (1 + 1e-9));
  }
}

TEST_CASE("distance gauge is the flat kernel of the distance") {
  auto g = ex_dist_gauge(points1({Rational(0)}), box1(-1, 1));
  CHECK(g.eval1(0.5) ==
        doctest::Approx(0.1353352832366127).epsilon(1e-13));  // exp(-1/0.5)
  CHECK(g.eval1(0.0) == 0.0);

  auto g0 = ex_dist_gauge(SetDescriptor{}, box1(-1, 1));
  CHECK(g0.eval1(0.3) == 1.0);  // empty set: unit gauge

  // flat contact: high-order finite differences see nothing at 1e-3
  FdJet fd = fd_jet(g, {1e-3, 0.0}, 10, 1e-3);
  CHECK(std::abs(fd.value[10]) < 1e-8);
}

TEST_CASE("rational evaluation on decidable nodes") {
  auto p = ex_poly1({Rational(1, 3), Rational(-2), Rational(1)}, 0);
  Rational v = p.eval_exact({Rational(1, 2), Rational(0)});
  CHECK(v == Rational(1, 3) - 1 + Rational(1, 4));

  auto bump = ex_base_cutoff(0, Rational(1, 3), Rational(1, 8), 1);
  CHECK(bump.eval_exact({Rational(1, 3), Rational(0)}) == 1);
  CHECK(bump.eval_exact({Rational(2, 3), Rational(0)}) == 0);

  auto e = ex_exp(ex_coord(0, 1));
  CHECK_THROWS_AS(e.eval_exact({Rational(1), Rational(0)}),
                  construction_error);
}

TEST_CASE("expression JSON round-trip is evaluation-identical") {
  auto x = ex_coord(0, 1);
  auto f = ex_add(
      ex_mul(ex_beta(x), ex_exp(ex_scale(x, Rational(-1)))),
      ex_cutoff1d({{Rational(-1, 2), Rational(1, 2)}}, {Rational(1, 8)}, 0, 1));
  auto j = f.to_json();
  auto g = SmoothExpr::from_json(j);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    double xv = u(rng);
    CHECK(f.eval1(xv) == g.eval1(xv));
  }
  CHECK(j.dump() == g.to_json().dump());
}

TEST_CASE("order cap is enforced") {
  auto e = ex_exp(ex_coord(0, 1));
  CHECK_THROWS(e.derivs({0.0, 0.0}, 61));
}
