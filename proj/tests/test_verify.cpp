#include "doctest.h"

#include <cmath>

#include "bf/cutoff.hpp"
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

// degree-27 odd polynomial with alternating reciprocal-factorial coefficients:
// within 1.6e-8 of the sine on [0, 2pi], and fully decidable for the evaluator
SmoothExpr sine_like(int dim = 1) {
  std::vector<Rational> c(28, Rational(0));
  Rational fact(1);
  int sign = 1;
  for (int k = 1; k <= 27; k += 2) {
    fact = Rational(1);
    for (int i = 2; i <= k; ++i) fact *= i;
    c[std::size_t(k)] = Rational(sign) / fact;
    sign = -sign;
  }
  return ex_poly1(c, 0, dim);
}

}  // namespace

TEST_CASE("finite differences recover polynomial derivatives") {
  auto x3 = ex_poly1({Rational(0), Rational(0), Rational(0), Rational(1)}, 0);
  FdJet fd = fd_jet(x3, {2.0, 0.0}, 3);
  double want[4] = {8.0, 12.0, 12.0, 6.0};
  for (int k = 0; k <= 3; ++k) {
    CHECK(fd.at(k) == doctest::Approx(want[k]).epsilon(1e-8));
    CHECK(std::abs(fd.at(k) - want[k]) <= std::max(fd.err_at(k), 1e-8));
  }
}

TEST_CASE("finite differences carry honest error estimates") {
  auto e = ex_exp(ex_coord(0, 1));
  FdJet fd = fd_jet(e, {0.0, 0.0}, 6);
  for (int k = 0; k <= 6; ++k) {
    CHECK(std::abs(fd.at(k) - 1.0) <= fd.err_at(k) * 1.5 + 1e-12);
    CHECK(fd.err_at(k) < 0.1);
  }

  // near the edge of the flat kernel's support the stencil straddles the
  // kink in resolution: the estimate must blow up rather than lie
  auto b = ex_beta(ex_coord(0, 1));
  FdJet edge = fd_jet(b, {0.95, 0.0}, 4, 0.1);
  double worst = 0.0;
  for (int k = 0; k <= 4; ++k) worst = std::max(worst, edge.err_at(k));
  CHECK(worst > 1e-6);
}

TEST_CASE("finite differences never consult the derivative path") {
  // a jet of order above the fd cap is rejected
  auto e = ex_exp(ex_coord(0, 1));
  CHECK_THROWS_AS(fd_jet(e, {0.0, 0.0}, 11), validation_error);
}

TEST_CASE("vanishing order: finite slopes") {
  auto x5 = ex_monomial(0, Rational(0), 5, 1, false);
  OrderEstimate est = vanishing_order1(x5, 0.0, 1e-2);
  CHECK(est.stable);
  CHECK_FALSE(est.infinite);
  CHECK(est.slope == doctest::Approx(5.0).epsilon(0.02));
  CHECK(est.order == 5);
}

TEST_CASE("vanishing order: flat points flagged infinite") {
  auto phi = ex_phi(ex_coord(0, 1));
  OrderEstimate est = vanishing_order(phi, {0.0, 0.0}, {1.0, 0.0}, 1e-1);
  CHECK(est.infinite);

  // multiplying by a polynomial keeps the flatness
  auto x2phi = ex_mul(ex_monomial(0, Rational(0), 2, 1, false), phi);
  OrderEstimate est2 = vanishing_order(x2phi, {0.0, 0.0}, {1.0, 0.0}, 1e-1);
  CHECK(est2.infinite);
}

TEST_CASE("sup norms on a doubling grid") {
  auto s = sine_like();
  Region reg = box1(0.0, 6.283185307179586);
  auto sup = sup_norm(s, reg, 0);
  CHECK(sup[0] == doctest::Approx(1.0).epsilon(1e-6));

  auto x2 = ex_monomial(0, Rational(0), 2, 1, false);
  auto sup2 = sup_norm(x2, box1(-1, 1), 1);
  CHECK(sup2[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(sup2[1] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("sweeps are thread-count invariant") {
  auto s = sine_like();
  Region reg = box1(0.0, 6.283185307179586);
  set_sweep_threads(1);
  auto one = sup_norm(s, reg, 3);
  set_sweep_threads(4);
  auto four = sup_norm(s, reg, 3);
  set_sweep_threads(1);
  REQUIRE(one.size() == four.size());
  for (std::size_t k = 0; k < one.size(); ++k) CHECK(one[k] == four[k]);
}

TEST_CASE("measured sups sit under certified cutoff bounds") {
  CutoffModel m({{Rational(-1), Rational(1)}}, {Rational(1, 10), Rational(1, 10)});
  SmoothExpr w = ex_cutoff1d({{Rational(-1), Rational(1)}},
                             {Rational(1, 10), Rational(1, 10)}, 0, 1);
  Region reg = box1(-1.5, 1.5);
  auto sup = sup_norm(w, reg, 3);
  for (int k = 0; k <= 3; ++k)
    CHECK(sup[std::size_t(k)] <= m.certified_bound(k) * (1 + 1e-9));
}

TEST_CASE("verification report bookkeeping") {
  VerificationReport rep;
  rep.add_le("a", 1.0, 2.0);
  rep.add_le("b", 3.0, 2.0, "expected failure");
  CHECK_FALSE(rep.ok());
  CHECK(rep.checks[0].pass);
  CHECK_FALSE(rep.checks[1].pass);
  json j = rep.to_json();
  CHECK(j.at("checks").size() == 2);
  CHECK(j.at("ok") == false);
}
