#include "doctest.h"

#include <cmath>

#include "bf/flatzero.hpp"
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

TEST_CASE("empty chain gives the unit function") {
  ZeroChain c;
  auto F = flat_zero_chain(c, box1(-1, 1));
  for (double x : {-0.8, 0.0, 0.3}) CHECK(F.tau.eval1(x) == 1.0);
}

TEST_CASE("single point set: flat positive vanishing only there") {
  ZeroChain c;
  c.sets.push_back(points1({Rational(0)}));
  auto F = flat_zero_chain(c, box1(-1, 1));
  CHECK(F.tau.eval_exact({Rational(0), Rational(0)}) == 0);
  for (double x : {-0.9, -0.2, 0.1, 0.5, 0.95}) CHECK(F.tau.eval1(x) > 0.0);
  auto est = vanishing_order1(F.tau, 0.0, to_double(F.eps.back()) / 100);
  CHECK(est.infinite);
}

TEST_CASE("descending truncated chain: order deepens with level") {
  ZeroChain c;
  const int m = 6;
  for (int i = 1; i <= m; ++i) {
    SetDescriptor Z;
    Z.dim = 1;
    Z.comps.push_back({{Rational(0), Rational(0)}, Rational(0)});
    for (int n = i; n <= m; ++n)
      Z.comps.push_back({{Rational(1, n), Rational(0)}, Rational(0)});
    c.sets.push_back(Z);
  }
  auto F = flat_zero_chain(c, box1(-0.5, 1.5));
  REQUIRE(int(F.eps.size()) == m);
  for (std::size_t j = 1; j < F.eps.size(); ++j) CHECK(F.eps[j] < F.eps[j - 1]);

  // zeros exactly on the top set
  for (const auto& comp : c.sets[0].comps)
    CHECK(F.tau.eval_exact({comp.center[0], Rational(0)}) == 0);

  // positivity off the top set
  for (double x : {-0.4, -0.1, 0.3, 0.7, 1.2, 1.45})
    CHECK(F.tau.eval1(x) > 0.0);

  // deeper points of the chain carry higher measured order
  struct Probe { int n; int want; };
  for (Probe p : {Probe{3, 3}, Probe{5, 5}}) {
    double at = 1.0 / p.n;
    double h0 = to_double(F.eps[std::size_t(p.n - 1)]) / 100;
    auto est = vanishing_order1(F.tau, at, h0);
    CHECK((est.infinite || (est.stable && est.slope >= p.want - 0.1)));
  }
  auto e0 = vanishing_order1(F.tau, 0.0, to_double(F.eps.back()) / 100);
  CHECK(e0.infinite);
}

TEST_CASE("gauge ratio stays bounded on collars") {
  ZeroChain c;
  c.sets.push_back(points1({Rational(0)}));
  c.sets.push_back(points1({Rational(0)}));
  auto F = flat_zero_chain(c, box1(-1, 1));
  REQUIRE(F.gauges.size() >= 2);
  // tau / G_j bounded on a shrinking collar around Z_j (ratio extends by 0)
  for (std::size_t j = 0; j < 2; ++j) {
    double worst = 0.0;
    for (int t = 3; t <= 10; ++t) {
      double x = std::pow(2.0, -t);
      double g = F.gauges[j].eval1(x);
      if (g > 0.0) worst = std::max(worst, F.tau.eval1(x) / g);
    }
    CHECK(worst < 1e6);
    CHECK(std::isfinite(worst));
  }
}

TEST_CASE("invalid chains are rejected") {
  ZeroChain notdesc;
  notdesc.sets.push_back(points1({Rational(0)}));
  notdesc.sets.push_back(points1({Rational(1, 2)}));  // not a subset
  CHECK_THROWS_AS(flat_zero_chain(notdesc, box1(-1, 1)), validation_error);

  ZeroChain badeps;
  badeps.sets.push_back(points1({Rational(0)}));
  badeps.sets.push_back(points1({Rational(0)}));
  badeps.eps = {Rational(1, 10), Rational(1, 5)};  // not decreasing
  CHECK_THROWS_AS(flat_zero_chain(badeps, box1(-1, 1)), validation_error);
}

TEST_CASE("zero chain JSON round-trip") {
  ZeroChain c;
  c.sets.push_back(points1({Rational(0), Rational(1, 2)}));
  c.sets.push_back(points1({Rational(0)}));
  c.eps = {Rational(1, 8), Rational(1, 16)};
  ZeroChain d = ZeroChain::from_json(c.to_json());
  REQUIRE(d.sets.size() == 2);
  CHECK(d.eps == c.eps);
  CHECK(d.sets[0].comps.size() == 2);
  CHECK(d.sets[0].comps[1].center[0] == Rational(1, 2));
}
