#include "doctest.h"

#include <cmath>
#include <random>

#include "bf/jets.hpp"

using namespace bf;

namespace {

Jet poly_jet(const std::vector<double>& coeffs, double base, int order) {
  // raw derivatives of sum c_i x^i at `base`
  Jet j = Jet::zero(1, order, {rat_of_double(base), Rational(0)});
  for (int k = 0; k <= order; ++k) {
    double v = 0.0;
    for (int i = k; i < int(coeffs.size()); ++i) {
      double term = coeffs[std::size_t(i)];
      for (int q = 0; q < k; ++q) term *= i - q;
      v += term * std::pow(base, i - k);
    }
    j.at(k) = v;
  }
  return j;
}

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

}  // namespace

TEST_CASE("jet product follows Leibniz") {
  Jet unit = Jet::zero(1, 2, {Rational(0), Rational(0)});
  unit.at(0) = 1.0;
  Jet x = Jet::zero(1, 2, {Rational(0), Rational(0)});
  x.at(1) = 1.0;

  Jet ux = jet_mul(unit, x);
  CHECK(ux.at(0) == 0.0);
  CHECK(ux.at(1) == 1.0);
  CHECK(ux.at(2) == 0.0);

  Jet xx = jet_mul(x, x);
  CHECK(xx.at(0) == 0.0);
  CHECK(xx.at(1) == 0.0);
  CHECK(xx.at(2) == 2.0);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    Jet ja = poly_jet(a, 1.0, 4), jb = poly_jet(b, 1.0, 4);
    Jet prod = jet_mul(ja, jb);
    Jet ref = poly_jet(poly_mul(a, b), 1.0, 4);
    for (int k = 0; k <= 4; ++k)
      CHECK(prod.at(k) == doctest::Approx(ref.at(k)).epsilon(1e-11));
  }
}

TEST_CASE("jet product ring laws") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  auto rand_jet = [&] {
    Jet j = Jet::zero(1, 3, {Rational(0), Rational(0)});
    for (int k = 0; k <= 3; ++k) j.at(k) = u(rng);
    return j;
  };
  for (int trial = 0; trial < 10; ++trial) {
    Jet a = rand_jet(), b = rand_jet(), c = rand_jet();
    Jet ab = jet_mul(a, b), ba = jet_mul(b, a);
    // same terms, opposite summation order: equal up to roundoff only
    for (int k = 0; k <= 3; ++k)
      CHECK(ab.at(k) == doctest::Approx(ba.at(k)).epsilon(1e-14));
    Jet l = jet_mul(jet_mul(a, b), c), r = jet_mul(a, jet_mul(b, c));
    for (int k = 0; k <= 3; ++k)
      CHECK(l.at(k) == doctest::Approx(r.at(k)).epsilon(1e-12));
  }
}

TEST_CASE("base-point shift re-expands the polynomial") {
  Jet x2 = poly_jet({0, 0, 1}, 0.0, 2);
  Jet same = jet_shift(x2, {Rational(0), Rational(0)});
  for (int k = 0; k <= 2; ++k) CHECK(same.at(k) == x2.at(k));

  Jet at1 = jet_shift(x2, {Rational(1), Rational(0)});
  CHECK(at1.at(0) == doctest::Approx(1.0));
  CHECK(at1.at(1) == doctest::Approx(2.0));
  CHECK(at1.at(2) == doctest::Approx(2.0));

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> c(5);
    for (auto& v : c) v = u(rng);
    double nb = u(rng);
    Jet j = poly_jet(c, 0.5, 4);
    Jet s = jet_shift(j, {rat_of_double(nb), Rational(0)});
    Jet ref = poly_jet(c, nb, 4);
    for (int k = 0; k <= 4; ++k)
      CHECK(s.at(k) == doctest::Approx(ref.at(k)).epsilon(1e-10));
    // shifting back is the identity on polynomial data
    Jet back = jet_shift(s, {rat_of_double(0.5), Rational(0)});
    for (int k = 0; k <= 4; ++k)
      CHECK(back.at(k) == doctest::Approx(j.at(k)).epsilon(1e-9));
  }
}

TEST_CASE("compatibility residual") {
  // jets sampled from one polynomial: residual is exactly Taylor-exact
  std::vector<double> c = {1, -2, 0.5, 3};
  Jet a = poly_jet(c, 0.25, 3), b = poly_jet(c, 0.75, 3);
  auto res = compat_residual(a, b);
  for (double r : res) CHECK(std::abs(r) <= 1e-12);

  // sin at 0 vs 0.5, order 4: the k-th entry is the Taylor remainder of
  // sin^(k) truncated at degree 4-k, so |r_k| <= |x-y|^(5-k)/(5-k)!
  auto sin_jet = [](double base) {
    Jet j = Jet::zero(1, 4, {rat_of_double(base), Rational(0)});
    double s = std::sin(base), co = std::cos(base);
    double d[5] = {s, co, -s, -co, s};
    for (int k = 0; k <= 4; ++k) j.at(k) = d[k];
    return j;
  };
  auto res2 = compat_residual(sin_jet(0.0), sin_jet(0.5));
  for (int k = 0; k <= 4; ++k) {
    double bound = std::pow(0.5, 5 - k) / std::tgamma(6.0 - k);
    CHECK(std::abs(res2[std::size_t(k)]) <= bound * 1.05);
  }

  // constant mismatch is seen at order 0
  Jet p = Jet::zero(1, 1, {Rational(0), Rational(0)});
  p.at(0) = 1.0;
  Jet q = Jet::zero(1, 1, {rat_of_double(0.1), Rational(0)});
  auto res3 = compat_residual(p, q);
  CHECK(res3[0] == doctest::Approx(1.0));
  double worst = 0.0;
  CHECK_FALSE(compat_verdict(p, q, 1e-3, &worst));
}

TEST_CASE("whitney rate of self-sampled jets") {
  auto f = ex_exp(ex_coord(0, 1));

  // value-level residual over 4 dyadic separations: slope of the order-3
  // Taylor remainder is 4
  std::array<Rational, 2> zero{Rational(0), Rational(0)};
  Jet A = jet_of(f, zero, 3);
  std::vector<double> r0;
  for (int i = 0; i < 4; ++i) {
    double h = 0.5 / double(1 << i);
    Jet B = jet_of(f, {rat_of_double(h), Rational(0)}, 3);
    r0.push_back(std::abs(compat_residual(A, B)[0]));
  }
  double slope = std::log2(r0.front() / r0.back()) / 3.0;
  CHECK(slope >= 3.9);

  // the ladder's scale-normalized ratios shrink as the points merge
  CompatReport rep = jet_compat(f, {0.0, 0.0}, {1.0, 0.0}, 3, 0.5);
  CHECK(rep.pass);
  CHECK(rep.decay_exponent > 0.3);
  CHECK(rep.worst_ratio.back() < rep.worst_ratio.front());
}

TEST_CASE("jet JSON round-trip") {
  Jet j = poly_jet({1, 2, 3}, 0.5, 2);
  Jet k = Jet::from_json(j.to_json(), "test");
  CHECK(k.order == 2);
  CHECK(k.base[0] == j.base[0]);
  for (int i = 0; i <= 2; ++i) CHECK(k.at(i) == j.at(i));
  CHECK_THROWS_AS(Jet::from_json(json{{"dim", 1}}, "test"), validation_error);
}
