#include "bf/flatzero.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "bf/cutoff.hpp"

namespace bf {

namespace {

Rational rat_min(const Rational& a, const Rational& b) { return a < b ? a : b; }
Rational rat_abs(const Rational& a) { return a < 0 ? Rational(-a) : a; }

// exact containment of one component ball in another (1D intervals use the
// same formula; 2D compares squared Euclidean distances)
bool comp_inside(const SetComponent& small, const SetComponent& big, int dim) {
  if (big.radius < small.radius) return false;
  Rational slack = big.radius - small.radius;
  if (dim == 1)
    return rat_abs(small.center[0] - big.center[0]) <= slack;
  Rational dx = small.center[0] - big.center[0];
  Rational dy = small.center[1] - big.center[1];
  return dx * dx + dy * dy <= slack * slack;
}

// union-of-components membership cutoff: exactly 1 within 2eps/3 of the set,
// exactly 0 past 5eps/6, the cascade blending over the middle third of the
// [eps/2, eps] collar
SmoothExpr level_cutoff(const SetDescriptor& Z, const Rational& eps, int dim) {
  std::vector<Rational> widths(4, eps / 24);  // sums to eps/6
  if (dim == 1) {
    auto model = std::make_shared<CutoffModel>(
        Z.neighborhood1(eps * Rational(2, 3)), widths);
    return ex_cutoff1d(model, 0, 1);
  }
  SmoothExpr one = ex_const(Rational(1), 2);
  SmoothExpr prod = one;
  for (const auto& comp : Z.comps) {
    Rational pad = comp.radius + eps * Rational(2, 3);
    auto mx = std::make_shared<CutoffModel>(
        std::vector<std::pair<Rational, Rational>>{
            {comp.center[0] - pad, comp.center[0] + pad}},
        widths);
    auto my = std::make_shared<CutoffModel>(
        std::vector<std::pair<Rational, Rational>>{
            {comp.center[1] - pad, comp.center[1] + pad}},
        widths);
    SmoothExpr chi = ex_mul(ex_cutoff1d(mx, 0, 2), ex_cutoff1d(my, 1, 2));
    prod = ex_mul(prod, ex_sub(one, chi));
  }
  return ex_sub(one, prod);
}

}  // namespace

json ZeroChain::to_json() const {
  json js = json::array();
  for (const auto& s : sets) js.push_back(s.to_json());
  json je = json::array();
  for (const auto& e : eps) je.push_back(rat_to_json(e));
  return json{{"sets", js}, {"eps", je}};
}

ZeroChain ZeroChain::from_json(const json& j) {
  ZeroChain c;
  if (!j.is_object() || !j.contains("sets") || !j["sets"].is_array())
    throw validation_error("zero chain: expected an object with a sets array");
  for (const auto& s : j["sets"]) c.sets.push_back(SetDescriptor::from_json(s, "chain set"));
  if (j.contains("eps")) {
    if (!j["eps"].is_array())
      throw validation_error("zero chain: eps must be an array");
    for (const auto& e : j["eps"]) c.eps.push_back(rat_from_json(e, "eps"));
  }
  return c;
}

FlatChain flat_zero_chain(const ZeroChain& chain, const Region& region) {
  const int dim = region.dim();
  const int m = int(chain.sets.size());
  if (m == 0) {
    FlatChain out;
    out.tau = ex_const(Rational(1), dim);
    out.report = json{{"op", "flat_chain"}, {"levels", 0}};
    return out;
  }
  if (m > 12)
    throw validation_error("chains are truncated at 12 levels; pass at most 12");
  for (const auto& Z : chain.sets) {
    if (Z.dim != dim)
      throw validation_error("chain set dimension does not match the region");
    if (Z.empty())
      throw validation_error("every chain level must be a nonempty set");
  }
  // descending inclusion, exactly
  for (int j = 0; j + 1 < m; ++j) {
    for (const auto& small : chain.sets[std::size_t(j + 1)].comps) {
      bool covered = false;
      for (const auto& big : chain.sets[std::size_t(j)].comps)
        if (comp_inside(small, big, dim)) covered = true;
      if (!covered)
        throw validation_error("chain is not descending: level " +
                               std::to_string(j + 2) +
                               " has a component outside level " +
                               std::to_string(j + 1));
    }
  }

  std::vector<Rational> eps = chain.eps;
  if (eps.empty()) {
    // halving default seeded by the geometry of the first level
    const auto& Z1 = chain.sets[0];
    Rational e1(1);
    const Box& box = region.box;
    for (const auto& comp : Z1.comps) {
      for (int ax = 0; ax < dim; ++ax) {
        e1 = rat_min(e1, (comp.center[ax] - comp.radius) - box.lo[ax]);
        e1 = rat_min(e1, box.hi[ax] - (comp.center[ax] + comp.radius));
      }
    }
    for (std::size_t a = 0; a < Z1.comps.size(); ++a)
      for (std::size_t b = a + 1; b < Z1.comps.size(); ++b) {
        Rational gap = rat_abs(Z1.comps[a].center[0] - Z1.comps[b].center[0]);
        if (dim == 2) {
          Rational gy = rat_abs(Z1.comps[a].center[1] - Z1.comps[b].center[1]);
          if (gy > gap) gap = gy;
        }
        gap = gap - Z1.comps[a].radius - Z1.comps[b].radius;
        e1 = rat_min(e1, gap / 2);
      }
    if (!(e1 > 0))
      throw validation_error(
          "cannot derive scales: the first level touches itself or the "
          "boundary; pass eps explicitly");
    for (int j = 0; j < m; ++j) eps.push_back(e1 / Rational(1 << j));
  }
  if (int(eps.size()) != m)
    throw validation_error("chain needs one scale per level");
  for (int j = 0; j < m; ++j) {
    if (!(eps[std::size_t(j)] > 0))
      throw validation_error("chain scales must be positive");
    if (j > 0 && !(eps[std::size_t(j)] < eps[std::size_t(j - 1)]))
      throw validation_error("chain scales must decrease strictly");
  }

  // nonempty annuli: somewhere inside the eps_j neighbourhood of Z_j but
  // outside the eps_{j+1} one of Z_{j+1}; probe radially around each
  // component, where the shells live
  const Box& box = region.box;
  for (int j = 0; j + 1 < m; ++j) {
    double ej = to_double(eps[std::size_t(j)]);
    double en = to_double(eps[std::size_t(j + 1)]);
    bool found = false;
    auto test = [&](const Pt& x) {
      if (!region.box.contains(x)) return;
      if (chain.sets[std::size_t(j)].dist(x) < ej &&
          chain.sets[std::size_t(j + 1)].dist(x) > en)
        found = true;
    };
    for (const auto& comp : chain.sets[std::size_t(j)].comps) {
      for (int t = 1; t < 24 && !found; ++t) {
        double off = ej * t / 24.0;
        double cx = to_double(comp.center[0]);
        double r = to_double(comp.radius);
        if (dim == 1) {
          test({cx + r + off, 0.0});
          test({cx - r - off, 0.0});
        } else {
          double cy = to_double(comp.center[1]);
          test({cx + r + off, cy});
          test({cx - r - off, cy});
          test({cx, cy + r + off});
          test({cx, cy - r - off});
        }
      }
      if (found) break;
    }
    if (!found)
      throw validation_error("scale schedule leaves an empty annulus at level " +
                             std::to_string(j + 1));
  }

  // tau = G_1 * prod_j (1 - chi_j (1 - G_j)): the j-th factor hands over from
  // 1 (away from Z_j) to the flat gauge G_j (close to it)
  FlatChain out;
  out.eps = eps;
  json sigmas = json::array();
  for (int j = 0; j < m; ++j) {
    Rational sigma = eps[std::size_t(j)] / 100;
    sigmas.push_back(to_double(sigma));
    out.gauges.push_back(
        ex_dist_gauge(chain.sets[std::size_t(j)], region, sigma));
  }
  SmoothExpr tau = out.gauges[0];
  SmoothExpr one = ex_const(Rational(1), dim);
  for (int j = 1; j < m; ++j) {
    SmoothExpr chi = level_cutoff(chain.sets[std::size_t(j)],
                                  eps[std::size_t(j)], dim);
    SmoothExpr factor =
        ex_sub(one, ex_mul(chi, ex_sub(one, out.gauges[std::size_t(j)])));
    tau = ex_mul(tau, factor);
  }
  out.tau = tau;

  // quick positivity sweep off the first level
  double min_off = std::numeric_limits<double>::infinity();
  std::size_t off = 0, bad = 0;
  const int n2 = dim == 1 ? 2048 : 48;
  auto sweep = [&](const Pt& x) {
    if (chain.sets[0].dist(x) <= 0) return;
    ++off;
    double v = tau.eval(x);
    if (!(v > 0)) ++bad;
    min_off = std::min(min_off, v);
  };
  if (dim == 1) {
    for (int i = 0; i <= n2; ++i)
      sweep({to_double(box.lo[0]) + box.width(0) * i / n2, 0.0});
  } else {
    for (int i = 0; i <= n2; ++i)
      for (int q = 0; q <= n2; ++q)
        sweep({to_double(box.lo[0]) + box.width(0) * i / n2,
               to_double(box.lo[1]) + box.width(1) * q / n2});
  }

  json je = json::array();
  for (const auto& e : eps) je.push_back(to_double(e));
  out.report = json{{"op", "flat_chain"},
                    {"levels", m},
                    {"eps", je},
                    {"sigma", sigmas},
                    {"sweep_points_off", off},
                    {"sweep_nonpositive", bad},
                    {"sweep_min_off", min_off}};
  return out;
}

}  // namespace bf
