#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bf/common.hpp"

namespace bf {

// Closed axis box, rational corners. dim is 1 or 2 everywhere in this library.
struct Box {
  int dim = 1;
  std::array<Rational, 2> lo{Rational(0), Rational(0)};
  std::array<Rational, 2> hi{Rational(0), Rational(0)};

  double width(int axis = 0) const { return to_double(hi[axis] - lo[axis]); }
  Rational width_rat(int axis = 0) const { return hi[axis] - lo[axis]; }
  bool contains(const std::array<double, 2>& x) const {
    for (int a = 0; a < dim; ++a)
      if (x[a] < to_double(lo[a]) || x[a] > to_double(hi[a])) return false;
    return true;
  }
  json to_json() const;
  static Box from_json(const json& j, const std::string& where);
};

// Finite union of closed balls (1D: intervals via center/radius) and points.
struct SetComponent {
  std::array<Rational, 2> center{Rational(0), Rational(0)};
  Rational radius{0};  // 0 = point
};

struct SetDescriptor {
  int dim = 1;
  std::vector<SetComponent> comps;

  bool empty() const { return comps.empty(); }

  // exact membership (rational point)
  bool contains(const std::array<Rational, 2>& p) const;
  bool contains1(const Rational& x) const { return contains({x, Rational(0)}); }

  // Euclidean distance, exact up to the final square root in 2D.
  double dist(const std::array<double, 2>& x) const;
  double dist1(double x) const { return dist({x, 0.0}); }

  // signed distance per component (negative inside a ball), used by gauges
  double signed_dist_comp(std::size_t i, const std::array<double, 2>& x) const;

  // smallest geometric feature: positive radii, pairwise boundary gaps
  double min_feature(const Box& window) const;

  // 1D only: the closed eps-neighbourhood as a merged, sorted interval list
  std::vector<std::pair<Rational, Rational>> neighborhood1(const Rational& eps) const;

  json to_json() const;
  static SetDescriptor from_json(const json& j, const std::string& where);
};

struct Region {
  Box box;
  std::optional<SetDescriptor> excluded;  // open region = box minus this

  int dim() const { return box.dim; }
  bool contains(const std::array<double, 2>& x) const { return box.contains(x); }
  json to_json() const;
  static Region from_json(const json& j, const std::string& where);
};

// merge overlapping/touching closed rational intervals
std::vector<std::pair<Rational, Rational>> merge_intervals(
    std::vector<std::pair<Rational, Rational>> iv);

}  // namespace bf
