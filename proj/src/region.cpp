#include "bf/region.hpp"

#include <algorithm>

namespace bf {

json Box::to_json() const {
  json j;
  j["dim"] = dim;
  if (dim == 1) {
    j["box"] = json::array({rat_to_json(lo[0]), rat_to_json(hi[0])});
  } else {
    j["box"] = json::array({json::array({rat_to_json(lo[0]), rat_to_json(hi[0])}),
                            json::array({rat_to_json(lo[1]), rat_to_json(hi[1])})});
  }
  return j;
}

Box Box::from_json(const json& j, const std::string& where) {
  Box b;
  if (!j.contains("dim") || !j.contains("box"))
    throw validation_error(where + ": region needs dim and box");
  b.dim = j.at("dim").get<int>();
  if (b.dim != 1 && b.dim != 2) throw validation_error(where + ": dim must be 1 or 2");
  const json& bx = j.at("box");
  if (b.dim == 1) {
    b.lo[0] = rat_from_json(bx.at(0), where + ".box[0]");
    b.hi[0] = rat_from_json(bx.at(1), where + ".box[1]");
  } else {
    for (int a = 0; a < 2; ++a) {
      b.lo[a] = rat_from_json(bx.at(a).at(0), where + ".box");
      b.hi[a] = rat_from_json(bx.at(a).at(1), where + ".box");
    }
  }
  for (int a = 0; a < b.dim; ++a)
    if (b.lo[a] >= b.hi[a]) throw validation_error(where + ": empty box");
  return b;
}

bool SetDescriptor::contains(const std::array<Rational, 2>& p) const {
  for (const auto& c : comps) {
    if (dim == 1) {
      Rational d = p[0] - c.center[0];
      if (d < 0) d = -d;
      if (d <= c.radius) return true;
    } else {
      Rational dx = p[0] - c.center[0], dy = p[1] - c.center[1];
      if (dx * dx + dy * dy <= c.radius * c.radius) return true;
    }
  }
  return false;
}

double SetDescriptor::signed_dist_comp(std::size_t i, const std::array<double, 2>& x) const {
  const auto& c = comps[i];
  double r = to_double(c.radius);
  if (dim == 1) {
    return std::abs(x[0] - to_double(c.center[0])) - r;
  }
  double dx = x[0] - to_double(c.center[0]);
  double dy = x[1] - to_double(c.center[1]);
  return std::sqrt(dx * dx + dy * dy) - r;
}

double SetDescriptor::dist(const std::array<double, 2>& x) const {
  if (comps.empty()) return std::numeric_limits<double>::infinity();
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < comps.size(); ++i)
    d = std::min(d, std::max(0.0, signed_dist_comp(i, x)));
  return d;
}

double SetDescriptor::min_feature(const Box& window) const {
  double f = window.width(0);
  for (int a = 1; a < window.dim; ++a) f = std::min(f, window.width(a));
  for (const auto& c : comps)
    if (c.radius > 0) f = std::min(f, to_double(c.radius));
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t j = i + 1; j < comps.size(); ++j) {
      double dx = to_double(comps[i].center[0] - comps[j].center[0]);
      double dy = dim == 2 ? to_double(comps[i].center[1] - comps[j].center[1]) : 0.0;
      double gap = std::sqrt(dx * dx + dy * dy) - to_double(comps[i].radius) -
                   to_double(comps[j].radius);
      if (gap > 0) f = std::min(f, gap);
    }
  return f;
}

std::vector<std::pair<Rational, Rational>> merge_intervals(
    std::vector<std::pair<Rational, Rational>> iv) {
  std::sort(iv.begin(), iv.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Rational, Rational>> out;
  for (auto& p : iv) {
    if (!out.empty() && p.first <= out.back().second) {
      if (p.second > out.back().second) out.back().second = p.second;
    } else {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<std::pair<Rational, Rational>> SetDescriptor::neighborhood1(
    const Rational& eps) const {
  if (dim != 1) throw error("neighborhood1: 1D only");
  std::vector<std::pair<Rational, Rational>> iv;
  iv.reserve(comps.size());
  for (const auto& c : comps)
    iv.emplace_back(c.center[0] - c.radius - eps, c.center[0] + c.radius + eps);
  return merge_intervals(std::move(iv));
}

json SetDescriptor::to_json() const {
  json balls = json::array(), pts = json::array();
  for (const auto& c : comps) {
    json center = json::array();
    for (int a = 0; a < dim; ++a) center.push_back(rat_to_json(c.center[a]));
    if (c.radius == 0)
      pts.push_back(center);
    else
      balls.push_back(json{{"center", center}, {"radius", rat_to_json(c.radius)}});
  }
  return json{{"dim", dim}, {"balls", balls}, {"points", pts}};
}

SetDescriptor SetDescriptor::from_json(const json& j, const std::string& where) {
  SetDescriptor s;
  s.dim = j.value("dim", 1);
  if (s.dim != 1 && s.dim != 2) throw validation_error(where + ": dim must be 1 or 2");
  auto read_center = [&](const json& c, SetComponent& comp) {
    if (!c.is_array() || (int)c.size() != s.dim)
      throw validation_error(where + ": center arity != dim");
    for (int a = 0; a < s.dim; ++a) comp.center[a] = rat_from_json(c.at(a), where);
  };
  if (j.contains("balls"))
    for (const auto& b : j.at("balls")) {
      SetComponent c;
      read_center(b.at("center"), c);
      c.radius = rat_from_json(b.at("radius"), where + ".radius");
      if (c.radius < 0) throw validation_error(where + ": negative radius");
      s.comps.push_back(c);
    }
  if (j.contains("points"))
    for (const auto& p : j.at("points")) {
      SetComponent c;
      read_center(p, c);
      s.comps.push_back(c);
    }
  return s;
}

json Region::to_json() const {
  json j = box.to_json();
  if (excluded) j["excluded"] = excluded->to_json();
  return j;
}

Region Region::from_json(const json& j, const std::string& where) {
  Region r;
  r.box = Box::from_json(j, where);
  if (j.contains("excluded"))
    r.excluded = SetDescriptor::from_json(j.at("excluded"), where + ".excluded");
  return r;
}

}  // namespace bf
