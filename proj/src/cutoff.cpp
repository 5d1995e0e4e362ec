#include "bf/cutoff.hpp"

#include <algorithm>
#include <cmath>

#include "bf/quadrature.hpp"
#include "bf/taylor.hpp"

namespace bf {

namespace {

double beta_integral() {
  static const double v = adaptive_simpson([](double t) { return beta_val(t); },
                                           -1.0, 1.0, 1e-14, 48);
  return v;
}

constexpr int kPanelDegree = 16;
constexpr int kNodesPerWidth = 8;  // panels per smallest width

}  // namespace

double psi_c() { return 2.0 / beta_integral(); }

double psi_val(double u) { return psi_c() * beta_val(2.0 * u); }

double psi_deriv(int r, double u) {
  if (std::abs(u) >= 0.5) return 0.0;
  if (r == 0) return psi_val(u);
  std::vector<double> g = gen_beta(2.0 * u, r);
  return psi_c() * std::pow(2.0, r) * g[r] * factorial(r);
}

double psi_l1_deriv() { return 2.0 * psi_c() * std::exp(-1.0); }

CutoffModel::CutoffModel(std::vector<std::pair<Rational, Rational>> inner,
                         std::vector<Rational> widths)
    : inner_(merge_intervals(std::move(inner))), widths_(std::move(widths)) {
  if (widths_.empty()) throw validation_error("cutoff needs at least one width");
  Rational sum(0);
  for (std::size_t i = 0; i < widths_.size(); ++i) {
    if (widths_[i] <= 0) throw validation_error("cutoff widths must be positive");
    if (i && widths_[i] > widths_[i - 1])
      throw validation_error("cutoff widths must be non-increasing");
    sum += widths_[i];
    wd_.push_back(to_double(widths_[i]));
  }
  Rational half = sum / 2;
  delta_ = to_double(half);
  std::vector<std::pair<Rational, Rational>> fat;
  for (const auto& iv : inner_) fat.emplace_back(iv.first - half, iv.second + half);
  fat_ = merge_intervals(std::move(fat));
}

void CutoffModel::ensure_order(int r) const {
  std::lock_guard<std::mutex> lock(mu_);
  if ((int)kder_.size() > r && !kder_[r].empty()) return;
  if ((int)kder_.size() <= r) kder_.resize(r + 1);
  const int m = (int)wd_.size();
  double wmin = wd_.back();
  for (int order = 0; order <= r; ++order) {
    if (!kder_[order].empty()) continue;
    // distribute `order` derivatives: one per factor, remainder on factor 0
    std::vector<int> ro(m, 0);
    {
      int left = order;
      for (int i = 0; i < m && left > 0; ++i) {
        ro[i] = 1;
        --left;
      }
      ro[0] += left;
    }
    // level 1: analytic psi^{(ro0)}_{d1}
    double d0 = wd_[0];
    int r0 = ro[0];
    double span = 0.5 * d0;
    int pan = std::max(8, kNodesPerWidth);
    PiecewisePoly cur = PiecewisePoly::fit(
        [&](double t) { return psi_deriv(r0, t / d0) / std::pow(d0, r0 + 1); },
        -span, span, pan, kPanelDegree, 0.0, 0.0);
    double support = span;
    double pw = d0 / kNodesPerWidth;
    for (int lev = 1; lev < m; ++lev) {
      double d = wd_[lev];
      int rl = ro[lev];
      support += 0.5 * d;
      pw = std::min(pw, d / kNodesPerWidth);
      int npan = std::max(8, (int)std::ceil(2.0 * support / pw));
      const PiecewisePoly prev = cur;
      // number of smooth sub-spans of the integral range [-d/2, d/2]
      int nsub = std::max(4, std::min(64, (int)std::ceil(d / pw)));
      cur = PiecewisePoly::fit(
          [&](double t) {
            double s = 0.0;
            double a = -0.5 * d;
            double step = d / nsub;
            for (int q = 0; q < nsub; ++q) {
              double u0 = a + q * step, u1 = u0 + step;
              s += gauss12(
                  [&](double u) {
                    return prev.eval(t - u) * psi_deriv(rl, u / d) / std::pow(d, rl + 1);
                  },
                  u0, u1);
            }
            return s;
          },
          -support, support, npan, kPanelDegree, 0.0, 0.0);
    }
    kder_[order] = cur;
    if (order == 0) {
      PiecewisePoly cdf = cur.antiderivative(0.0);
      double mass = cdf.right_value();
      if (mass <= 0.0) throw construction_error("cutoff kernel mass not positive");
      cdf.rescale(1.0 / mass);
      cdf.set_clamps(0.0, 1.0);
      cdf_ = cdf;
    }
  }
}

double CutoffModel::value(double t) const {
  ensure_order(0);
  double s = 0.0;
  for (const auto& iv : fat_)
    s += cdf_.eval(t - to_double(iv.first)) - cdf_.eval(t - to_double(iv.second));
  // the true function lies in [0,1]; project out model error at the clamps
  return std::min(1.0, std::max(0.0, s));
}

double CutoffModel::deriv(int k, double t) const {
  if (k == 0) return value(t);
  ensure_order(k - 1);
  double s = 0.0;
  for (const auto& iv : fat_)
    s += kder_[k - 1].eval(t - to_double(iv.first)) -
         kder_[k - 1].eval(t - to_double(iv.second));
  return s;
}

double CutoffModel::certified_bound(int k) const {
  if (k == 0) return 1.0;
  double b = 1.0, c = psi_l1_deriv();
  for (int j = 0; j < k; ++j) b *= c / wd_[std::min<std::size_t>(j, wd_.size() - 1)];
  return b;
}

std::vector<std::pair<Rational, Rational>> CutoffModel::support_intervals() const {
  Rational half(0);
  for (const auto& w : widths_) half += w;
  half /= 2;
  std::vector<std::pair<Rational, Rational>> out;
  for (const auto& iv : fat_) out.emplace_back(iv.first - half, iv.second + half);
  return merge_intervals(std::move(out));
}

std::vector<std::pair<Rational, Rational>> CutoffModel::plateau_intervals() const {
  Rational half(0);
  for (const auto& w : widths_) half += w;
  half /= 2;
  std::vector<std::pair<Rational, Rational>> out;
  for (const auto& iv : fat_) {
    Rational a = iv.first + half, b = iv.second - half;
    if (a <= b) out.emplace_back(a, b);
  }
  return out;
}

SetDescriptor set_from_intervals(const std::vector<std::pair<Rational, Rational>>& iv) {
  SetDescriptor s;
  s.dim = 1;
  for (const auto& p : iv) {
    SetComponent c;
    c.center[0] = (p.first + p.second) / 2;
    c.radius = (p.second - p.first) / 2;
    s.comps.push_back(c);
  }
  return s;
}

CutoffCertificate certify_cutoff(const CutoffModel& model, int max_order,
                                 int samples_per_band) {
  if (max_order < 0 || max_order > kMaxOrder)
    throw validation_error("cutoff certificate order out of range");
  if (samples_per_band < 16)
    throw validation_error("cutoff certificate needs at least 16 samples per band");
  CutoffCertificate cert;
  cert.inner = set_from_intervals(model.inner());
  cert.outer = set_from_intervals(model.support_intervals());
  cert.widths = model.widths();
  cert.m = max_order;
  cert.measured_sup.assign(std::size_t(max_order) + 1, 0.0);
  cert.bound.assign(std::size_t(max_order) + 1, 0.0);
  double delta = model.delta();
  const int n = samples_per_band;
  for (const auto& iv : model.fattened()) {
    for (double edge : {to_double(iv.first), to_double(iv.second)}) {
      for (int i = 0; i <= n; ++i) {
        double t = edge - delta + 2.0 * delta * i / n;
        for (int k = 0; k <= max_order; ++k)
          cert.measured_sup[k] =
              std::max(cert.measured_sup[k], std::abs(model.deriv(k, t)));
      }
    }
  }
  cert.measured_sup[0] = 1.0;  // plateau value dominates every transition sample
  double best = 0.0;
  double logd = 0.0;
  const auto& w = model.widths();
  for (int k = 1; k <= max_order; ++k) {
    logd += std::log(to_double(w[std::min<std::size_t>(k - 1, w.size() - 1)]));
    if (cert.measured_sup[k] > 0)
      best = std::max(best, std::exp((std::log(cert.measured_sup[k]) + logd) / k));
    cert.bound[k] = model.certified_bound(k);
  }
  cert.bound[0] = 1.0;
  cert.fitted_C = best;
  return cert;
}

json CutoffCertificate::to_json() const {
  json w = json::array();
  for (const auto& d : widths) w.push_back(rat_to_json(d));
  return json{{"inner", inner.to_json()},   {"outer", outer.to_json()},
              {"widths", w},                {"m", m},
              {"fitted_C", fitted_C},       {"measured_sup", measured_sup},
              {"bound", bound}};
}

}  // namespace bf
