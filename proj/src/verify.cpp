#include "bf/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace bf {

namespace {

// k-th central difference along a fixed axis pair, tensor stencil:
// offsets (k/2 - i) for i = 0..k, signs (-1)^i C(k,i), divided by h^k.
double central_diff(const SmoothExpr& f, const Pt& x, int di, int dj, double h,
                    double* fmax) {
  double acc = 0.0;
  for (int a = 0; a <= di; ++a) {
    double wa = ((a & 1) ? -1.0 : 1.0) * binom(di, a);
    double ox = (0.5 * di - a) * h;
    for (int b = 0; b <= dj; ++b) {
      double wb = ((b & 1) ? -1.0 : 1.0) * binom(dj, b);
      double oy = (0.5 * dj - b) * h;
      double v = f.eval({x[0] + ox, x[1] + oy});
      if (fmax) *fmax = std::max(*fmax, std::abs(v));
      acc += wa * wb * v;
    }
  }
  return acc / std::pow(h, di + dj);
}

// Richardson extrapolation of the O(h^2) stencil over 4 halvings.  The error
// estimate adds the roundoff floor: the stencil cancels ~2^k samples of size
// fmax, and whatever noise survives is divided by h^k, so past the point
// where h^k |f^(k)| sinks under that noise the reported bar grows honestly
// instead of pretending precision.
std::pair<double, double> richardson(const SmoothExpr& f, const Pt& x, int di,
                                     int dj, double h0) {
  constexpr int L = 4;
  double T[L][L];
  double fmax = 0.0;
  for (int m = 0; m < L; ++m) {
    T[m][0] = central_diff(f, x, di, dj, h0 / double(1 << m), &fmax);
    for (int l = 1; l <= m; ++l) {
      double p = std::pow(4.0, l);
      T[m][l] = (p * T[m][l - 1] - T[m - 1][l - 1]) / (p - 1.0);
    }
  }
  double best = T[L - 1][L - 1];
  int k = di + dj;
  double hmin = h0 / double(1 << (L - 1));
  double round_err = 4.0 * std::pow(2.0, k) *
                     std::max(fmax, std::abs(best)) * 0x1p-48 /
                     std::pow(hmin, k);
  double err = std::abs(T[L - 1][L - 1] - T[L - 1][L - 2]) +
               std::abs(T[L - 1][L - 1] - T[L - 2][L - 2]) + round_err;
  return {best, err};
}

}  // namespace

FdJet fd_jet(const SmoothExpr& f, const Pt& x, int K, double feature) {
  if (K < 0 || K > 10)
    throw validation_error("finite-difference jets support orders 0 through 10");
  if (!(feature > 0))
    throw validation_error("finite-difference step scale must be positive");
  FdJet out;
  out.dim = f.dim();
  out.order = K;
  out.value.assign(TaylorTable::size_for(out.dim, K), 0.0);
  out.err.assign(out.value.size(), 0.0);
  double h0 = 1e-2 * feature;
  if (out.dim == 1) {
    for (int k = 0; k <= K; ++k) {
      auto [v, e] = richardson(f, x, k, 0, h0);
      out.value[k] = v;
      out.err[k] = e;
    }
  } else {
    for (int k = 0; k <= K; ++k)
      for (int j = 0; j <= k; ++j) {
        auto [v, e] = richardson(f, x, k - j, j, h0);
        out.value[TaylorTable::idx2(k - j, j)] = v;
        out.err[TaylorTable::idx2(k - j, j)] = e;
      }
  }
  return out;
}

OrderEstimate vanishing_order(const SmoothExpr& f, const Pt& x, const Pt& dir,
                              double h0, int max_steps) {
  double nrm = std::hypot(dir[0], dir[1]);
  if (!(nrm > 0)) throw validation_error("vanishing order needs a nonzero direction");
  if (!(h0 > 0)) throw validation_error("vanishing order needs a positive step");
  Pt u{dir[0] / nrm, dir[1] / nrm};
  OrderEstimate est;
  double h = h0;
  int consecutive_tiny = 0;
  for (int i = 0; i < max_steps && h > 1e-250; ++i, h *= 0.5) {
    double v = std::abs(f.eval({x[0] + h * u[0], x[1] + h * u[1]}));
    est.h.push_back(h);
    est.val.push_back(v);
    if (v < 1e-300) {
      if (++consecutive_tiny >= 3) {
        est.infinite = true;
        est.stable = true;
        return est;
      }
      continue;
    }
    consecutive_tiny = 0;
    std::size_t n = est.val.size();
    if (n >= 4 && est.val[n - 2] > 0 && est.val[n - 3] > 0 && est.val[n - 4] > 0) {
      double s1 = std::log2(est.val[n - 4] / est.val[n - 3]);
      double s2 = std::log2(est.val[n - 3] / est.val[n - 2]);
      double s3 = std::log2(est.val[n - 2] / est.val[n - 1]);
      if (std::abs(s3 - s2) < 0.05 && std::abs(s2 - s1) < 0.1 &&
          std::abs(s3 - std::round(s3)) < 0.2) {
        est.slope = s3;
        est.order = int(std::lround(s3));
        est.stable = true;
        return est;
      }
      est.slope = s3;
      est.order = int(std::lround(s3));
    }
  }
  // ladder exhausted without a stable integer slope: if the values kept
  // shrinking faster than any sampled power, report them as flat
  if (!est.val.empty() && est.val.back() < 1e-280) est.infinite = true;
  return est;
}

OrderEstimate vanishing_order1(const SmoothExpr& f, double x, double h0,
                               int max_steps) {
  OrderEstimate a = vanishing_order(f, {x, 0.0}, {1.0, 0.0}, h0, max_steps);
  OrderEstimate b = vanishing_order(f, {x, 0.0}, {-1.0, 0.0}, h0, max_steps);
  if (a.infinite) return b;
  if (b.infinite) return a;
  return a.order <= b.order ? a : b;
}

namespace {
std::atomic<int> g_sweep_threads{1};
}

void set_sweep_threads(int n) { g_sweep_threads = std::max(1, std::min(n, 64)); }
int sweep_threads() { return g_sweep_threads; }

std::vector<double> sup_norm(const SmoothExpr& f, const Region& region, int K) {
  if (K < 0 || K > kMaxOrder) throw validation_error("sup order out of range");
  if (f.dim() != region.dim())
    throw validation_error("sup measurement: region dimension mismatch");
  const Box& box = region.box;
  std::vector<double> best(std::size_t(K) + 1, 0.0);
  int n = f.dim() == 1 ? 128 : 32;
  int cap = f.dim() == 1 ? 65536 : 1024;
  std::vector<double> prev;
  for (; n <= cap; n *= 2) {
    std::vector<double> cur(std::size_t(K) + 1, 0.0);
    // one row of sample indices per call; threads split the rows and the
    // partial maxima merge in any order
    auto sweep_rows = [&](int i_lo, int i_hi, std::vector<double>& out) {
      if (f.dim() == 1) {
        for (int i = i_lo; i < i_hi; ++i) {
          double x = to_double(box.lo[0]) + box.width(0) * i / n;
          auto d = f.derivs({x, 0.0}, K);
          for (int k = 0; k <= K; ++k) out[k] = std::max(out[k], std::abs(d[k]));
        }
      } else {
        for (int i = i_lo; i < i_hi; ++i)
          for (int j = 0; j <= n; ++j) {
            Pt p{to_double(box.lo[0]) + box.width(0) * i / n,
                 to_double(box.lo[1]) + box.width(1) * j / n};
            auto d = f.derivs(p, K);
            for (int k = 0; k <= K; ++k)
              for (int q = 0; q <= k; ++q)
                out[k] = std::max(out[k], std::abs(d[TaylorTable::idx2(k - q, q)]));
          }
      }
    };
    int T = std::min(sweep_threads(), n + 1);
    if (T <= 1) {
      sweep_rows(0, n + 1, cur);
    } else {
      std::vector<std::vector<double>> part(T, cur);
      std::vector<std::thread> pool;
      for (int t = 0; t < T; ++t) {
        int i_lo = (n + 1) * t / T, i_hi = (n + 1) * (t + 1) / T;
        pool.emplace_back([&, t, i_lo, i_hi] { sweep_rows(i_lo, i_hi, part[t]); });
      }
      for (auto& th : pool) th.join();
      for (const auto& p : part)
        for (int k = 0; k <= K; ++k) cur[k] = std::max(cur[k], p[k]);
    }
    bool stable = !prev.empty();
    if (!prev.empty())
      for (int k = 0; k <= K; ++k) {
        double scale = std::max(cur[k], 1e-300);
        if (std::abs(cur[k] - prev[k]) > 0.01 * scale) stable = false;
      }
    best = cur;
    if (stable) break;
    prev = cur;
  }
  return best;
}

json OrderEstimate::to_json() const {
  json j{{"infinite", infinite}, {"stable", stable}};
  if (!infinite) {
    j["order"] = order;
    j["slope"] = slope;
  }
  j["ladder_h"] = h;
  j["ladder_value"] = val;
  return j;
}

json CheckResult::to_json() const {
  json j{{"name", name}, {"measured", measured}, {"bound", bound}, {"pass", pass}};
  if (!note.empty()) j["note"] = note;
  return j;
}

json VerificationReport::to_json() const {
  json arr = json::array();
  for (const auto& c : checks) arr.push_back(c.to_json());
  return json{{"ok", ok()}, {"checks", arr}};
}

}  // namespace bf
