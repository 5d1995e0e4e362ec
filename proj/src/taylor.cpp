#include "bf/taylor.hpp"

#include <algorithm>

namespace bf {

static void check_same(const TaylorTable& a, const TaylorTable& b) {
  if (a.dim != b.dim || a.order != b.order) throw error("taylor table shape mismatch");
}

TaylorTable tt_add(const TaylorTable& a, const TaylorTable& b) {
  check_same(a, b);
  TaylorTable r = a;
  for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}

TaylorTable tt_sub(const TaylorTable& a, const TaylorTable& b) {
  check_same(a, b);
  TaylorTable r = a;
  for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
  return r;
}

TaylorTable tt_scale(const TaylorTable& a, double s) {
  TaylorTable r = a;
  for (auto& v : r.c) v *= s;
  return r;
}

TaylorTable tt_mul(const TaylorTable& a, const TaylorTable& b) {
  check_same(a, b);
  TaylorTable r = TaylorTable::zero(a.dim, a.order);
  if (a.dim == 1) {
    for (int i = 0; i <= a.order; ++i) {
      if (a.c[i] == 0.0) continue;
      for (int j = 0; i + j <= a.order; ++j) r.c[i + j] += a.c[i] * b.c[j];
    }
  } else {
    const int K = a.order;
    for (int ka = 0; ka <= K; ++ka)
      for (int ja = 0; ja <= ka; ++ja) {
        double av = a.c[TaylorTable::idx2(ka - ja, ja)];
        if (av == 0.0) continue;
        for (int kb = 0; ka + kb <= K; ++kb)
          for (int jb = 0; jb <= kb; ++jb) {
            double bv = b.c[TaylorTable::idx2(kb - jb, jb)];
            if (bv == 0.0) continue;
            r.c[TaylorTable::idx2(ka - ja + kb - jb, ja + jb)] += av * bv;
          }
      }
  }
  return r;
}

TaylorTable tt_div(const TaylorTable& a, const TaylorTable& b) {
  check_same(a, b);
  if (b.c[0] == 0.0) throw error("taylor division by series with zero constant term");
  TaylorTable q = TaylorTable::zero(a.dim, a.order);
  if (a.dim == 1) {
    for (int k = 0; k <= a.order; ++k) {
      double s = a.c[k];
      for (int j = 1; j <= k; ++j) s -= b.c[j] * q.c[k - j];
      q.c[k] = s / b.c[0];
    }
  } else {
    const int K = a.order;
    for (int k = 0; k <= K; ++k)
      for (int j = 0; j <= k; ++j) {
        int i = k - j;
        double s = a.c[TaylorTable::idx2(i, j)];
        // subtract sum over nonzero grades of b times already-known q
        for (int kb = 1; kb <= k; ++kb)
          for (int jb = std::max(0, kb - i); jb <= std::min(kb, j); ++jb) {
            double bv = b.c[TaylorTable::idx2(kb - jb, jb)];
            if (bv == 0.0) continue;
            s -= bv * q.c[TaylorTable::idx2(i - (kb - jb), j - jb)];
          }
        q.c[TaylorTable::idx2(i, j)] = s / b.c[0];
      }
  }
  return q;
}

TaylorTable tt_compose(const std::vector<double>& g, const TaylorTable& u) {
  const int K = u.order;
  TaylorTable du = u;  // u - u0
  du.c[0] = 0.0;
  // Horner in (u - u0) with truncated arithmetic
  const int top = std::min<int>(K, (int)g.size() - 1);
  TaylorTable acc = TaylorTable::constant(u.dim, K, g[top]);
  for (int r = top - 1; r >= 0; --r) {
    acc = tt_mul(acc, du);
    acc.c[0] += g[r];
  }
  return acc;
}

std::vector<double> series_recip(const std::vector<double>& d) {
  if (d[0] == 0.0) throw error("series reciprocal with zero constant term");
  std::vector<double> q(d.size(), 0.0);
  q[0] = 1.0 / d[0];
  for (std::size_t k = 1; k < d.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += (j < d.size() ? d[j] : 0.0) * q[k - j];
    q[k] = -s / d[0];
  }
  return q;
}

std::vector<double> series_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; i + j < r.size() && j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

std::vector<double> series_div(const std::vector<double>& n, const std::vector<double>& d) {
  return series_mul(n, series_recip(d));
}

std::vector<double> series_exp(const std::vector<double>& w) {
  std::vector<double> h(w.size(), 0.0);
  h[0] = std::exp(w[0]);
  for (std::size_t k = 1; k < w.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += double(j) * w[j] * h[k - j];
    h[k] = s / double(k);
  }
  return h;
}

std::vector<double> gen_exp(double u0, int K) {
  std::vector<double> g(K + 1);
  double e = std::exp(u0);
  double f = 1.0;
  for (int r = 0; r <= K; ++r) {
    g[r] = e / f;
    f *= (r + 1);
  }
  return g;
}

std::vector<double> gen_log(double u0, int K) {
  if (u0 <= 0.0) throw error("log kernel needs positive argument");
  std::vector<double> g(K + 1);
  g[0] = std::log(u0);
  double p = 1.0;  // u0^r
  for (int r = 1; r <= K; ++r) {
    p *= u0;
    g[r] = (r % 2 ? 1.0 : -1.0) / (r * p);
  }
  return g;
}

std::vector<double> gen_sqrt(double u0, int K) {
  if (u0 <= 0.0) throw error("sqrt kernel needs positive argument");
  std::vector<double> g(K + 1);
  g[0] = std::sqrt(u0);
  for (int r = 1; r <= K; ++r) g[r] = g[r - 1] * (1.5 / r - 1.0) / u0;
  return g;
}

double phi_val(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

std::vector<double> gen_phi(double u0, int K) {
  std::vector<double> g(K + 1, 0.0);
  if (u0 <= 0.0) return g;
  // w = -1/t at u0, then exp
  std::vector<double> w(K + 1);
  double p = u0;
  for (int r = 0; r <= K; ++r) {
    w[r] = (r % 2 ? 1.0 : -1.0) / p;
    p *= u0;
  }
  return series_exp(w);
}

double beta_val(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

std::vector<double> gen_beta(double u0, int K) {
  std::vector<double> g(K + 1, 0.0);
  if (std::abs(u0) >= 1.0) return g;
  // w = -1/(1-t^2); denominator series at u0 is quadratic
  std::vector<double> den(K + 1, 0.0);
  den[0] = 1.0 - u0 * u0;
  if (K >= 1) den[1] = -2.0 * u0;
  if (K >= 2) den[2] = -1.0;
  std::vector<double> w = series_recip(den);
  for (auto& v : w) v = -v;
  return series_exp(w);
}

double smoothstep_val(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double p = std::exp(-1.0 / u), q = std::exp(-1.0 / (1.0 - u));
  return p / (p + q);
}

std::vector<double> gen_smoothstep(double u0, int K) {
  std::vector<double> g(K + 1, 0.0);
  if (u0 <= 0.0) return g;
  if (u0 >= 1.0) {
    g[0] = 1.0;
    return g;
  }
  std::vector<double> p = gen_phi(u0, K);
  std::vector<double> q = gen_phi(1.0 - u0, K);
  for (int r = 1; r <= K; r += 2) q[r] = -q[r];  // inner derivative of (1-u)
  std::vector<double> den(K + 1);
  for (int r = 0; r <= K; ++r) den[r] = p[r] + q[r];
  return series_div(p, den);
}

}  // namespace bf
