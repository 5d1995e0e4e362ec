#pragma once

#include <string>
#include <vector>

#include "bf/expr.hpp"
#include "bf/region.hpp"

namespace bf {

// Finite-difference measurement of raw partial derivatives, order <= 10.
// Uses only point evaluation (never the analytic derivative path), central
// stencils on a shrinking step with Richardson extrapolation.
struct FdJet {
  int dim = 1;
  int order = 0;
  std::vector<double> value;  // graded storage, same layout as TaylorTable
  std::vector<double> err;    // extrapolation error estimates

  double at(int i, int j = 0) const {
    return value[dim == 1 ? std::size_t(i) : TaylorTable::idx2(i, j)];
  }
  double err_at(int i, int j = 0) const {
    return err[dim == 1 ? std::size_t(i) : TaylorTable::idx2(i, j)];
  }
};

FdJet fd_jet(const SmoothExpr& f, const Pt& x, int K, double feature = 1.0);

// Decay order of f along a ray: slope of log|f(x+h d)| against log h on a
// dyadic ladder. `infinite` is set when the ray values collapse below the
// representable range (the function is flatter than any finite order).
struct OrderEstimate {
  bool infinite = false;
  bool stable = false;
  int order = 0;
  double slope = 0.0;
  std::vector<double> h;
  std::vector<double> val;
  json to_json() const;
};

OrderEstimate vanishing_order(const SmoothExpr& f, const Pt& x, const Pt& dir,
                              double h0, int max_steps = 40);
// 1D convenience: scans both directions, returns the smaller order
OrderEstimate vanishing_order1(const SmoothExpr& f, double x, double h0,
                               int max_steps = 40);

// sup of |derivative| per order 0..K over the region, measured on a doubling
// grid until stable within 1%.
std::vector<double> sup_norm(const SmoothExpr& f, const Region& region, int K);

// worker threads for the measurement sweeps (default 1; max reductions are
// order-independent, so results do not depend on this)
void set_sweep_threads(int n);
int sweep_threads();

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string note;
  json to_json() const;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(std::string name, double measured, double bound, bool pass,
           std::string note = "") {
    checks.push_back({std::move(name), measured, bound, pass, std::move(note)});
  }
  // convenience: pass iff measured <= bound
  void add_le(std::string name, double measured, double bound, std::string note = "") {
    checks.push_back({std::move(name), measured, bound, measured <= bound, std::move(note)});
  }
  json to_json() const;
};

}  // namespace bf
