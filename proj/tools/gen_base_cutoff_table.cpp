// Regenerates src/base_cutoff_table.inc: sup-norm table max_t |tau^(r)(t)| for
// the base step bump tau(t) = s(2 - 2 t^2), r = 0..60. The function is even
// and supported on |t| <= 1, so a dense scan of t in [0, 1.02] suffices; a 5%
// margin plus round-up to 3 significant digits absorbs the sampling error.
//
//   g++ -O2 -std=c++20 -Iinclude -Ivendor tools/gen_base_cutoff_table.cpp \
//       src/taylor.cpp -o gen_table && ./gen_table > src/base_cutoff_table.inc

#include <cmath>
#include <cstdio>
#include <vector>

#include "bf/taylor.hpp"

int main() {
  const int K = 60;
  const int N = 20000;
  std::vector<double> sup(K + 1, 0.0);
  for (int i = 0; i <= N; ++i) {
    double t = 1.02 * i / N;
    double u0 = 2.0 - 2.0 * t * t;
    bf::TaylorTable u = bf::TaylorTable::zero(1, K);
    u.c[0] = u0;
    u.c[1] = -4.0 * t;
    u.c[2] = -2.0;
    bf::TaylorTable tau = bf::tt_compose(bf::gen_smoothstep(u0, K), u);
    double f = 1.0;
    for (int r = 0; r <= K; ++r) {
      if (r > 0) f *= r;
      sup[r] = std::max(sup[r], std::abs(tau.c[r] * f));
    }
  }
  std::printf("// generated by tools/gen_base_cutoff_table.cpp; do not edit\n");
  for (int r = 0; r <= K; ++r)
    std::printf("%.17g,\n", bf::round_up_3(sup[r] * 1.05));
  return 0;
}
