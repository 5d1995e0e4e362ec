#pragma once

#include <vector>

#include "bf/expr.hpp"
#include "bf/region.hpp"

namespace bf {

// Descending closed sets Z_1 >= Z_2 >= ... >= Z_m with annulus scales
// eps_1 > eps_2 > ... > eps_m > 0.  If eps is empty a halving default is
// derived from the geometry of Z_1.
struct ZeroChain {
  std::vector<SetDescriptor> sets;
  std::vector<Rational> eps;

  json to_json() const;
  static ZeroChain from_json(const json& j);
};

struct FlatChain {
  SmoothExpr tau;
  std::vector<SmoothExpr> gauges;  // the per-level flat gauges G_j
  std::vector<Rational> eps;       // scales actually used
  json report;
};

// One smooth function vanishing exactly on Z_1, positive elsewhere, whose
// flatness deepens along the chain: near Z_j it is a product of j flat
// gauges, the levels glued by plateau cutoffs blending over the middle third
// of each annulus.  tau / G_j stays bounded on collars around Z_j.
FlatChain flat_zero_chain(const ZeroChain& chain, const Region& region);

}  // namespace bf
