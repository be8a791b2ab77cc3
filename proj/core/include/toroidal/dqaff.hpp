#pragma once

#include "toroidal/modes.hpp"

namespace toroidal {

/// Triangular-decomposition rewrite of a K X / X K mode pair at a given depth:
/// A * B = expansion + residual exactly, with the residual valuation certificate
/// nu = min(+-l, -+s) + depth + 1 in the Z_(2) filtration.
struct TriangularRewrite {
  ModeSum expansion;
  ModeWord residual;
  int nu = 0;
};
TriangularRewrite triangular_reorder(const ModeLetter& A, const ModeLetter& B, int depth);

/// p+-(z) = cbar+-(z) K-+_{1,0}(C^-1/2 z)^-1 K-+_{1,0}(C^-1/2 z q^2)
CurrentExpr derived_p(int sign, VarId z);
/// t+_{1,m}(z) = -(q-q^-1)^-1 K+_{1,0}(z q^-2m)^-1 K+_{1,m}(z)   (m >= 1)
/// t-_{1,-m}(z) = (q-q^-1)^-1 K-_{1,-m}(z) K-_{1,0}(z q^-2m)^-1
CurrentExpr derived_t(int sign, int m, VarId z);

/// Level-0 truncation: the central currents become 1.
CurrentExpr truncate_level0(const CurrentExpr& e);
/// Level-N truncation on mode words: kill cbar modes with |mode| >= level.
ModeSum truncate_modes(const ModeSum& s, int level);

/// The defining relation families, with their clearing discipline.
struct DRelation {
  std::string id;
  std::string paper_eq;
  bool cleared = false;  // polynomial-cleared exchange vs exact (delta) form
};
const std::vector<DRelation>& drelation_table();

}  // namespace toroidal
