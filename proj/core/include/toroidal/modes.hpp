#pragma once

#include "toroidal/currents.hpp"

namespace toroidal {

/// Mode generator xi_{a,m}: the coefficient of z^-m in the current a(z).
/// The mode index equals the Z-grading degree (D-conjugation weight);
/// for dqaff letters it is the Z_(2) degree.
struct ModeLetter {
  Sym sym;
  int mode = 0;
  bool operator==(const ModeLetter& o) const { return sym == o.sym && mode == o.mode; }
  bool operator<(const ModeLetter& o) const {
    if (!(sym == o.sym)) return sym < o.sym;
    return mode < o.mode;
  }
  std::string str() const;
};

struct ModeWord {
  QScalar coeff = QScalar::one();
  std::vector<ModeLetter> letters;
  std::string str() const;
  int grading() const;  // sum of modes
};

using ModeSum = std::vector<ModeWord>;

void mode_collect(ModeSum& s);
bool mode_sum_equal(ModeSum a, ModeSum b);

/// Allowed mode range of a letter kind (one-sided currents restrict it).
bool mode_allowed(const Sym& s, int mode);

/// Coefficient of prod_v z_v^{eta(v)} in the expression, as a sum of mode
/// words with letter modes bounded by M. Throws if a coefficient cannot be
/// determined (inverse factors, unknowns).
ModeSum modes_at(const CurrentExpr& e, const std::map<VarId, int>& eta, int M);

/// Exact exchange of two adjacent mode letters (A left of B) for the pairs
/// needed by negative-left normal ordering. Returns the full equal sum.
ModeSum mode_swap(const ModeLetter& A, const ModeLetter& B);

/// Stable negative-modes-left reordering data.
struct NormalOrder {
  ModeWord leading;  // the reordered word with its exchange scalar
  int ncert = 0;     // N(m) = min(-sum of negative modes, sum of nonnegative modes)
};
NormalOrder normal_order(const ModeWord& w);

/// Full exact reduction to the semi-canonical order (negative modes left,
/// same-side blocks keep relative order except commuting k-families).
ModeSum mode_reduce(const ModeWord& w);
ModeSum mode_reduce(const ModeSum& s);

/// Filtration valuation bound: min over words of N(m); INT_MAX for zero sums.
int valuation_bound(const ModeSum& s);
double ultrametric_norm(const ModeSum& s);

}  // namespace toroidal
