#pragma once

#include <optional>

#include "toroidal/multidist.hpp"

namespace toroidal {

/// Generator symbols for the three alphabets handled by the rewriting core:
/// the quantum toroidal algebra, the double quantum affinization, and the
/// elliptic Hall algebra.
enum class SymKind {
  // toroidal currents x+-_i(z), k+-_i(z) and the k inverses
  XPlus,
  XMinus,
  KPlus,
  KMinus,
  KPlusInv,
  KMinusInv,
  // double affinization: X+-_{1,r}(z), K+-_{1,+-m}(z), zero-mode K inverses,
  // central currents cbar+-(z) and their inverses
  DXPlus,
  DXMinus,
  DKPlus,
  DKMinus,
  DKPlusInv,
  DKMinusInv,
  CbarPlus,
  CbarMinus,
  CbarPlusInv,
  CbarMinusInv,
  // elliptic Hall algebra currents
  HPsiPlus,
  HPsiMinus,
  HEPlus,
  HEMinus,
  // opaque named symbol (used by derivations that solve for unknowns)
  Unknown,
};

bool is_toroidal(SymKind k);
bool is_dqaff(SymKind k);
bool is_hall(SymKind k);
bool is_k_family(SymKind k);      // toroidal k or its inverse
bool is_x_family(SymKind k);      // toroidal x
bool is_inverse(SymKind k);
SymKind inverse_kind(SymKind k);  // k <-> k^-1 (toroidal/dqaff K0/cbar)

struct Sym {
  SymKind kind;
  int idx = 0;  // node i for toroidal; loop index r / level m for dqaff; unknown id
  bool operator==(const Sym& o) const { return kind == o.kind && idx == o.idx; }
  bool operator<(const Sym& o) const {
    if (kind != o.kind) return kind < o.kind;
    return idx < o.idx;
  }
  std::string str() const;
};

/// current(scale * z_var^vexp), vexp in {+1, -1}
struct Factor {
  Sym sym;
  VarId var = 0;
  int vexp = 1;
  Monomial scale;
  bool operator==(const Factor& o) const {
    return sym == o.sym && var == o.var && vexp == o.vexp && scale == o.scale;
  }
  bool operator<(const Factor& o) const;
  ExpVec arg_exp() const { return ExpVec::unit(var, vexp); }
  std::string str() const;
};

Factor make_factor(SymKind kind, int idx, VarId var, Monomial scale = Monomial::one(),
                   int vexp = 1);

struct CTerm {
  MultiDist coeff = MultiDist::scalar(QScalar::one());
  std::vector<Factor> factors;
  int dpow = 0;   // D (toroidal) or D2 (dqaff)
  int d1pow = 0;  // D1 (dqaff)
  std::string str() const;
};

class CurrentExpr {
 public:
  CurrentExpr() = default;
  static CurrentExpr zero() { return CurrentExpr(); }
  static CurrentExpr unit(QScalar c = QScalar::one());
  static CurrentExpr gen(Factor f, QScalar c = QScalar::one());
  static CurrentExpr from_term(CTerm t);
  static CurrentExpr d_power(int k);
  static CurrentExpr d1_power(int k);

  const std::vector<CTerm>& terms() const { return terms_; }
  std::vector<CTerm>& terms() { return terms_; }
  bool syntactically_zero() const { return terms_.empty(); }

  CurrentExpr operator+(const CurrentExpr& o) const;
  CurrentExpr operator-(const CurrentExpr& o) const;
  CurrentExpr operator-() const;
  CurrentExpr operator*(const CurrentExpr& o) const;
  CurrentExpr scaled(const MultiDist& c) const;
  CurrentExpr scaled(const QScalar& c) const;

  /// Merge terms with identical factor words.
  void collect();
  std::set<VarId> vars() const;
  CurrentExpr rename_var(VarId from, VarId to) const;
  CurrentExpr subst_arg_var(VarId v, const Monomial& scale, VarId target) const;
  CurrentExpr gamma_flatten() const;

  std::string str() const;

 private:
  std::vector<CTerm> terms_;
};

/// s * a * b - t * b * a
CurrentExpr twisted_bracket(const CurrentExpr& a, const CurrentExpr& b, const MultiDist& s,
                            const MultiDist& t);
CurrentExpr bracket(const CurrentExpr& a, const CurrentExpr& b);

/// One exchange step: rewrite the product L*R of two adjacent factors.
/// Empty optional = exchange refused (same-sign x/x, cleared-only dqaff pair, unknowns).
struct ExchTerm {
  MultiDist coeff = MultiDist::scalar(QScalar::one());
  std::vector<Factor> factors;
};
std::optional<std::vector<ExchTerm>> exchange(const Factor& L, const Factor& R);

/// Exchange multiplied through by the clearing factors of the pair's relation:
/// valid for same-sign x x (toroidal), X X / K K / K X (dqaff), psi e / e e (hall).
/// Encodes  (prod clearing) * L * R = rhs_coeff * R * L.
struct ClearedExchange {
  std::vector<LinFactor> clearing;
  MultiDist rhs_coeff;
};
std::optional<ClearedExchange> cleared_exchange(const Factor& L, const Factor& R);

struct ReduceOptions {
  bool pin_args = true;       // substitute delta supports into factor arguments
  bool sort_factors = true;   // move factors to the canonical class order
  bool use_cleared = false;   // consume clearing factors for cleared-only pairs
  int zero_window = 6;        // window used when dropping vanishing coefficients
  int max_passes = 64;
};

/// Apply exact exchanges until the term order is canonical:
/// toroidal:  k^- family | x^- | x^+ | k^+ family  (x blocks keep relative order)
/// dqaff:     cbar family | K0^- family | core (X, K_m) | K0^+ family
/// hall:      psi family | e core
CurrentExpr reduce(const CurrentExpr& e, const ReduceOptions& opts = {});

/// reorder: one exchange applied at a position (the spec-level operation).
CurrentExpr reorder_at(const CTerm& term, size_t pos);

/// Apply a cleared same-sign exchange at a position; the term's coefficient
/// must contain the clearing factor. Throws if it does not.
CurrentExpr cleared_reorder_at(const CTerm& term, size_t pos);

/// Residue in a variable after pinning; factors must not reference v afterwards.
CurrentExpr residue_in(const CurrentExpr& e, VarId v);

/// Root-lattice grading of a term: (multiplicity of alpha_0, alpha_1) for
/// toroidal terms, (multiplicity of alpha_1, 0) for dqaff.
std::pair<int, int> root_grading(const CTerm& t);

/// Zero test within a window: reduce, then require every surviving term's
/// coefficient to vanish on the window box. Collects offending terms.
struct WindowReport {
  bool zero = true;
  std::vector<std::string> residuals;
};
WindowReport is_zero_within(const CurrentExpr& e, int window,
                            const ReduceOptions& opts = {});

}  // namespace toroidal
