#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "toroidal/ratdist.hpp"

namespace toroidal {

using VarId = int;

/// Global variable name registry (ids are stable for the process).
VarId var_id(const std::string& name);
const std::string& var_name(VarId v);
/// A fresh variable with a unique generated name.
VarId fresh_var(const std::string& stem = "t");

/// Sparse exponent vector over variables.
struct ExpVec {
  std::vector<std::pair<VarId, int>> e;  // sorted by VarId, nonzero exponents

  static ExpVec unit(VarId v, int k = 1);
  int get(VarId v) const;
  void set(VarId v, int k);
  bool is_zero() const { return e.empty(); }
  ExpVec operator+(const ExpVec& o) const;
  ExpVec operator-(const ExpVec& o) const;
  ExpVec operator-() const;
  ExpVec operator*(int k) const;
  bool operator==(const ExpVec& o) const { return e == o.e; }
  bool operator<(const ExpVec& o) const { return e < o.e; }
  std::string str() const;
};

/// delta^(order)(mu * z^ratio)
struct DeltaAtom {
  int order = 0;
  Monomial mu;
  ExpVec ratio;
  bool operator==(const DeltaAtom& o) const {
    return order == o.order && mu == o.mu && ratio == o.ratio;
  }
  bool operator<(const DeltaAtom& o) const;
  std::string str() const;
};

/// fr(u) expanded in direction dir, with u = z^ratio.
struct DirFactor {
  FactoredRational fr;
  ExpVec ratio;
  Direction dir = Direction::At0;
  bool operator==(const DirFactor& o) const {
    return dir == o.dir && ratio == o.ratio && fr == o.fr;
  }
  bool operator<(const DirFactor& o) const;
  std::string str() const;
};

/// (z^a - mu * z^b), kept factored so clearing factors stay recognizable.
struct LinFactor {
  ExpVec a, b;
  Monomial mu;
  bool operator==(const LinFactor& o) const { return a == o.a && b == o.b && mu == o.mu; }
  bool operator<(const LinFactor& o) const;
  std::string str() const;
};

struct DTerm {
  QScalar coeff = QScalar::one();
  ExpVec mono;
  std::vector<DeltaAtom> deltas;
  std::vector<DirFactor> rats;
  std::vector<LinFactor> lins;

  void sort_factors();
  /// Structure key ignoring coeff (for collection).
  bool same_shape(const DTerm& o) const;
  bool shape_less(const DTerm& o) const;
  std::string str() const;
};

using CoeffMap = std::map<ExpVec, QScalar>;
using Box = std::map<VarId, std::pair<int, int>>;

/// Reserved pseudo-variable separating central-charge sectors in materialized
/// coefficient maps: entries carry their C^(k/2) power in this slot so that
/// sums never mix distinct central-charge monomials.
VarId gamma_slot();

class MultiDist {
 public:
  MultiDist() = default;
  static MultiDist zero() { return MultiDist(); }
  static MultiDist scalar(QScalar c);
  static MultiDist monomial(ExpVec mono, QScalar c = QScalar::one());
  static MultiDist var_power(VarId v, int k);
  static MultiDist delta(DeltaAtom atom, QScalar c = QScalar::one());
  static MultiDist dir_factor(DirFactor f);
  static MultiDist lin_factor(LinFactor f);
  static MultiDist from_term(DTerm t);

  bool syntactically_zero() const { return terms_.empty(); }
  const std::vector<DTerm>& terms() const { return terms_; }
  std::vector<DTerm>& terms() { return terms_; }

  MultiDist operator+(const MultiDist& o) const;
  MultiDist operator-(const MultiDist& o) const;
  MultiDist operator*(const MultiDist& o) const;
  MultiDist operator*(const QScalar& c) const;
  MultiDist operator-() const;

  MultiDist bar() const;
  MultiDist gamma_flatten() const;
  MultiDist resolve_slots(bool to_gamma) const;
  /// z_v -> scale * z^target (target must not involve v)
  MultiDist subst_var(VarId v, const Monomial& scale, const ExpVec& target) const;
  /// z_v -> z_v^-1
  MultiDist invert_var(VarId v) const;
  MultiDist rename_var(VarId from, VarId to) const;

  std::set<VarId> vars() const;

  /// Merge terms with identical factor structure; drop zero coefficients.
  void collect();

  /// Eagerly separate delta atoms: each delta ends up owning a variable that
  /// appears nowhere else in the term. Substitutions chosen per-term; protected
  /// variables are eliminated only if nothing else works. Derivative atoms use
  /// the localization lemma. Throws on ill-defined products (delta of a
  /// constant argument).
  MultiDist localized(const std::set<VarId>& protected_vars = {}) const;

  /// Exact coefficients on the box (exponent ranges per variable).
  /// All variables of the distribution must be present in the box.
  CoeffMap materialize(const Box& box) const;
  bool is_zero_on(const Box& box) const;
  /// Convenience: box with range [-n, n] for every variable in vars() + extra.
  Box default_box(int n, const std::set<VarId>& extra = {}) const;

  /// Coefficient of z_v^-1, as a distribution in the remaining variables.
  MultiDist residue_var(VarId v) const;
  /// Coefficient of z_v^k.
  MultiDist coefficient_var(VarId v, int k) const;

  /// Expand binomial (lin) factors into monomial pairs.
  MultiDist lins_expanded() const;

  /// Cancel binomial factors against matching denominator roots of directed
  /// rational factors: (z^a - mu z^b) times a pole of fr at mu along the same
  /// ratio multiplies the pole away.
  MultiDist lins_cancelled() const;

  /// Canonical form for rational factors: orient every ratio so its first
  /// variable has positive exponent, merge factors sharing (ratio, direction),
  /// and absorb pole-free factors into whichever direction their partner uses.
  MultiDist rats_merged() const;

  std::string str() const;

 private:
  std::vector<DTerm> terms_;
};

/// Try to divide every term's factored content by (z^a - mu z^b); returns
/// false if some term does not carry the factor syntactically.
bool divide_by_lin(MultiDist& d, const LinFactor& f);

}  // namespace toroidal
