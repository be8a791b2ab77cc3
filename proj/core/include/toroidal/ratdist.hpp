#pragma once

#include <map>
#include <optional>
#include <vector>

#include "toroidal/qscalar.hpp"

namespace toroidal {

enum class Direction { At0, AtInf };

/// Rational function of one variable u with all poles on invertible monomials:
///   value = u^shift * num(u) / prod_i (u - root_i)^mult_i
/// num has QScalar coefficients with num[0] != 0, and num(root_i) != 0.
class FactoredRational {
 public:
  FactoredRational() : shift_(0), num_{QScalar::one()} {}
  static FactoredRational zero();
  static FactoredRational constant(QScalar c);
  /// (u - root)
  static FactoredRational linear(const Monomial& root);
  /// c * u^k
  static FactoredRational monomial_term(QScalar c, int k);
  static FactoredRational from_poly(std::vector<QScalar> coeffs, int shift = 0);

  bool is_zero() const;
  int shift() const { return shift_; }
  const std::vector<QScalar>& num() const { return num_; }
  const std::vector<std::pair<Monomial, int>>& den() const { return den_; }
  int num_degree() const { return int(num_.size()) - 1; }
  int den_degree() const;
  bool is_polynomial() const { return den_.empty(); }
  bool operator==(const FactoredRational& o) const;
  bool operator<(const FactoredRational& o) const;

  FactoredRational operator*(const FactoredRational& o) const;
  FactoredRational operator+(const FactoredRational& o) const;
  FactoredRational operator-() const;
  /// Requires numerator of degree <= 1 (or constant).
  FactoredRational inverse() const;
  FactoredRational derivative() const;
  /// u -> s*u
  FactoredRational compose_scale(const Monomial& s) const;
  /// u -> 1/u
  FactoredRational compose_invert() const;
  QScalar eval(const Monomial& point) const;  // throws on a pole
  bool has_pole_at(const Monomial& point) const;
  QScalar bar_coeffs_eval_helper() const = delete;
  FactoredRational bar() const;
  FactoredRational gamma_flatten() const;

  /// Exact Laurent coefficients of the chosen expansion for exponents in [lo, hi].
  std::map<int, QScalar> expand(Direction dir, int lo, int hi) const;

  std::string str() const;

 private:
  void normalize();
  int shift_ = 0;
  std::vector<QScalar> num_;                    // ascending, num_[0] != 0 unless zero
  std::vector<std::pair<Monomial, int>> den_;   // sorted canonical
};

/// Partial fraction decomposition r = poly + sum_i sum_p alpha[i][p-1]/(u-root_i)^p.
struct PartialFractions {
  std::vector<QScalar> poly;  // ascending in u, may include negative shift part
  int poly_shift = 0;
  struct Pole {
    Monomial root;
    std::vector<QScalar> alpha;  // alpha[p-1] is the coefficient of 1/(u-root)^p
  };
  std::vector<Pole> poles;
};

PartialFractions pfd(const FactoredRational& r);

/// One-variable formal distribution: delta atoms plus an optional directed
/// rational tail or explicit window coefficients.
struct DeltaTerm {
  Monomial support;  // atom delta^(order)(u/support)
  int order = 0;
  QScalar coeff;
};

struct FormalDist {
  std::vector<DeltaTerm> deltas;
  std::optional<std::pair<FactoredRational, Direction>> tail;
  std::map<int, QScalar> window_coeffs;  // used when no closed-form tail
  int window = 0;

  static FormalDist zero() { return {}; }
  bool delta_only() const { return !tail.has_value() && window_coeffs.empty(); }
  void merge_deltas();
  /// Exact coefficient of u^k (delta part + tail), valid inside the window
  /// for window-backed tails.
  QScalar coefficient(int k) const;
  FormalDist operator+(const FormalDist& o) const;
  FormalDist operator*(const QScalar& c) const;
  bool is_zero_on(int lo, int hi) const;
  std::string str() const;
};

/// Coefficient of u^k in delta^(n)(u/lambda) = sum_m (m)_n (u/lambda)^(m-n),
/// with (m)_n the falling factorial.
QScalar delta_atom_coefficient(const Monomial& lambda, int order, int k);

/// Lemma (expansion at 0) - (expansion at infinity) as a pure delta combination.
FormalDist expansion_difference_to_deltas(const FactoredRational& r);

/// f(u) * delta^(n)(u/lambda) for a Laurent polynomial f given by coeffs.
FormalDist localize_delta(const std::map<int, QScalar>& laurent_f, const Monomial& lambda, int order);

/// res_u of a FormalDist (the u^-1 coefficient).
QScalar residue(const FormalDist& d);

/// The structure series G_ij^sign as a directed rational:
/// G^{+}_{ij}(u) = (u q^{-c_ij} - 1)/(u - q^{-c_ij}), expanded at 0.
FactoredRational structure_series(int i, int j, int sign);

/// (G10^+(z q^p) G11^+(z q^-p) - G10^-(1/(z q^p)) G11^-(q^p / z)) divided by
/// (q - 1/q) (by its square when p = 2); pure delta combination.
FormalDist structure_identity(int p);
/// Second structure identity: (G11^+(z q^-2)^2 - G11^-(z^-1 q^2)^2)/(q-q^-1)^2.
FormalDist structure_identity_sq();

/// Solution basis of P(u) a(u) = 0 for P = prod (u - root_i)^mult_i:
/// the atoms delta^(p)(u/root_i), p < mult_i.
std::vector<DeltaTerm> kill_by_polynomial(const std::vector<std::pair<Monomial, int>>& factors);

}  // namespace toroidal
