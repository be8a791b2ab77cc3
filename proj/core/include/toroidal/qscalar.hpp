#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cassert>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace toroidal {

using BigInt = boost::multiprecision::cpp_int;

BigInt bigint_gcd(BigInt a, BigInt b);

/// Integer-coefficient polynomial in q, dense ascending, no trailing zeros.
struct ZPoly {
  std::vector<BigInt> c;

  ZPoly() = default;
  explicit ZPoly(BigInt k) {
    if (k != 0) c.push_back(std::move(k));
  }
  static ZPoly one() { return ZPoly(BigInt(1)); }

  bool is_zero() const { return c.empty(); }
  int degree() const { return int(c.size()) - 1; }  // -1 for zero
  void trim() {
    while (!c.empty() && c.back() == 0) c.pop_back();
  }
  const BigInt& operator[](int i) const { return c[size_t(i)]; }

  bool operator==(const ZPoly& o) const { return c == o.c; }
};

ZPoly zp_add(const ZPoly& a, const ZPoly& b);
ZPoly zp_sub(const ZPoly& a, const ZPoly& b);
ZPoly zp_neg(const ZPoly& a);
ZPoly zp_mul(const ZPoly& a, const ZPoly& b);
ZPoly zp_mul_int(const ZPoly& a, const BigInt& k);
/// Exact division; throws if the division leaves a remainder.
ZPoly zp_div_exact(const ZPoly& a, const ZPoly& b);
BigInt zp_content(const ZPoly& a);
ZPoly zp_primitive(const ZPoly& a);
/// gcd with positive leading coefficient (primitive PRS).
ZPoly zp_gcd(ZPoly a, ZPoly b);
/// q^k * p(1/q) with k = deg p (coefficient reversal).
ZPoly zp_reverse(const ZPoly& a);
std::string zp_to_string(const ZPoly& a);

/// Element of Q(q) times a central-charge monomial: value is
/// q^qshift * num/den * C^(g2/2), so g2 counts powers of gamma = C^(1/2).
/// num, den have nonzero constant terms, gcd(num,den)=1, den has positive
/// leading coefficient and content coprime to num's.
class QScalar {
 public:
  QScalar() : qshift_(0), num_(), den_(ZPoly::one()), g2_(0) {}
  QScalar(long v) : QScalar() { num_ = ZPoly(BigInt(v)); }  // NOLINT(google-explicit-constructor)
  QScalar(BigInt v) : QScalar() { num_ = ZPoly(std::move(v)); }

  static QScalar zero() { return QScalar(); }
  static QScalar one() { return QScalar(1); }
  /// r * q^a * gamma^(g2/2)
  static QScalar monomial(BigInt num, BigInt den, int qexp, int g2);
  static QScalar q_power(int a) { return monomial(1, 1, a, 0); }
  static QScalar gamma_power(int g2) { return monomial(1, 1, 0, g2); }
  static QScalar from_parts(int qshift, ZPoly num, ZPoly den, int g2);

  bool is_zero() const { return num_.is_zero(); }
  bool is_one() const;
  /// r*q^a*gamma^b shape test; exports the parts when true.
  bool is_monomial() const;
  int qshift() const { return qshift_; }
  int gamma2() const { return g2_; }
  const ZPoly& num() const { return num_; }
  const ZPoly& den() const { return den_; }

  QScalar operator+(const QScalar& o) const;
  QScalar operator-(const QScalar& o) const;
  QScalar operator*(const QScalar& o) const;
  QScalar operator/(const QScalar& o) const;
  QScalar operator-() const;
  QScalar inverse() const;
  QScalar pow(int e) const;
  bool operator==(const QScalar& o) const;
  bool operator!=(const QScalar& o) const { return !(*this == o); }
  bool operator<(const QScalar& o) const;  // arbitrary total order for maps

  /// Field automorphism q -> 1/q, gamma -> 1/gamma.
  QScalar bar() const;
  /// gamma -> 1 specialization.
  QScalar gamma_flatten() const;
  /// Substitute q -> q^-1? No: substitute gamma^2 (=C) by a scalar power of q? kept simple:
  /// multiply the gamma exponent into nothing; see gamma_flatten.

  std::string str() const;

 private:
  void reduce();
  int qshift_;
  ZPoly num_, den_;
  int g2_;  // doubled gamma exponent
};

QScalar qint(int n);
QScalar qfact(int n);
QScalar qbinom(int n, int m);

/// Cartan data of the affine a1 diagram: nodes {0,1}, c_ij = 4*delta_ij - 2.
struct CartanData {
  static int c(int i, int j) {
    check_node(i);
    check_node(j);
    return i == j ? 2 : -2;
  }
  static void check_node(int i) {
    if (i != 0 && i != 1) throw std::invalid_argument("node index must be 0 or 1");
  }
};

/// Invertible monomial r * q^qe * C^(g2/2) * C1^(s1/2) * C2^(s2/2), where
/// C1, C2 are the slot-tagged central charges used by coproduct bookkeeping
/// (resolved to C on multiplication merge, to 1 inside pairings).
struct Monomial {
  BigInt rnum = 1, rden = 1;
  int qe = 0;
  int g2 = 0;   // doubled exponent of C
  int s1 = 0;   // doubled exponent of C_(1)
  int s2 = 0;   // doubled exponent of C_(2)

  Monomial() = default;
  Monomial(BigInt rn, BigInt rd, int q, int g) : rnum(std::move(rn)), rden(std::move(rd)), qe(q), g2(g) { normalize(); }
  static Monomial one() { return Monomial(); }
  static Monomial q_power(int a) { return Monomial(1, 1, a, 0); }
  static Monomial gamma_power(int g) { return Monomial(1, 1, 0, g); }

  void normalize();
  bool is_one() const { return rnum == 1 && rden == 1 && qe == 0 && g2 == 0 && s1 == 0 && s2 == 0; }
  Monomial operator*(const Monomial& o) const;
  Monomial inverse() const;
  Monomial pow(int e) const;
  bool operator==(const Monomial& o) const {
    return rnum == o.rnum && rden == o.rden && qe == o.qe && g2 == o.g2 && s1 == o.s1 && s2 == o.s2;
  }
  bool operator<(const Monomial& o) const;
  /// Requires slots resolved (s1 == s2 == 0).
  QScalar to_qscalar() const;
  Monomial bar() const;
  /// Resolve slot charges: C_(i) -> gamma^2 (merge) or C_(i) -> 1 (pairing).
  Monomial resolve_slots(bool to_gamma) const;
  std::string str() const;
};

/// Monomial shape extraction from a QScalar (no slot parts).
bool qscalar_to_monomial(const QScalar& s, Monomial& out);

}  // namespace toroidal
