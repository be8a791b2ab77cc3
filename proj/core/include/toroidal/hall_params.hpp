#pragma once

#include "toroidal/qscalar.hpp"

namespace toroidal {

/// Parameters of the elliptic Hall algebra: monomials with q1 q2 q3 = 1.
/// The paper's specialization is (q^-4, q^2, q^2).
struct HallParams {
  Monomial q1, q2, q3;

  HallParams() : HallParams(specialized()) {}
  HallParams(Monomial a, Monomial b, Monomial c) : q1(a), q2(b), q3(c) {
    if (!(q1 * q2 * q3).is_one())
      throw std::invalid_argument("Hall parameters must satisfy q1 q2 q3 = 1");
  }
  static HallParams specialized() {
    return HallParams(Monomial::q_power(-4), Monomial::q_power(2), Monomial::q_power(2));
  }
  /// A generic monomial triple with product one (exponents -3, 1, 2).
  static HallParams generic() {
    return HallParams(Monomial::q_power(-3), Monomial::q_power(1), Monomial::q_power(2));
  }
  bool operator==(const HallParams& o) const {
    return q1 == o.q1 && q2 == o.q2 && q3 == o.q3;
  }
};

/// Ambient parameters used by the Hall exchange rules (process-wide).
const HallParams& ambient_hall_params();
void set_ambient_hall_params(const HallParams& p);

/// g(1,1) = (1-q1)(1-q2)(1-q3) for the ambient parameters.
QScalar hall_g11();

}  // namespace toroidal
