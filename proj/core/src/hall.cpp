#include "toroidal/hall_params.hpp"

namespace toroidal {

namespace {
HallParams& ambient() {
  static HallParams p = HallParams::specialized();
  return p;
}
}  // namespace

const HallParams& ambient_hall_params() { return ambient(); }

void set_ambient_hall_params(const HallParams& p) { ambient() = p; }

QScalar hall_g11() {
  const HallParams& p = ambient_hall_params();
  QScalar one = QScalar::one();
  return (one - p.q1.to_qscalar()) * (one - p.q2.to_qscalar()) * (one - p.q3.to_qscalar());
}

}  // namespace toroidal
