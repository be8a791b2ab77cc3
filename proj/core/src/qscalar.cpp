#include "toroidal/qscalar.hpp"

#include <algorithm>
#include <sstream>

namespace toroidal {

BigInt bigint_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}

ZPoly zp_add(const ZPoly& a, const ZPoly& b) {
  ZPoly r;
  r.c.resize(std::max(a.c.size(), b.c.size()));
  for (size_t i = 0; i < r.c.size(); ++i) {
    if (i < a.c.size()) r.c[i] += a.c[i];
    if (i < b.c.size()) r.c[i] += b.c[i];
  }
  r.trim();
  return r;
}

ZPoly zp_neg(const ZPoly& a) {
  ZPoly r = a;
  for (auto& x : r.c) x = -x;
  return r;
}

ZPoly zp_sub(const ZPoly& a, const ZPoly& b) { return zp_add(a, zp_neg(b)); }

ZPoly zp_mul(const ZPoly& a, const ZPoly& b) {
  if (a.is_zero() || b.is_zero()) return ZPoly();
  ZPoly r;
  r.c.assign(a.c.size() + b.c.size() - 1, BigInt(0));
  for (size_t i = 0; i < a.c.size(); ++i) {
    if (a.c[i] == 0) continue;
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  }
  r.trim();
  return r;
}

ZPoly zp_mul_int(const ZPoly& a, const BigInt& k) {
  if (k == 0) return ZPoly();
  ZPoly r = a;
  for (auto& x : r.c) x *= k;
  return r;
}

ZPoly zp_div_exact(const ZPoly& a, const ZPoly& b) {
  if (b.is_zero()) throw std::domain_error("ZPoly division by zero");
  if (a.is_zero()) return ZPoly();
  ZPoly rem = a, quot;
  if (a.degree() < b.degree()) throw std::domain_error("inexact polynomial division");
  quot.c.assign(size_t(a.degree() - b.degree() + 1), BigInt(0));
  const BigInt& lead = b.c.back();
  for (int d = a.degree() - b.degree(); d >= 0; --d) {
    if (rem.degree() != d + b.degree()) continue;
    BigInt q = rem.c.back() / lead;
    if (q * lead != rem.c.back()) throw std::domain_error("inexact polynomial division");
    quot.c[size_t(d)] = q;
    for (int i = 0; i <= b.degree(); ++i) rem.c[size_t(d + i)] -= q * b.c[size_t(i)];
    rem.trim();
  }
  if (!rem.is_zero()) throw std::domain_error("inexact polynomial division");
  quot.trim();
  return quot;
}

BigInt zp_content(const ZPoly& a) {
  BigInt g = 0;
  for (const auto& x : a.c) g = bigint_gcd(g, x);
  return g;
}

ZPoly zp_primitive(const ZPoly& a) {
  if (a.is_zero()) return a;
  BigInt g = zp_content(a);
  if (a.c.back() < 0) g = -g;
  ZPoly r = a;
  for (auto& x : r.c) x /= g;
  return r;
}

// remainder of c^k * a by b for a suitable power of b's leading coefficient
static ZPoly zp_pseudo_rem(ZPoly a, const ZPoly& b) {
  const BigInt& lead = b.c.back();
  while (!a.is_zero() && a.degree() >= b.degree()) {
    int d = a.degree() - b.degree();
    BigInt la = a.c.back();
    for (auto& x : a.c) x *= lead;
    for (int i = 0; i <= b.degree(); ++i) a.c[size_t(d + i)] -= la * b.c[size_t(i)];
    a.trim();
  }
  return a;
}

ZPoly zp_gcd(ZPoly a, ZPoly b) {
  if (a.is_zero()) return zp_primitive(b).is_zero() ? ZPoly() : zp_primitive(b);
  if (b.is_zero()) return zp_primitive(a);
  BigInt ca = zp_content(a), cb = zp_content(b);
  BigInt cg = bigint_gcd(ca, cb);
  a = zp_primitive(a);
  b = zp_primitive(b);
  if (a.degree() < b.degree()) std::swap(a, b);
  while (!b.is_zero()) {
    ZPoly r = zp_pseudo_rem(a, b);
    a = std::move(b);
    b = zp_primitive(r);
  }
  ZPoly g = zp_primitive(a);
  return zp_mul_int(g, cg);
}

ZPoly zp_reverse(const ZPoly& a) {
  ZPoly r = a;
  std::reverse(r.c.begin(), r.c.end());
  r.trim();
  return r;
}

std::string zp_to_string(const ZPoly& a) {
  if (a.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int i = a.degree(); i >= 0; --i) {
    const BigInt& k = a[i];
    if (k == 0) continue;
    if (!first) os << (k > 0 ? " + " : " - ");
    else if (k < 0) os << "-";
    first = false;
    BigInt ak = k < 0 ? BigInt(-k) : k;
    if (ak != 1 || i == 0) os << ak.str();
    if (i > 0) {
      if (ak != 1) os << "*";
      os << "q";
      if (i > 1) os << "^" << i;
    }
  }
  return os.str();
}

QScalar QScalar::monomial(BigInt num, BigInt den, int qexp, int g2) {
  QScalar r;
  r.qshift_ = qexp;
  r.num_ = ZPoly(std::move(num));
  r.den_ = ZPoly(std::move(den));
  r.g2_ = g2;
  r.reduce();
  return r;
}

QScalar QScalar::from_parts(int qshift, ZPoly num, ZPoly den, int g2) {
  QScalar r;
  r.qshift_ = qshift;
  r.num_ = std::move(num);
  r.den_ = std::move(den);
  r.g2_ = g2;
  r.reduce();
  return r;
}

void QScalar::reduce() {
  if (den_.is_zero()) throw std::domain_error("QScalar with zero denominator");
  if (num_.is_zero()) {
    qshift_ = 0;
    den_ = ZPoly::one();
    g2_ = 0;
    return;
  }
  // pull powers of q out of num and den into qshift
  size_t zn = 0;
  while (zn < num_.c.size() && num_.c[zn] == 0) ++zn;
  if (zn) {
    num_.c.erase(num_.c.begin(), num_.c.begin() + long(zn));
    qshift_ += int(zn);
  }
  size_t zd = 0;
  while (zd < den_.c.size() && den_.c[zd] == 0) ++zd;
  if (zd) {
    den_.c.erase(den_.c.begin(), den_.c.begin() + long(zd));
    qshift_ -= int(zd);
  }
  ZPoly g = zp_gcd(num_, den_);
  if (!(g.degree() == 0 && g.c[0] == 1)) {
    num_ = zp_div_exact(num_, g);
    den_ = zp_div_exact(den_, g);
  }
  BigInt cn = zp_content(num_), cd = zp_content(den_);
  BigInt cg = bigint_gcd(cn, cd);
  if (cg > 1) {
    for (auto& x : num_.c) x /= cg;
    for (auto& x : den_.c) x /= cg;
  }
  if (den_.c.back() < 0) {
    num_ = zp_neg(num_);
    den_ = zp_neg(den_);
  }
}

bool QScalar::is_one() const {
  return qshift_ == 0 && g2_ == 0 && num_.degree() == 0 && num_.c[0] == 1 && den_.degree() == 0 &&
         den_.c[0] == 1;
}

bool QScalar::is_monomial() const {
  return !is_zero() && num_.degree() == 0 && den_.degree() == 0;
}

QScalar QScalar::operator+(const QScalar& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  if (g2_ != o.g2_)
    throw std::domain_error("adding scalars with different central-charge exponents");
  int sh = std::min(qshift_, o.qshift_);
  ZPoly a = num_, b = o.num_;
  // a * q^(qshift_-sh) / den_ + b * q^(o.qshift_-sh) / o.den_
  auto shift = [](ZPoly p, int k) {
    if (p.is_zero() || k == 0) return p;
    p.c.insert(p.c.begin(), size_t(k), BigInt(0));
    return p;
  };
  a = shift(std::move(a), qshift_ - sh);
  b = shift(std::move(b), o.qshift_ - sh);
  QScalar r;
  r.qshift_ = sh;
  r.num_ = zp_add(zp_mul(a, o.den_), zp_mul(b, den_));
  r.den_ = zp_mul(den_, o.den_);
  r.g2_ = g2_;
  r.reduce();
  return r;
}

QScalar QScalar::operator-() const {
  QScalar r = *this;
  r.num_ = zp_neg(r.num_);
  return r;
}

QScalar QScalar::operator-(const QScalar& o) const { return *this + (-o); }

QScalar QScalar::operator*(const QScalar& o) const {
  if (is_zero() || o.is_zero()) return QScalar();
  QScalar r;
  r.qshift_ = qshift_ + o.qshift_;
  r.num_ = zp_mul(num_, o.num_);
  r.den_ = zp_mul(den_, o.den_);
  r.g2_ = g2_ + o.g2_;
  r.reduce();
  return r;
}

QScalar QScalar::inverse() const {
  if (is_zero()) throw std::domain_error("QScalar inverse of zero");
  QScalar r;
  r.qshift_ = -qshift_;
  r.num_ = den_;
  r.den_ = num_;
  r.g2_ = -g2_;
  r.reduce();
  return r;
}

QScalar QScalar::operator/(const QScalar& o) const { return *this * o.inverse(); }

QScalar QScalar::pow(int e) const {
  if (e == 0) return QScalar::one();
  QScalar base = e > 0 ? *this : inverse();
  int n = e > 0 ? e : -e;
  QScalar r = QScalar::one();
  for (int i = 0; i < n; ++i) r = r * base;
  return r;
}

bool QScalar::operator==(const QScalar& o) const {
  return qshift_ == o.qshift_ && g2_ == o.g2_ && num_ == o.num_ && den_ == o.den_;
}

bool QScalar::operator<(const QScalar& o) const {
  if (qshift_ != o.qshift_) return qshift_ < o.qshift_;
  if (g2_ != o.g2_) return g2_ < o.g2_;
  if (num_.c != o.num_.c) return num_.c < o.num_.c;
  return den_.c < o.den_.c;
}

QScalar QScalar::bar() const {
  if (is_zero()) return *this;
  // q^s * num(q)/den(q)  ->  q^(-s) * num(1/q)/den(1/q)
  QScalar r;
  r.num_ = zp_reverse(num_);
  r.den_ = zp_reverse(den_);
  r.qshift_ = -qshift_ - num_.degree() + den_.degree();
  r.g2_ = -g2_;
  r.reduce();
  return r;
}

QScalar QScalar::gamma_flatten() const {
  QScalar r = *this;
  r.g2_ = 0;
  if (r.num_.is_zero()) r.g2_ = 0;
  return r;
}

std::string QScalar::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool den_trivial = den_.degree() == 0 && den_.c[0] == 1;
  bool num_trivial = num_.degree() == 0 && num_.c[0] == 1;
  if (!num_trivial || (qshift_ == 0 && g2_ == 0)) os << "(" << zp_to_string(num_) << ")";
  if (qshift_ != 0) os << (os.str().empty() ? "" : "*") << "q^" << qshift_;
  if (g2_ != 0) os << (os.str().empty() ? "" : "*") << "C^(" << g2_ << "/2)";
  std::string s = os.str();
  if (!den_trivial) s += "/(" + zp_to_string(den_) + ")";
  return s;
}

QScalar qint(int n) {
  // [n]_q = (q^n - q^-n)/(q - q^-1) = q^(1-n) (q^(2n)-1)/(q^2-1), odd in n
  if (n == 0) return QScalar::zero();
  int s = n > 0 ? 1 : -1;
  int m = n * s;
  ZPoly num;  // q^(2m) - 1
  num.c.assign(size_t(2 * m + 1), BigInt(0));
  num.c[0] = -1;
  num.c[size_t(2 * m)] = 1;
  ZPoly den;  // q^2 - 1
  den.c = {BigInt(-1), BigInt(0), BigInt(1)};
  QScalar r = QScalar::from_parts(1 - m, zp_div_exact(num, den), ZPoly::one(), 0);
  return s > 0 ? r : -r;
}

QScalar qfact(int n) {
  if (n < 0) throw std::invalid_argument("qfact of negative integer");
  QScalar r = QScalar::one();
  for (int i = 2; i <= n; ++i) r = r * qint(i);
  return r;
}

QScalar qbinom(int n, int m) {
  if (m < 0 || m > n) throw std::invalid_argument("qbinom requires 0 <= m <= n");
  return qfact(n) / (qfact(m) * qfact(n - m));
}

void Monomial::normalize() {
  if (rnum == 0) throw std::domain_error("Monomial must be invertible");
  BigInt g = bigint_gcd(rnum, rden);
  rnum /= g;
  rden /= g;
  if (rden < 0) {
    rden = -rden;
    rnum = -rnum;
  }
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial r;
  r.rnum = rnum * o.rnum;
  r.rden = rden * o.rden;
  r.qe = qe + o.qe;
  r.g2 = g2 + o.g2;
  r.s1 = s1 + o.s1;
  r.s2 = s2 + o.s2;
  r.normalize();
  return r;
}

Monomial Monomial::inverse() const {
  Monomial r;
  r.rnum = rden;
  r.rden = rnum;
  r.qe = -qe;
  r.g2 = -g2;
  r.s1 = -s1;
  r.s2 = -s2;
  r.normalize();
  return r;
}

Monomial Monomial::pow(int e) const {
  Monomial r;
  if (e == 0) return r;
  Monomial b = e > 0 ? *this : inverse();
  int n = e > 0 ? e : -e;
  for (int i = 0; i < n; ++i) r = r * b;
  return r;
}

bool Monomial::operator<(const Monomial& o) const {
  if (qe != o.qe) return qe < o.qe;
  if (g2 != o.g2) return g2 < o.g2;
  if (s1 != o.s1) return s1 < o.s1;
  if (s2 != o.s2) return s2 < o.s2;
  if (rnum != o.rnum) return rnum < o.rnum;
  return rden < o.rden;
}

QScalar Monomial::to_qscalar() const {
  if (s1 != 0 || s2 != 0)
    throw std::domain_error("Monomial with unresolved slot charges cannot become a scalar");
  return QScalar::monomial(rnum, rden, qe, g2);
}

Monomial Monomial::bar() const {
  Monomial r = *this;
  r.qe = -qe;
  r.g2 = -g2;
  r.s1 = -s1;
  r.s2 = -s2;
  return r;
}

Monomial Monomial::resolve_slots(bool to_gamma) const {
  Monomial r = *this;
  if (to_gamma) r.g2 += r.s1 + r.s2;
  r.s1 = r.s2 = 0;
  return r;
}

std::string Monomial::str() const {
  std::ostringstream os;
  if (rnum != 1 || rden != 1) {
    os << rnum.str();
    if (rden != 1) os << "/" << rden.str();
  }
  auto sep = [&] { if (!os.str().empty()) os << "*"; };
  if (qe != 0) { sep(); os << "q^" << qe; }
  if (g2 != 0) { sep(); os << "C^(" << g2 << "/2)"; }
  if (s1 != 0) { sep(); os << "C1^(" << s1 << "/2)"; }
  if (s2 != 0) { sep(); os << "C2^(" << s2 << "/2)"; }
  if (os.str().empty()) os << "1";
  return os.str();
}

bool qscalar_to_monomial(const QScalar& s, Monomial& out) {
  if (!s.is_monomial()) return false;
  out = Monomial();
  out.rnum = s.num().c[0];
  out.rden = s.den().c[0];
  out.qe = s.qshift();
  out.g2 = s.gamma2();
  out.normalize();
  return true;
}

}  // namespace toroidal
