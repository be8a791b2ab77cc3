#include "toroidal/ratdist.hpp"

#include <algorithm>
#include <sstream>

namespace toroidal {

namespace {

std::vector<QScalar> poly_mul(const std::vector<QScalar>& a, const std::vector<QScalar>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<QScalar> r(a.size() + b.size() - 1, QScalar::zero());
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = r[i + j] + a[i] * b[j];
  while (!r.empty() && r.back().is_zero()) r.pop_back();
  return r;
}

std::vector<QScalar> poly_add(std::vector<QScalar> a, const std::vector<QScalar>& b) {
  if (a.size() < b.size()) a.resize(b.size(), QScalar::zero());
  for (size_t i = 0; i < b.size(); ++i) a[i] = a[i] + b[i];
  while (!a.empty() && a.back().is_zero()) a.pop_back();
  return a;
}

QScalar poly_eval(const std::vector<QScalar>& p, const QScalar& x) {
  QScalar r = QScalar::zero();
  for (size_t i = p.size(); i-- > 0;) r = r * x + p[i];
  return r;
}

/// Synthetic division of p by (u - root); requires exact root.
std::vector<QScalar> poly_deflate(const std::vector<QScalar>& p, const QScalar& root) {
  std::vector<QScalar> q(p.size() - 1, QScalar::zero());
  QScalar carry = QScalar::zero();
  for (size_t i = p.size(); i-- > 1;) {
    carry = p[i] + carry * root;
    q[i - 1] = carry;
  }
  return q;
}

std::vector<QScalar> poly_derivative(const std::vector<QScalar>& p) {
  std::vector<QScalar> r;
  for (size_t i = 1; i < p.size(); ++i) r.push_back(p[i] * QScalar(long(i)));
  while (!r.empty() && r.back().is_zero()) r.pop_back();
  return r;
}

}  // namespace

FactoredRational FactoredRational::zero() {
  FactoredRational r;
  r.num_.clear();
  return r;
}

FactoredRational FactoredRational::constant(QScalar c) {
  FactoredRational r;
  r.num_ = {std::move(c)};
  r.normalize();
  return r;
}

FactoredRational FactoredRational::linear(const Monomial& root) {
  FactoredRational r;
  r.num_ = {-root.to_qscalar(), QScalar::one()};
  return r;
}

FactoredRational FactoredRational::monomial_term(QScalar c, int k) {
  FactoredRational r;
  r.num_ = {std::move(c)};
  r.shift_ = k;
  r.normalize();
  return r;
}

FactoredRational FactoredRational::from_poly(std::vector<QScalar> coeffs, int shift) {
  FactoredRational r;
  r.num_ = std::move(coeffs);
  r.shift_ = shift;
  r.normalize();
  return r;
}

bool FactoredRational::is_zero() const { return num_.empty(); }

int FactoredRational::den_degree() const {
  int d = 0;
  for (auto& [root, m] : den_) d += m;
  return d;
}

bool FactoredRational::operator==(const FactoredRational& o) const {
  return shift_ == o.shift_ && num_ == o.num_ && den_ == o.den_;
}

bool FactoredRational::operator<(const FactoredRational& o) const {
  if (shift_ != o.shift_) return shift_ < o.shift_;
  if (num_.size() != o.num_.size()) return num_.size() < o.num_.size();
  for (size_t i = 0; i < num_.size(); ++i) {
    if (num_[i] != o.num_[i]) return num_[i] < o.num_[i];
  }
  if (den_.size() != o.den_.size()) return den_.size() < o.den_.size();
  for (size_t i = 0; i < den_.size(); ++i) {
    if (!(den_[i].first == o.den_[i].first)) return den_[i].first < o.den_[i].first;
    if (den_[i].second != o.den_[i].second) return den_[i].second < o.den_[i].second;
  }
  return false;
}

void FactoredRational::normalize() {
  while (!num_.empty() && num_.back().is_zero()) num_.pop_back();
  if (num_.empty()) {
    shift_ = 0;
    den_.clear();
    return;
  }
  size_t lead0 = 0;
  while (lead0 < num_.size() && num_[lead0].is_zero()) ++lead0;
  if (lead0) {
    num_.erase(num_.begin(), num_.begin() + long(lead0));
    shift_ += int(lead0);
  }
  // cancel any numerator roots shared with the denominator
  for (auto& [root, mult] : den_) {
    QScalar rv = root.to_qscalar();
    while (mult > 0 && num_.size() > 1 && poly_eval(num_, rv).is_zero()) {
      num_ = poly_deflate(num_, rv);
      --mult;
    }
  }
  den_.erase(std::remove_if(den_.begin(), den_.end(), [](auto& p) { return p.second == 0; }),
             den_.end());
  std::sort(den_.begin(), den_.end(), [](auto& a, auto& b) {
    if (!(a.first == b.first)) return a.first < b.first;
    return a.second < b.second;
  });
  // merge equal roots
  std::vector<std::pair<Monomial, int>> merged;
  for (auto& p : den_) {
    if (!merged.empty() && merged.back().first == p.first) merged.back().second += p.second;
    else merged.push_back(p);
  }
  den_ = std::move(merged);
}

FactoredRational FactoredRational::operator*(const FactoredRational& o) const {
  FactoredRational r;
  if (is_zero() || o.is_zero()) return zero();
  r.shift_ = shift_ + o.shift_;
  r.num_ = poly_mul(num_, o.num_);
  r.den_ = den_;
  r.den_.insert(r.den_.end(), o.den_.begin(), o.den_.end());
  r.normalize();
  return r;
}

FactoredRational FactoredRational::operator-() const {
  FactoredRational r = *this;
  for (auto& c : r.num_) c = -c;
  return r;
}

FactoredRational FactoredRational::operator+(const FactoredRational& o) const {
  if (is_zero()) return o;
  if (o.is_zero()) return *this;
  // common denominator: union of factors with max multiplicities
  std::vector<std::pair<Monomial, int>> common = den_;
  for (auto& [root, m] : o.den_) {
    bool found = false;
    for (auto& [r2, m2] : common)
      if (r2 == root) {
        m2 = std::max(m2, m);
        found = true;
      }
    if (!found) common.push_back({root, m});
  }
  auto lift = [&common](const FactoredRational& f) {
    std::vector<QScalar> p = f.num_;
    for (auto& [root, m] : common) {
      int have = 0;
      for (auto& [r2, m2] : f.den_)
        if (r2 == root) have = m2;
      for (int k = have; k < m; ++k)
        p = poly_mul(p, {-root.to_qscalar(), QScalar::one()});
    }
    return p;
  };
  std::vector<QScalar> pa = lift(*this), pb = lift(o);
  int sh = std::min(shift_, o.shift_);
  auto shift_poly = [](std::vector<QScalar> p, int k) {
    p.insert(p.begin(), size_t(k), QScalar::zero());
    return p;
  };
  pa = shift_poly(std::move(pa), shift_ - sh);
  pb = shift_poly(std::move(pb), o.shift_ - sh);
  FactoredRational r;
  r.shift_ = sh;
  r.num_ = poly_add(std::move(pa), pb);
  r.den_ = common;
  r.normalize();
  return r;
}

FactoredRational FactoredRational::inverse() const {
  if (is_zero()) throw std::domain_error("inverse of zero rational");
  FactoredRational r;
  r.shift_ = -shift_;
  if (num_.size() == 1) {
    r.num_ = {num_[0].inverse()};
  } else if (num_.size() == 2) {
    // c1 u + c0 = c1 (u - (-c0/c1))
    QScalar root = -(num_[0] / num_[1]);
    Monomial m;
    if (!qscalar_to_monomial(root, m))
      throw std::domain_error("cannot invert: numerator root is not a monomial");
    r.num_ = {num_[1].inverse()};
    r.den_.push_back({m, 1});
  } else {
    throw std::domain_error("inverse requires a (factored) numerator of degree <= 1");
  }
  for (auto& [root, mult] : den_) {
    std::vector<QScalar> lin = {-root.to_qscalar(), QScalar::one()};
    for (int k = 0; k < mult; ++k) r.num_ = poly_mul(r.num_, lin);
  }
  r.normalize();
  return r;
}

FactoredRational FactoredRational::derivative() const {
  // d/du [u^s N / prod (u-a_i)^m_i]
  if (is_zero()) return zero();
  FactoredRational r;
  // numerator of derivative over den with multiplicities m_i + 1:
  // (s u^{s-1} N + u^s N') prod(u-a_i) - u^s N sum_i m_i prod_{j != i}(u-a_j)
  std::vector<QScalar> prod = {QScalar::one()};
  for (auto& [root, mult] : den_) {
    (void)mult;
    prod = poly_mul(prod, {-root.to_qscalar(), QScalar::one()});
  }
  std::vector<QScalar> total;  // coefficient polynomial of u^{shift-1}
  // term A: s*N*prod  (u^{s-1})
  if (shift_ != 0) total = poly_add(total, poly_mul({QScalar(long(shift_))}, poly_mul(num_, prod)));
  // term B: u*N'*prod (u^{s-1} * u)
  {
    auto d = poly_derivative(num_);
    if (!d.empty()) {
      auto t = poly_mul(d, prod);
      t.insert(t.begin(), QScalar::zero());
      total = poly_add(total, t);
    }
  }
  // term C: -u*N* sum_i m_i prod_{j != i}
  {
    std::vector<QScalar> sum;
    for (size_t i = 0; i < den_.size(); ++i) {
      std::vector<QScalar> pp = {QScalar(long(den_[i].second))};
      for (size_t j = 0; j < den_.size(); ++j)
        if (j != i) pp = poly_mul(pp, {-den_[j].first.to_qscalar(), QScalar::one()});
      sum = poly_add(sum, pp);
    }
    if (!sum.empty()) {
      auto t = poly_mul(num_, sum);
      t.insert(t.begin(), QScalar::zero());
      for (auto& c : t) c = -c;
      total = poly_add(total, t);
    }
  }
  r.num_ = std::move(total);
  r.shift_ = shift_ - 1;
  r.den_ = den_;
  for (auto& [root, mult] : r.den_) ++mult;
  r.normalize();
  return r;
}

FactoredRational FactoredRational::compose_scale(const Monomial& s) const {
  if (is_zero()) return zero();
  // f(s u) = s^(shift - sum m_i) * u^shift * N'(u) / prod (u - a_i/s)^m_i,
  // with N'_k = n_k s^k.
  FactoredRational r;
  QScalar sv = s.to_qscalar();
  r.shift_ = shift_;
  r.num_.clear();
  r.num_.reserve(num_.size());
  QScalar p = QScalar::one();
  for (size_t i = 0; i < num_.size(); ++i) {
    r.num_.push_back(num_[i] * p);
    p = p * sv;
  }
  QScalar lead = sv.pow(shift_);
  Monomial sinv = s.inverse();
  for (auto& [root, mult] : den_) {
    r.den_.push_back({root * sinv, mult});
    lead = lead / sv.pow(mult);
  }
  for (auto& c : r.num_) c = c * lead;
  r.normalize();
  return r;
}

FactoredRational FactoredRational::compose_invert() const {
  if (is_zero()) return zero();
  // f(1/u): u^-s * N(1/u) / prod(1/u - a)^m ; N(1/u) = u^-deg * rev(N)(u);
  // (1/u - a)^m = (-a)^m u^-m (u - 1/a)^m
  FactoredRational r;
  r.num_.assign(num_.rbegin(), num_.rend());
  int deg = int(num_.size()) - 1;
  r.shift_ = -shift_ - deg;
  QScalar lead = QScalar::one();
  for (auto& [root, mult] : den_) {
    QScalar a = root.to_qscalar();
    lead = lead / ((-a).pow(mult));
    r.den_.push_back({root.inverse(), mult});
    r.shift_ += mult;
  }
  for (auto& c : r.num_) c = c * lead;
  r.normalize();
  return r;
}

QScalar FactoredRational::eval(const Monomial& point) const {
  if (is_zero()) return QScalar::zero();
  QScalar x = point.to_qscalar();
  QScalar v = poly_eval(num_, x) * x.pow(shift_);
  for (auto& [root, mult] : den_) {
    QScalar d = x - root.to_qscalar();
    if (d.is_zero()) throw std::domain_error("evaluation at a pole of a rational factor");
    v = v / d.pow(mult);
  }
  return v;
}

bool FactoredRational::has_pole_at(const Monomial& point) const {
  for (auto& [root, mult] : den_)
    if (root == point) return true;
  return false;
}

FactoredRational FactoredRational::bar() const {
  FactoredRational r = *this;
  for (auto& c : r.num_) c = c.bar();
  for (auto& [root, mult] : r.den_) root = root.bar();
  r.normalize();
  return r;
}

FactoredRational FactoredRational::gamma_flatten() const {
  FactoredRational r = *this;
  for (auto& c : r.num_) c = c.gamma_flatten();
  for (auto& [root, mult] : r.den_) {
    root.g2 = 0;
    root.s1 = root.s2 = 0;
  }
  r.normalize();
  return r;
}

PartialFractions pfd(const FactoredRational& r) {
  PartialFractions out;
  if (r.is_zero()) return out;
  if (r.shift() < 0)
    throw std::domain_error("pfd expects a nonnegative power shift; multiply through first");
  // polynomial numerator with shift folded in
  std::vector<QScalar> N(size_t(r.shift()), QScalar::zero());
  N.insert(N.end(), r.num().begin(), r.num().end());

  // whole polynomial part by long division against expanded denominator
  std::vector<QScalar> D = {QScalar::one()};
  for (auto& [root, mult] : r.den())
    for (int k = 0; k < mult; ++k) D = poly_mul(D, {-root.to_qscalar(), QScalar::one()});
  std::vector<QScalar> rem = N, quot;
  if (D.size() > 1) {
    while (rem.size() >= D.size()) {
      size_t d = rem.size() - D.size();
      QScalar c = rem.back() / D.back();
      if (quot.size() < d + 1) quot.resize(d + 1, QScalar::zero());
      quot[d] = c;
      for (size_t i = 0; i < D.size(); ++i) rem[d + i] = rem[d + i] - c * D[i];
      while (!rem.empty() && rem.back().is_zero()) rem.pop_back();
    }
  } else {
    quot = N;
    for (auto& c : quot) c = c / D[0];
    rem.clear();
  }
  out.poly = quot;

  // alpha_{i,p} by derivatives of N/Q_i at the root
  for (auto& [root, mult] : r.den()) {
    PartialFractions::Pole pole;
    pole.root = root;
    pole.alpha.assign(size_t(mult), QScalar::zero());
    FactoredRational qi = FactoredRational::from_poly(N, 0);
    for (auto& [root2, mult2] : r.den()) {
      if (root2 == root) continue;
      FactoredRational lin = FactoredRational::linear(root2);
      FactoredRational inv = lin.inverse();
      for (int k = 0; k < mult2; ++k) qi = qi * inv;
    }
    // alpha_{mult-k} = (1/k!) d^k/du^k [qi] at root, k = 0..mult-1
    FactoredRational cur = qi;
    QScalar fact = QScalar::one();
    for (int k = 0; k < mult; ++k) {
      if (k > 0) {
        cur = cur.derivative();
        fact = fact * QScalar(long(k));
      }
      pole.alpha[size_t(mult - 1 - k)] = cur.eval(root) / fact;
    }
    out.poles.push_back(std::move(pole));
  }
  return out;
}

std::map<int, QScalar> FactoredRational::expand(Direction dir, int lo, int hi) const {
  std::map<int, QScalar> out;
  if (is_zero()) return out;
  // handle negative shift by treating it separately
  FactoredRational base = *this;
  int extra = 0;
  if (base.shift_ < 0) {
    extra = base.shift_;
    base.shift_ = 0;
  }
  PartialFractions p = pfd(base);
  auto addc = [&](int k, const QScalar& v) {
    k += extra;
    if (k < lo || k > hi || v.is_zero()) return;
    auto it = out.find(k);
    if (it == out.end()) out.emplace(k, v);
    else {
      it->second = it->second + v;
      if (it->second.is_zero()) out.erase(it);
    }
  };
  for (size_t i = 0; i < p.poly.size(); ++i) addc(int(i), p.poly[i]);
  for (auto& pole : p.poles) {
    QScalar a = pole.root.to_qscalar();
    for (size_t pm = 1; pm <= pole.alpha.size(); ++pm) {
      const QScalar& alpha = pole.alpha[pm - 1];
      if (alpha.is_zero()) continue;
      if (dir == Direction::At0) {
        // 1/(u-a)^p = (-a)^(-p) sum_m C(p-1+m, m) (u/a)^m
        QScalar lead = (-a).pow(-int(pm));
        for (int m = std::max(0, lo - extra); m + extra <= hi; ++m) {
          QScalar binom = QScalar::one();
          // C(p-1+m, m) as an integer
          BigInt cb = 1;
          for (size_t t = 1; t <= pm - 1; ++t) cb = cb * BigInt(int(t) + m) / BigInt(int(t));
          binom = QScalar(cb);
          addc(m, alpha * lead * binom * a.pow(-m));
        }
      } else {
        // 1/(u-a)^p = u^-p sum_m C(p-1+m, m) a^m u^-m
        for (int m = 0; -int(pm) - m + extra >= lo; ++m) {
          int k = -int(pm) - m;
          if (k + extra > hi) continue;
          BigInt cb = 1;
          for (size_t t = 1; t <= pm - 1; ++t) cb = cb * BigInt(int(t) + m) / BigInt(int(t));
          addc(k, alpha * QScalar(cb) * a.pow(m));
        }
      }
    }
  }
  return out;
}

std::string FactoredRational::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < num_.size(); ++i) {
    if (i) os << " + ";
    os << "(" << num_[i].str() << ")";
    if (i) {
      os << "u";
      if (i > 1) os << "^" << i;
    }
  }
  os << ")";
  if (shift_ != 0) os << "*u^" << shift_;
  for (auto& [root, mult] : den_) {
    os << "/(u - " << root.str() << ")";
    if (mult > 1) os << "^" << mult;
  }
  return os.str();
}

void FormalDist::merge_deltas() {
  std::sort(deltas.begin(), deltas.end(), [](const DeltaTerm& a, const DeltaTerm& b) {
    if (!(a.support == b.support)) return a.support < b.support;
    if (a.order != b.order) return a.order < b.order;
    return a.coeff.gamma2() < b.coeff.gamma2();
  });
  std::vector<DeltaTerm> merged;
  for (auto& d : deltas) {
    if (!merged.empty() && merged.back().support == d.support &&
        merged.back().order == d.order && merged.back().coeff.gamma2() == d.coeff.gamma2())
      merged.back().coeff = merged.back().coeff + d.coeff;
    else
      merged.push_back(d);
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const DeltaTerm& d) { return d.coeff.is_zero(); }),
               merged.end());
  deltas = std::move(merged);
}

QScalar delta_atom_coefficient(const Monomial& lambda, int order, int k) {
  // delta^(n)(u/l): sum_m (m)(m-1)...(m-n+1) (u/l)^(m-n); coefficient of u^k has m = k+n
  BigInt fall = 1;
  for (int t = 0; t < order; ++t) fall *= BigInt(k + order - t);
  if (fall == 0) return QScalar::zero();
  return QScalar(fall) * lambda.to_qscalar().pow(-k);
}

QScalar FormalDist::coefficient(int k) const {
  QScalar v = QScalar::zero();
  for (auto& d : deltas) v = v + d.coeff * delta_atom_coefficient(d.support, d.order, k);
  if (tail.has_value()) {
    auto m = tail->first.expand(tail->second, k, k);
    auto it = m.find(k);
    if (it != m.end()) v = v + it->second;
  } else {
    auto it = window_coeffs.find(k);
    if (it != window_coeffs.end()) v = v + it->second;
  }
  return v;
}

FormalDist FormalDist::operator+(const FormalDist& o) const {
  FormalDist r = *this;
  r.deltas.insert(r.deltas.end(), o.deltas.begin(), o.deltas.end());
  r.merge_deltas();
  if (tail.has_value() && o.tail.has_value()) {
    if (tail->second != o.tail->second) throw std::domain_error("adding tails of mixed direction");
    r.tail = {tail->first + o.tail->first, tail->second};
  } else if (o.tail.has_value()) {
    r.tail = o.tail;
  }
  for (auto& [k, c] : o.window_coeffs) {
    auto& slot = r.window_coeffs[k];
    slot = slot + c;
    if (slot.is_zero()) r.window_coeffs.erase(k);
  }
  r.window = std::min(window == 0 ? o.window : window, o.window == 0 ? window : o.window);
  return r;
}

FormalDist FormalDist::operator*(const QScalar& c) const {
  FormalDist r = *this;
  for (auto& d : r.deltas) d.coeff = d.coeff * c;
  if (r.tail.has_value()) r.tail->first = r.tail->first * FactoredRational::constant(c);
  for (auto& [k, v] : r.window_coeffs) v = v * c;
  r.merge_deltas();
  return r;
}

bool FormalDist::is_zero_on(int lo, int hi) const {
  for (int k = lo; k <= hi; ++k)
    if (!coefficient(k).is_zero()) return false;
  return true;
}

std::string FormalDist::str() const {
  std::ostringstream os;
  bool first = true;
  for (auto& d : deltas) {
    if (!first) os << " + ";
    first = false;
    os << "(" << d.coeff.str() << ")*delta";
    if (d.order) os << "^(" << d.order << ")";
    os << "(u/" << d.support.str() << ")";
  }
  if (tail.has_value()) {
    if (!first) os << " + ";
    first = false;
    os << "[" << tail->first.str() << "]_" << (tail->second == Direction::At0 ? "0" : "inf");
  }
  if (first) os << "0";
  return os.str();
}

FormalDist expansion_difference_to_deltas(const FactoredRational& r) {
  FormalDist out;
  if (r.is_zero()) return out;
  FactoredRational base = r;
  int extra = 0;
  if (base.shift() < 0) {
    // u^-k f: multiply delta atoms of f by u^-k afterwards via localization
    extra = base.shift();
    base = base * FactoredRational::monomial_term(QScalar::one(), -extra);
  }
  PartialFractions p = pfd(base);
  for (auto& pole : p.poles) {
    QScalar lam = pole.root.to_qscalar();
    for (size_t pm = 1; pm <= pole.alpha.size(); ++pm) {
      const QScalar& alpha = pole.alpha[pm - 1];
      if (alpha.is_zero()) continue;
      // (-1)^p alpha_p / ((p-1)! lambda^p) delta^(p-1)(u/lambda)
      QScalar fact = QScalar::one();
      for (size_t t = 2; t < pm; ++t) fact = fact * QScalar(long(t));
      QScalar sign = (pm % 2 == 0) ? QScalar::one() : -QScalar::one();
      DeltaTerm d;
      d.support = pole.root;
      d.order = int(pm) - 1;
      d.coeff = sign * alpha / (fact * lam.pow(int(pm)));
      out.deltas.push_back(d);
    }
  }
  out.merge_deltas();
  if (extra != 0) {
    // multiply by u^extra: f(u) delta^(n)(u/l) localization with f = u^extra
    FormalDist shifted;
    for (auto& d : out.deltas) {
      std::map<int, QScalar> f = {{extra, QScalar::one()}};
      FormalDist loc = localize_delta(f, d.support, d.order);
      shifted = shifted + loc * d.coeff;
    }
    out = shifted;
  }
  return out;
}

FormalDist localize_delta(const std::map<int, QScalar>& laurent_f, const Monomial& lambda,
                          int order) {
  // f(u) delta^(n)(u/l) = sum_p (-1)^(n-p) C(n,p) g^{(n-p)}(1) delta^(p)(u/l), g(w)=f(l w)
  FormalDist out;
  QScalar lam = lambda.to_qscalar();
  for (int p = 0; p <= order; ++p) {
    int k = order - p;  // derivative order of g at 1
    QScalar gk = QScalar::zero();
    for (auto& [e, c] : laurent_f) {
      BigInt fall = 1;
      for (int t = 0; t < k; ++t) fall *= BigInt(e - t);
      if (fall == 0) continue;
      gk = gk + c * lam.pow(e) * QScalar(fall);
    }
    if (gk.is_zero()) continue;
    BigInt binom = 1;
    for (int t = 1; t <= p; ++t) binom = binom * BigInt(order - p + t) / BigInt(t);
    QScalar sign = (k % 2 == 0) ? QScalar::one() : -QScalar::one();
    DeltaTerm d;
    d.support = lambda;
    d.order = p;
    d.coeff = sign * QScalar(binom) * gk;
    out.deltas.push_back(d);
  }
  out.merge_deltas();
  return out;
}

QScalar residue(const FormalDist& d) {
  QScalar v = QScalar::zero();
  for (auto& t : d.deltas) v = v + t.coeff * delta_atom_coefficient(t.support, t.order, -1);
  if (d.tail.has_value()) {
    auto m = d.tail->first.expand(d.tail->second, -1, -1);
    auto it = m.find(-1);
    if (it != m.end()) v = v + it->second;
  } else {
    auto it = d.window_coeffs.find(-1);
    if (it != d.window_coeffs.end()) v = v + it->second;
  }
  return v;
}

FactoredRational structure_series(int i, int j, int sign) {
  // G^{sign}_{ij}(u) = (u q^{-sign*c_ij} - 1)/(u - q^{-sign*c_ij})
  int c = CartanData::c(i, j) * sign;
  FactoredRational r = FactoredRational::from_poly({QScalar(-1), QScalar::q_power(-c)});
  Monomial root = Monomial::q_power(-c);
  return r * FactoredRational::linear(root).inverse();
}

FormalDist structure_identity(int p) {
  FactoredRational g1 = structure_series(1, 0, +1).compose_scale(Monomial::q_power(p));
  FactoredRational g2 = structure_series(1, 1, +1).compose_scale(Monomial::q_power(-p));
  FactoredRational prod = g1 * g2;
  FormalDist d = expansion_difference_to_deltas(prod);
  QScalar div = QScalar::q_power(1) - QScalar::q_power(-1);
  if (p == 2) div = div * div;
  return d * div.inverse();
}

FormalDist structure_identity_sq() {
  FactoredRational g = structure_series(1, 1, +1).compose_scale(Monomial::q_power(-2));
  FactoredRational prod = g * g;
  FormalDist d = expansion_difference_to_deltas(prod);
  QScalar div = (QScalar::q_power(1) - QScalar::q_power(-1)).pow(2);
  return d * div.inverse();
}

std::vector<DeltaTerm> kill_by_polynomial(const std::vector<std::pair<Monomial, int>>& factors) {
  std::vector<DeltaTerm> basis;
  for (auto& [root, mult] : factors)
    for (int p = 0; p < mult; ++p) {
      DeltaTerm d;
      d.support = root;
      d.order = p;
      d.coeff = QScalar::one();
      basis.push_back(d);
    }
  return basis;
}

}  // namespace toroidal
