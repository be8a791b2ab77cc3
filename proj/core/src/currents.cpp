#include "toroidal/currents.hpp"

#include <algorithm>
#include <sstream>

#include "toroidal/hall_params.hpp"

namespace toroidal {

bool is_toroidal(SymKind k) {
  switch (k) {
    case SymKind::XPlus:
    case SymKind::XMinus:
    case SymKind::KPlus:
    case SymKind::KMinus:
    case SymKind::KPlusInv:
    case SymKind::KMinusInv:
      return true;
    default:
      return false;
  }
}

bool is_dqaff(SymKind k) {
  switch (k) {
    case SymKind::DXPlus:
    case SymKind::DXMinus:
    case SymKind::DKPlus:
    case SymKind::DKMinus:
    case SymKind::DKPlusInv:
    case SymKind::DKMinusInv:
    case SymKind::CbarPlus:
    case SymKind::CbarMinus:
    case SymKind::CbarPlusInv:
    case SymKind::CbarMinusInv:
      return true;
    default:
      return false;
  }
}

bool is_hall(SymKind k) {
  switch (k) {
    case SymKind::HPsiPlus:
    case SymKind::HPsiMinus:
    case SymKind::HEPlus:
    case SymKind::HEMinus:
      return true;
    default:
      return false;
  }
}

bool is_k_family(SymKind k) {
  return k == SymKind::KPlus || k == SymKind::KMinus || k == SymKind::KPlusInv ||
         k == SymKind::KMinusInv;
}

bool is_x_family(SymKind k) { return k == SymKind::XPlus || k == SymKind::XMinus; }

bool is_inverse(SymKind k) {
  switch (k) {
    case SymKind::KPlusInv:
    case SymKind::KMinusInv:
    case SymKind::DKPlusInv:
    case SymKind::DKMinusInv:
    case SymKind::CbarPlusInv:
    case SymKind::CbarMinusInv:
      return true;
    default:
      return false;
  }
}

SymKind inverse_kind(SymKind k) {
  switch (k) {
    case SymKind::KPlus: return SymKind::KPlusInv;
    case SymKind::KMinus: return SymKind::KMinusInv;
    case SymKind::KPlusInv: return SymKind::KPlus;
    case SymKind::KMinusInv: return SymKind::KMinus;
    case SymKind::DKPlus: return SymKind::DKPlusInv;
    case SymKind::DKMinus: return SymKind::DKMinusInv;
    case SymKind::DKPlusInv: return SymKind::DKPlus;
    case SymKind::DKMinusInv: return SymKind::DKMinus;
    case SymKind::CbarPlus: return SymKind::CbarPlusInv;
    case SymKind::CbarMinus: return SymKind::CbarMinusInv;
    case SymKind::CbarPlusInv: return SymKind::CbarPlus;
    case SymKind::CbarMinusInv: return SymKind::CbarMinus;
    default: throw std::invalid_argument("symbol has no formal inverse");
  }
}

std::string Sym::str() const {
  std::ostringstream os;
  switch (kind) {
    case SymKind::XPlus: os << "x+[" << idx << "]"; break;
    case SymKind::XMinus: os << "x-[" << idx << "]"; break;
    case SymKind::KPlus: os << "k+[" << idx << "]"; break;
    case SymKind::KMinus: os << "k-[" << idx << "]"; break;
    case SymKind::KPlusInv: os << "inv(k+[" << idx << "])"; break;
    case SymKind::KMinusInv: os << "inv(k-[" << idx << "])"; break;
    case SymKind::DXPlus: os << "X+[1," << idx << "]"; break;
    case SymKind::DXMinus: os << "X-[1," << idx << "]"; break;
    case SymKind::DKPlus: os << "K+[1," << idx << "]"; break;
    case SymKind::DKMinus: os << "K-[1,-" << idx << "]"; break;
    case SymKind::DKPlusInv: os << "inv(K+[1," << idx << "])"; break;
    case SymKind::DKMinusInv: os << "inv(K-[1,-" << idx << "])"; break;
    case SymKind::CbarPlus: os << "cbar+"; break;
    case SymKind::CbarMinus: os << "cbar-"; break;
    case SymKind::CbarPlusInv: os << "inv(cbar+)"; break;
    case SymKind::CbarMinusInv: os << "inv(cbar-)"; break;
    case SymKind::HPsiPlus: os << "psi+"; break;
    case SymKind::HPsiMinus: os << "psi-"; break;
    case SymKind::HEPlus: os << "e+"; break;
    case SymKind::HEMinus: os << "e-"; break;
    case SymKind::Unknown: os << "U" << idx; break;
  }
  return os.str();
}

bool Factor::operator<(const Factor& o) const {
  if (!(sym == o.sym)) return sym < o.sym;
  if (var != o.var) return var < o.var;
  if (vexp != o.vexp) return vexp < o.vexp;
  return scale < o.scale;
}

std::string Factor::str() const {
  std::ostringstream os;
  os << sym.str() << "(";
  if (!scale.is_one()) os << scale.str() << "*";
  os << var_name(var);
  if (vexp != 1) os << "^" << vexp;
  os << ")";
  return os.str();
}

Factor make_factor(SymKind kind, int idx, VarId var, Monomial scale, int vexp) {
  if ((kind == SymKind::DKPlusInv || kind == SymKind::DKMinusInv) && idx != 0)
    throw std::invalid_argument("only zero-level dqaff K currents carry formal inverses");
  Factor f;
  f.sym = {kind, idx};
  f.var = var;
  f.vexp = vexp;
  f.scale = scale;
  return f;
}

std::string CTerm::str() const {
  std::ostringstream os;
  os << "[" << coeff.str() << "]";
  for (auto& f : factors) os << " " << f.str();
  if (dpow) os << " D^" << dpow;
  if (d1pow) os << " D1^" << d1pow;
  return os.str();
}

CurrentExpr CurrentExpr::unit(QScalar c) {
  CurrentExpr e;
  if (!c.is_zero()) {
    CTerm t;
    t.coeff = MultiDist::scalar(std::move(c));
    e.terms_.push_back(std::move(t));
  }
  return e;
}

CurrentExpr CurrentExpr::gen(Factor f, QScalar c) {
  CurrentExpr e;
  CTerm t;
  t.coeff = MultiDist::scalar(std::move(c));
  t.factors.push_back(std::move(f));
  e.terms_.push_back(std::move(t));
  return e;
}

CurrentExpr CurrentExpr::from_term(CTerm t) {
  CurrentExpr e;
  if (!t.coeff.syntactically_zero()) e.terms_.push_back(std::move(t));
  return e;
}

CurrentExpr CurrentExpr::d_power(int k) {
  CTerm t;
  t.dpow = k;
  return from_term(t);
}

CurrentExpr CurrentExpr::d1_power(int k) {
  CTerm t;
  t.d1pow = k;
  return from_term(t);
}

CurrentExpr CurrentExpr::operator+(const CurrentExpr& o) const {
  CurrentExpr r = *this;
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.collect();
  return r;
}

CurrentExpr CurrentExpr::operator-() const {
  CurrentExpr r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

CurrentExpr CurrentExpr::operator-(const CurrentExpr& o) const { return *this + (-o); }

namespace {

int d1_grade(const Sym& s) {
  switch (s.kind) {
    case SymKind::DXPlus:
    case SymKind::DXMinus:
      return s.idx;
    case SymKind::DKPlus:
      return s.idx;
    case SymKind::DKMinus:
      return -s.idx;
    case SymKind::DKPlusInv:
      return -s.idx;
    case SymKind::DKMinusInv:
      return s.idx;
    default:
      return 0;
  }
}

}  // namespace

CurrentExpr CurrentExpr::operator*(const CurrentExpr& o) const {
  CurrentExpr r;
  for (auto& a : terms_)
    for (auto& b : o.terms_) {
      CTerm t;
      t.coeff = a.coeff * b.coeff;
      if (t.coeff.syntactically_zero()) continue;
      t.factors = a.factors;
      for (auto f : b.factors) {
        if (a.dpow != 0) f.scale = f.scale * Monomial::q_power(-a.dpow * f.vexp);
        if (a.d1pow != 0) t.coeff = t.coeff * QScalar::q_power(a.d1pow * d1_grade(f.sym));
        t.factors.push_back(std::move(f));
      }
      t.dpow = a.dpow + b.dpow;
      t.d1pow = a.d1pow + b.d1pow;
      r.terms_.push_back(std::move(t));
    }
  r.collect();
  return r;
}

CurrentExpr CurrentExpr::scaled(const MultiDist& c) const {
  CurrentExpr r = *this;
  for (auto& t : r.terms_) t.coeff = t.coeff * c;
  r.collect();
  return r;
}

CurrentExpr CurrentExpr::scaled(const QScalar& c) const { return scaled(MultiDist::scalar(c)); }

void CurrentExpr::collect() {
  auto word_less = [](const CTerm& x, const CTerm& y) {
    if (x.dpow != y.dpow) return x.dpow < y.dpow;
    if (x.d1pow != y.d1pow) return x.d1pow < y.d1pow;
    if (x.factors.size() != y.factors.size()) return x.factors.size() < y.factors.size();
    for (size_t i = 0; i < x.factors.size(); ++i) {
      if (!(x.factors[i] == y.factors[i])) return x.factors[i] < y.factors[i];
    }
    return false;
  };
  auto word_eq = [](const CTerm& x, const CTerm& y) {
    return x.dpow == y.dpow && x.d1pow == y.d1pow && x.factors == y.factors;
  };
  std::sort(terms_.begin(), terms_.end(), word_less);
  std::vector<CTerm> out;
  for (auto& t : terms_) {
    if (!out.empty() && word_eq(out.back(), t)) out.back().coeff = out.back().coeff + t.coeff;
    else out.push_back(t);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const CTerm& t) { return t.coeff.syntactically_zero(); }),
            out.end());
  terms_ = std::move(out);
}

std::set<VarId> CurrentExpr::vars() const {
  std::set<VarId> s;
  for (auto& t : terms_) {
    auto cs = t.coeff.vars();
    s.insert(cs.begin(), cs.end());
    for (auto& f : t.factors) s.insert(f.var);
  }
  return s;
}

CurrentExpr CurrentExpr::rename_var(VarId from, VarId to) const {
  CurrentExpr r = *this;
  for (auto& t : r.terms_) {
    t.coeff = t.coeff.rename_var(from, to);
    for (auto& f : t.factors)
      if (f.var == from) f.var = to;
  }
  r.collect();
  return r;
}

CurrentExpr CurrentExpr::subst_arg_var(VarId v, const Monomial& scale, VarId target) const {
  CurrentExpr r = *this;
  for (auto& t : r.terms_) {
    t.coeff = t.coeff.subst_var(v, scale, ExpVec::unit(target, 1));
    for (auto& f : t.factors)
      if (f.var == v) {
        f.var = target;
        f.scale = f.scale * scale.pow(f.vexp);
      }
  }
  r.collect();
  return r;
}

CurrentExpr CurrentExpr::gamma_flatten() const {
  CurrentExpr r = *this;
  for (auto& t : r.terms_) {
    t.coeff = t.coeff.gamma_flatten();
    for (auto& f : t.factors) {
      f.scale.g2 = 0;
      f.scale.s1 = f.scale.s2 = 0;
    }
  }
  r.collect();
  return r;
}

std::string CurrentExpr::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (i) os << "\n + ";
    os << terms_[i].str();
  }
  return os.str();
}

CurrentExpr twisted_bracket(const CurrentExpr& a, const CurrentExpr& b, const MultiDist& s,
                            const MultiDist& t) {
  return (a * b).scaled(s) - (b * a).scaled(t);
}

CurrentExpr bracket(const CurrentExpr& a, const CurrentExpr& b) {
  MultiDist one = MultiDist::scalar(QScalar::one());
  return twisted_bracket(a, b, one, one);
}

namespace {

MultiDist g_dirfactor(int i, int j, int sign, const Factor& num, const Factor& den,
                      const Monomial& extra, Direction dir = Direction::At0) {
  DirFactor f;
  f.fr = structure_series(i, j, sign).compose_scale(extra * num.scale * den.scale.inverse());
  f.ratio = num.arg_exp() - den.arg_exp();
  f.dir = dir;
  if (f.ratio.is_zero()) return MultiDist::scalar(f.fr.eval(Monomial::one()));
  return MultiDist::dir_factor(f);
}

MultiDist delta_ratio_md(const Factor& num, const Factor& den, const Monomial& extra) {
  DeltaAtom d;
  d.order = 0;
  d.mu = extra * num.scale * den.scale.inverse();
  d.ratio = num.arg_exp() - den.arg_exp();
  if (d.ratio.is_zero())
    throw std::domain_error("ill-defined exchange: delta with constant argument");
  return MultiDist::delta(d);
}

int kind_sign(SymKind k) {
  switch (k) {
    case SymKind::XPlus:
    case SymKind::KPlus:
    case SymKind::KPlusInv:
    case SymKind::DXPlus:
    case SymKind::DKPlus:
    case SymKind::DKPlusInv:
    case SymKind::CbarPlus:
    case SymKind::CbarPlusInv:
    case SymKind::HPsiPlus:
    case SymKind::HEPlus:
      return +1;
    default:
      return -1;
  }
}

bool is_cbar_kind(SymKind k) {
  return k == SymKind::CbarPlus || k == SymKind::CbarMinus || k == SymKind::CbarPlusInv ||
         k == SymKind::CbarMinusInv;
}

bool is_dk_kind(SymKind k) {
  return k == SymKind::DKPlus || k == SymKind::DKMinus || k == SymKind::DKPlusInv ||
         k == SymKind::DKMinusInv;
}

bool is_dx_kind(SymKind k) { return k == SymKind::DXPlus || k == SymKind::DXMinus; }

bool is_k0(const Factor& f) { return is_dk_kind(f.sym.kind) && f.sym.idx == 0; }

}  // namespace

namespace {
std::optional<std::vector<ExchTerm>> exchange_impl(const Factor& L, const Factor& R);
}

std::optional<std::vector<ExchTerm>> exchange(const Factor& L, const Factor& R) {
  try {
    return exchange_impl(L, R);
  } catch (const std::domain_error&) {
    // same-argument exchanges can hit poles or leave the scalar field; the
    // step is then refused rather than evaluated
    return std::nullopt;
  }
}

namespace {
std::optional<std::vector<ExchTerm>> exchange_impl(const Factor& L, const Factor& R) {
  SymKind lk = L.sym.kind, rk = R.sym.kind;
  auto swapped = [&](MultiDist c) {
    std::vector<ExchTerm> r;
    ExchTerm t;
    t.coeff = std::move(c);
    t.factors = {R, L};
    r.push_back(std::move(t));
    return r;
  };
  MultiDist one = MultiDist::scalar(QScalar::one());

  if (lk == SymKind::Unknown || rk == SymKind::Unknown) return std::nullopt;

  // ----- toroidal -----
  if (is_toroidal(lk) && is_toroidal(rk)) {
    bool lkk = is_k_family(lk), rkk = is_k_family(rk);
    if (lkk && rkk) {
      int ls = kind_sign(lk), rs = kind_sign(rk);
      if (ls == rs) return swapped(one);
      const Factor& km = ls < 0 ? L : R;
      const Factor& kp = ls < 0 ? R : L;
      int i = km.sym.idx, j = kp.sym.idx;
      int flip = 1;
      if (is_inverse(km.sym.kind)) flip = -flip;
      if (is_inverse(kp.sym.kind)) flip = -flip;
      int dirsign = (ls < 0) ? +1 : -1;
      MultiDist g = g_dirfactor(i, j, -1 * dirsign * flip, km, kp, Monomial::gamma_power(-2)) *
                    g_dirfactor(i, j, +1 * dirsign * flip, km, kp, Monomial::gamma_power(2));
      return swapped(std::move(g));
    }
    if (lkk && is_x_family(rk)) {
      int i = L.sym.idx, j = R.sym.idx;
      int xs = kind_sign(rk);
      int flip = is_inverse(lk) ? -1 : 1;
      if (kind_sign(lk) > 0) {
        MultiDist g = g_dirfactor(i, j, xs * flip, R, L, Monomial::gamma_power(-xs));
        return swapped(std::move(g));
      }
      MultiDist g = g_dirfactor(i, j, -xs * flip, L, R, Monomial::gamma_power(-xs));
      return swapped(std::move(g));
    }
    if (is_x_family(lk) && rkk) {
      int i = R.sym.idx, j = L.sym.idx;
      int xs = kind_sign(lk);
      int flip = is_inverse(rk) ? -1 : 1;
      if (kind_sign(rk) > 0) {
        MultiDist g = g_dirfactor(i, j, -xs * flip, L, R, Monomial::gamma_power(-xs));
        return swapped(std::move(g));
      }
      MultiDist g = g_dirfactor(i, j, xs * flip, R, L, Monomial::gamma_power(-xs));
      return swapped(std::move(g));
    }
    if (is_x_family(lk) && is_x_family(rk)) {
      int ls = kind_sign(lk), rs = kind_sign(rk);
      if (ls == rs) return std::nullopt;
      const Factor& xp = ls > 0 ? L : R;
      const Factor& xm = ls > 0 ? R : L;
      int i = xp.sym.idx, j = xm.sym.idx;
      std::vector<ExchTerm> out;
      {
        ExchTerm t;
        t.coeff = one;
        t.factors = {R, L};
        out.push_back(std::move(t));
      }
      if (i == j) {
        QScalar pref = (QScalar::q_power(1) - QScalar::q_power(-1)).inverse();
        if (ls < 0) pref = -pref;
        {
          ExchTerm t;
          t.coeff = delta_ratio_md(xp, xm, Monomial::gamma_power(-2)) * pref;
          Factor k = xp;
          k.sym.kind = SymKind::KPlus;
          k.scale = k.scale * Monomial::gamma_power(-1);
          t.factors = {k};
          out.push_back(std::move(t));
        }
        {
          ExchTerm t;
          t.coeff = delta_ratio_md(xp, xm, Monomial::gamma_power(2)) * (-pref);
          Factor k = xm;
          k.sym.kind = SymKind::KMinus;
          k.scale = k.scale * Monomial::gamma_power(-1);
          t.factors = {k};
          out.push_back(std::move(t));
        }
      }
      return out;
    }
    return std::nullopt;
  }

  // ----- double affinization -----
  if (is_dqaff(lk) && is_dqaff(rk)) {
    if (is_cbar_kind(lk) || is_cbar_kind(rk)) return swapped(one);
    bool l0 = is_k0(L), r0 = is_k0(R);
    if (l0 && r0) {
      int ls = kind_sign(lk), rs = kind_sign(rk);
      if (ls == rs) return swapped(one);
      const Factor& kp = ls > 0 ? L : R;
      const Factor& km = ls > 0 ? R : L;
      int flip = 1;
      if (is_inverse(kp.sym.kind)) flip = -flip;
      if (is_inverse(km.sym.kind)) flip = -flip;
      // K+_{1,0}(v) K-_{1,0}(w) = G11+(Cv/w) G11-(C^-1 v/w) K- K+; moving the minus
      // current left inverts the pair. Direction follows the K+ one-sided modes.
      int orient = (ls > 0) ? +1 : -1;
      MultiDist g =
          g_dirfactor(1, 1, +1 * orient * flip, kp, km, Monomial::gamma_power(2), Direction::At0) *
          g_dirfactor(1, 1, -1 * orient * flip, kp, km, Monomial::gamma_power(-2), Direction::At0);
      return swapped(std::move(g));
    }
    if (l0 || r0) {
      const Factor& k0 = l0 ? L : R;
      const Factor& other = l0 ? R : L;
      if (other.sym.kind == SymKind::Unknown) return std::nullopt;
      int ks = kind_sign(k0.sym.kind);
      int flip = is_inverse(k0.sym.kind) ? -1 : 1;
      if (!l0) flip = -flip;
      Direction dir = ks > 0 ? Direction::At0 : Direction::AtInf;
      if (is_dx_kind(other.sym.kind)) {
        int xs = kind_sign(other.sym.kind);
        if (xs == ks) {
          MultiDist g = g_dirfactor(1, 1, -ks * flip, k0, other, Monomial::one(), dir);
          return swapped(std::move(g));
        }
        MultiDist g =
            g_dirfactor(1, 1, ks * flip, k0, other, Monomial::gamma_power(2 * ks), dir);
        return swapped(std::move(g));
      }
      if (is_dk_kind(other.sym.kind) && other.sym.idx == 1) {
        int os = kind_sign(other.sym.kind);
        if (os == ks) {
          MultiDist g = g_dirfactor(1, 1, -ks * flip, k0, other, Monomial::one(), dir) *
                        g_dirfactor(1, 1, ks * flip, k0, other, Monomial::q_power(2), dir);
          return swapped(std::move(g));
        }
        MultiDist g = g_dirfactor(1, 1, os * flip, k0, other, Monomial::gamma_power(2), dir) *
                      g_dirfactor(1, 1, -os * flip, k0, other,
                                  Monomial::gamma_power(-2) * Monomial::q_power(2), dir);
        return swapped(std::move(g));
      }
      return std::nullopt;
    }
    if (is_dx_kind(lk) && is_dx_kind(rk) && kind_sign(lk) != kind_sign(rk)) {
      const Factor& Xp = kind_sign(lk) > 0 ? L : R;
      const Factor& Xm = kind_sign(lk) > 0 ? R : L;
      int r = Xp.sym.idx, s = Xm.sym.idx;
      std::vector<ExchTerm> out;
      {
        ExchTerm t;
        t.coeff = one;
        t.factors = {R, L};
        out.push_back(std::move(t));
      }
      QScalar pref = (QScalar::q_power(1) - QScalar::q_power(-1)).inverse();
      if (kind_sign(lk) < 0) pref = -pref;
      if (r + s >= 0) {
        ExchTerm t;
        t.coeff =
            delta_ratio_md(Xp, Xm, Monomial::gamma_power(2) * Monomial::q_power(-2 * (r + s))) *
            pref;
        int ssgn = s > 0 ? 1 : (s < 0 ? -1 : 0);
        for (int p = 1; p <= std::abs(s); ++p) {
          Factor c = Xm;
          c.sym = {ssgn > 0 ? SymKind::CbarMinusInv : SymKind::CbarMinus, 0};
          c.scale = c.scale * Monomial::gamma_power(-1) * Monomial::q_power((2 * p - 1) * ssgn - 1);
          t.factors.push_back(c);
        }
        Factor K = Xp;
        K.sym = {SymKind::DKPlus, r + s};
        t.factors.push_back(K);
        out.push_back(std::move(t));
      }
      if (r + s <= 0) {
        ExchTerm t;
        t.coeff =
            delta_ratio_md(Xp, Xm, Monomial::gamma_power(-2) * Monomial::q_power(-2 * (r + s))) *
            (-pref);
        int rsgn = r > 0 ? 1 : (r < 0 ? -1 : 0);
        for (int p = 1; p <= std::abs(r); ++p) {
          Factor c = Xp;
          c.sym = {rsgn > 0 ? SymKind::CbarPlus : SymKind::CbarPlusInv, 0};
          c.scale = c.scale * Monomial::gamma_power(-1) * Monomial::q_power((1 - 2 * p) * rsgn - 1);
          t.factors.push_back(c);
        }
        Factor K = Xm;
        K.sym = {SymKind::DKMinus, -(r + s)};
        t.factors.push_back(K);
        out.push_back(std::move(t));
      }
      return out;
    }
    return std::nullopt;
  }

  // ----- elliptic Hall -----
  if (is_hall(lk) && is_hall(rk)) {
    bool lpsi = lk == SymKind::HPsiPlus || lk == SymKind::HPsiMinus;
    bool rpsi = rk == SymKind::HPsiPlus || rk == SymKind::HPsiMinus;
    if (lpsi && rpsi && lk == rk) return swapped(one);
    if ((lk == SymKind::HEPlus && rk == SymKind::HEMinus) ||
        (lk == SymKind::HEMinus && rk == SymKind::HEPlus)) {
      const Factor& ep = lk == SymKind::HEPlus ? L : R;
      const Factor& em = lk == SymKind::HEPlus ? R : L;
      std::vector<ExchTerm> out;
      {
        ExchTerm t;
        t.coeff = one;
        t.factors = {R, L};
        out.push_back(std::move(t));
      }
      QScalar pref = hall_g11().inverse();
      if (lk == SymKind::HEMinus) pref = -pref;
      {
        // delta(Cw/z) psi+(w), z the e+ variable, w the e- variable
        ExchTerm t;
        t.coeff = delta_ratio_md(em, ep, Monomial::gamma_power(2)) * pref;
        Factor psi = em;
        psi.sym = {SymKind::HPsiPlus, 0};
        t.factors = {psi};
        out.push_back(std::move(t));
      }
      {
        ExchTerm t;
        t.coeff = delta_ratio_md(em, ep, Monomial::gamma_power(-2)) * (-pref);
        Factor psi = ep;
        psi.sym = {SymKind::HPsiMinus, 0};
        t.factors = {psi};
        out.push_back(std::move(t));
      }
      return out;
    }
    return std::nullopt;
  }

  return std::nullopt;
}
}  // namespace

namespace {

// normalized binomial (c1*w1 - c2*w2) = pref * (z^A - mu z^B)
struct NormLin {
  LinFactor lin;
  Monomial pref;
};

NormLin norm_lin(const Factor& f1, const Monomial& c1, const Factor& f2, const Monomial& c2) {
  NormLin r;
  r.pref = c1 * f1.scale;
  r.lin.a = f1.arg_exp();
  r.lin.b = f2.arg_exp();
  r.lin.mu = (c2 * f2.scale) * r.pref.inverse();
  return r;
}

}  // namespace

std::optional<ClearedExchange> cleared_exchange(const Factor& L, const Factor& R) {
  SymKind lk = L.sym.kind, rk = R.sym.kind;
  Monomial one = Monomial::one();
  auto qm = [](int k) { return Monomial::q_power(k); };

  // A relation  sgn_l * prod_i (a_i Larg - b_i Rarg) * L R
  //           = sgn_r * prod_j (c_j Larg - d_j Rarg) * R L
  // normalized so both sign products agree (checked per case below).
  auto assemble = [&](std::vector<std::pair<Monomial, Monomial>> lhs,
                      std::vector<std::pair<Monomial, Monomial>> rhs) -> ClearedExchange {
    ClearedExchange ce;
    Monomial lpref = Monomial::one(), rpref = Monomial::one();
    for (auto& [c1, c2] : lhs) {
      NormLin nl = norm_lin(L, c1, R, c2);
      lpref = lpref * nl.pref;
      ce.clearing.push_back(nl.lin);
    }
    MultiDist coeff = MultiDist::scalar(QScalar::one());
    for (auto& [c1, c2] : rhs) {
      NormLin nl = norm_lin(L, c1, R, c2);
      rpref = rpref * nl.pref;
      coeff = coeff * MultiDist::lin_factor(nl.lin);
    }
    ce.rhs_coeff = coeff * (rpref * lpref.inverse()).to_qscalar();
    return ce;
  };

  if (is_x_family(lk) && is_x_family(rk) && kind_sign(lk) == kind_sign(rk)) {
    // (z1 - q^{sc} z2) x_i(z1) x_j(z2) = (z1 q^{sc} - z2) x_j(z2) x_i(z1)
    int c = CartanData::c(L.sym.idx, R.sym.idx) * kind_sign(lk);
    return assemble({{one, qm(c)}}, {{qm(c), one}});
  }
  if (is_dx_kind(lk) && is_dx_kind(rk) && kind_sign(lk) == kind_sign(rk)) {
    int c = 2 * kind_sign(lk);
    return assemble({{one, qm(c)}}, {{qm(c), one}});
  }
  if (is_dk_kind(lk) && is_dk_kind(rk) && !is_inverse(lk) && !is_inverse(rk)) {
    int ls = kind_sign(lk), rs = kind_sign(rk);
    int m = L.sym.idx, n = R.sym.idx;
    Monomial C = Monomial::gamma_power(2);
    if (ls == rs) {
      // (v-q^{s2}z)(v-q^{2(m-n-s)}z) K_m(v) K_n(z) = (vq^{s2}-z)(vq^{-s2}-q^{2(m-n)}z) K_n K_m
      int s = ls;
      return assemble({{one, qm(2 * s)}, {one, qm(2 * (m - n - s))}},
                      {{qm(2 * s), one}, {qm(-2 * s), qm(2 * (m - n))}});
    }
    if (ls > 0) {
      // (C q^{2(1-m)} v - w)(q^{2(n-1)} v - C w) K+_m(v) K-_{-n}(w)
      //   = (C q^{-2m} v - q^2 w)(q^{2n} v - C q^{-2} w) K-_{-n}(w) K+_m(v)
      return assemble({{C * qm(2 * (1 - m)), one}, {qm(2 * (n - 1)), C}},
                      {{C * qm(-2 * m), qm(2)}, {qm(2 * n), C * qm(-2)}});
    }
    // L = K-_{-n}(w), R = K+_m(v): read the same relation backwards; normalizing each
    // factor to (c1 Larg - c2 Rarg) flips two signs on each side, which cancel.
    int mm = R.sym.idx, nn = L.sym.idx;
    return assemble({{qm(2), C * qm(-2 * mm)}, {C * qm(-2), qm(2 * nn)}},
                    {{one, C * qm(2 * (1 - mm))}, {C, qm(2 * (nn - 1))}});
  }
  if (is_dk_kind(lk) && is_dx_kind(rk) && !is_inverse(lk)) {
    int ks = kind_sign(lk), xs = kind_sign(rk);
    int m = L.sym.idx;
    Monomial C = Monomial::gamma_power(2);
    if (ks == xs) {
      // (v - q^{2ks} z) K_m(v) X(z) = (q^{2ks} v - z) X(z) K_m(v)
      return assemble({{one, qm(2 * ks)}}, {{qm(2 * ks), one}});
    }
    // (C v - q^{2(m-ks)} z) K±_m(v) X∓(z) = (C q^{-2ks} v - q^{2m} z) X∓(z) K±_m(v)
    return assemble({{C, qm(2 * (m - ks))}}, {{C * qm(-2 * ks), qm(2 * m)}});
  }
  if (is_dx_kind(lk) && is_dk_kind(rk) && !is_inverse(rk)) {
    int ks = kind_sign(rk), xs = kind_sign(lk);
    int m = R.sym.idx;
    Monomial C = Monomial::gamma_power(2);
    if (ks == xs) {
      // backwards reading: (z - q^{2ks} v) X(z) K_m(v) = (q^{2ks} z - v) K_m(v) X(z)
      return assemble({{one, qm(2 * ks)}}, {{qm(2 * ks), one}});
    }
    // backwards: (q^{2m} z - C q^{-2ks} v) X∓ K± = (q^{2(m-ks)} z - C v) K± X∓
    return assemble({{qm(2 * m), C * qm(-2 * ks)}}, {{qm(2 * (m - ks)), C}});
  }

  // Hall pairs: relations built from the cubic g(z, w) = (z-q1 w)(z-q2 w)(z-q3 w).
  if (is_hall(lk) && is_hall(rk)) {
    const HallParams& hp = ambient_hall_params();
    auto gfacsLR = [&](const Monomial& a, const Monomial& b) {
      // g(a*Larg, b*Rarg) = prod_i (a Larg - qi b Rarg): pairs (a, qi b), sign +1
      std::vector<std::pair<Monomial, Monomial>> v = {
          {a, hp.q1 * b}, {a, hp.q2 * b}, {a, hp.q3 * b}};
      return v;
    };
    auto gfacsRL = [&](const Monomial& a, const Monomial& b) {
      // g(a*Rarg, b*Larg) = prod_i (a Rarg - qi b Larg) = (-1)^3 prod_i (qi b Larg - a Rarg):
      // pairs (qi b, a), sign -1
      std::vector<std::pair<Monomial, Monomial>> v = {
          {hp.q1 * b, a}, {hp.q2 * b, a}, {hp.q3 * b, a}};
      return v;
    };
    auto cat = [](std::vector<std::pair<Monomial, Monomial>> a,
                  const std::vector<std::pair<Monomial, Monomial>>& b) {
      a.insert(a.end(), b.begin(), b.end());
      return a;
    };
    Monomial C = Monomial::gamma_power(2);
    bool lpsi = lk == SymKind::HPsiPlus || lk == SymKind::HPsiMinus;
    bool rpsi = rk == SymKind::HPsiPlus || rk == SymKind::HPsiMinus;
    auto with_sign = [&](std::vector<std::pair<Monomial, Monomial>> lhs,
                         std::vector<std::pair<Monomial, Monomial>> rhs,
                         int sign) -> ClearedExchange {
      ClearedExchange ce = assemble(std::move(lhs), std::move(rhs));
      if (sign < 0) ce.rhs_coeff = -ce.rhs_coeff;
      return ce;
    };
    if (lpsi && rpsi && lk != rk) {
      // g(Cz,w) g(Cw,z) psi+(z) psi-(w) = g(z,Cw) g(w,Cz) psi-(w) psi+(z)
      if (lk == SymKind::HPsiPlus) {
        // lhs: g(C L, R) [+] and g(C R, L) [-]; rhs: g(L, C R) [+] and g(R, C L) [-]
        auto lhs = cat(gfacsLR(C, one), gfacsRL(C, one));
        auto rhs = cat(gfacsLR(one, C), gfacsRL(one, C));
        return with_sign(lhs, rhs, +1);  // one (-1) on each side cancels
      }
      // L = psi-, R = psi+: relation with roles reversed:
      // g(C R, L) g(C L, R) psi+(R) psi-(L) = g(R, C L) g(L, C R) psi-(L) psi+(R)
      auto lhs = cat(gfacsRL(one, C), gfacsLR(one, C));
      auto rhs = cat(gfacsRL(C, one), gfacsLR(C, one));
      return with_sign(lhs, rhs, +1);
    }
    if (lpsi && (rk == SymKind::HEPlus || rk == SymKind::HEMinus)) {
      bool psi_plus = lk == SymKind::HPsiPlus;
      if (rk == SymKind::HEPlus) {
        // g(s z, w) psi(z) e+(w) = -g(w, s z) e+(w) psi(z); s = C^{(1±1)/2}
        Monomial s = psi_plus ? C : one;
        // lhs sign +1; rhs: explicit (-1) times gRL sign (-1): net +1
        return with_sign(gfacsLR(s, one), gfacsRL(one, s), +1);
      }
      // g(w, s z) psi(z) e-(w) = -g(s z, w) e-(w) psi(z); s = C^{(1∓1)/2}
      Monomial s = psi_plus ? one : C;
      // lhs: gRL sign (-1); rhs: explicit (-1) * gLR(+1): net: signs cancel
      return with_sign(gfacsRL(one, s), gfacsLR(s, one), +1);
    }
    if ((lk == SymKind::HEPlus || lk == SymKind::HEMinus) && rpsi) {
      bool psi_plus = rk == SymKind::HPsiPlus;
      if (lk == SymKind::HEPlus) {
        // backwards reading of eq:psie+ with psi var = Rarg, e var = Larg:
        // -g(L, s R) e+(L) psi(R) = g(s R, L) psi(R) e+(L)
        Monomial s = psi_plus ? C : one;
        // normalize: lhs: (-1)*gLR(one, s) [sign -1]; rhs: gRL(s, one) [sign -1]: cancel
        return with_sign(gfacsLR(one, s), gfacsRL(s, one), +1);
      }
      Monomial s = psi_plus ? one : C;
      // -g(s R, L) e-(L) psi(R) = g(L, s R) psi(R) e-(L)
      return with_sign(gfacsRL(s, one), gfacsLR(one, s), +1);
    }
    if (lk == rk && (lk == SymKind::HEPlus || lk == SymKind::HEMinus)) {
      if (lk == SymKind::HEPlus) {
        // g(z,w) e+(z) e+(w) = -g(w,z) e+(w) e+(z): rhs sign: (-1)*(-1) = +1
        return with_sign(gfacsLR(one, one), gfacsRL(one, one), +1);
      }
      // g(w,z) e-(z) e-(w) = -g(z,w) e-(w) e-(z): lhs sign -1, rhs -1: cancel
      return with_sign(gfacsRL(one, one), gfacsLR(one, one), +1);
    }
    return std::nullopt;
  }

  return std::nullopt;
}

namespace {

int sort_rank(const Sym& s) {
  switch (s.kind) {
    case SymKind::KMinus:
    case SymKind::KMinusInv:
      return 0;
    case SymKind::XMinus:
      return 1;
    case SymKind::XPlus:
      return 2;
    case SymKind::KPlus:
    case SymKind::KPlusInv:
      return 3;
    case SymKind::CbarPlus:
    case SymKind::CbarMinus:
    case SymKind::CbarPlusInv:
    case SymKind::CbarMinusInv:
      return 0;
    case SymKind::DKMinus:
    case SymKind::DKMinusInv:
      return s.idx == 0 ? 1 : 3;
    case SymKind::DXMinus:
      return 2;
    case SymKind::DKPlus:
    case SymKind::DKPlusInv:
      return s.idx == 0 ? 5 : 3;
    case SymKind::DXPlus:
      return 4;
    case SymKind::HPsiPlus:
    case SymKind::HPsiMinus:
      return 0;
    case SymKind::HEMinus:
      return 1;
    case SymKind::HEPlus:
      return 2;
    case SymKind::Unknown:
      return 2;
  }
  return 2;
}

// commuting families sortable internally by the factor order
bool commuting_pair(const Factor& a, const Factor& b) {
  SymKind ak = a.sym.kind, bk = b.sym.kind;
  if (is_k_family(ak) && is_k_family(bk) && kind_sign(ak) == kind_sign(bk)) return true;
  if (is_cbar_kind(ak) && is_cbar_kind(bk)) return true;
  if (is_k0(a) && is_k0(b) && kind_sign(ak) == kind_sign(bk)) return true;
  if ((ak == SymKind::HPsiPlus || ak == SymKind::HPsiMinus) && ak == bk) return true;
  return false;
}

// order within a commuting family, keeping formal inverse pairs adjacent
bool family_less(const Factor& a, const Factor& b) {
  if (a.sym.idx != b.sym.idx) return a.sym.idx < b.sym.idx;
  if (a.var != b.var) return a.var < b.var;
  if (a.vexp != b.vexp) return a.vexp < b.vexp;
  if (!(a.scale == b.scale)) return a.scale < b.scale;
  return is_inverse(a.sym.kind) < is_inverse(b.sym.kind);
}

bool cancel_pair(const Factor& a, const Factor& b) {
  SymKind ak = a.sym.kind;
  switch (ak) {
    case SymKind::KPlus:
    case SymKind::KMinus:
    case SymKind::KPlusInv:
    case SymKind::KMinusInv:
    case SymKind::DKPlus:
    case SymKind::DKMinus:
    case SymKind::DKPlusInv:
    case SymKind::DKMinusInv:
    case SymKind::CbarPlus:
    case SymKind::CbarMinus:
    case SymKind::CbarPlusInv:
    case SymKind::CbarMinusInv:
      break;
    default:
      return false;
  }
  if (ak == SymKind::DKPlus || ak == SymKind::DKMinus) {
    if (a.sym.idx != 0) return false;
  }
  if (!(b.sym.kind == inverse_kind(ak)) || a.sym.idx != b.sym.idx) return false;
  return a.var == b.var && a.vexp == b.vexp && a.scale == b.scale;
}

}  // namespace

CurrentExpr reorder_at(const CTerm& term, size_t pos) {
  if (pos + 1 >= term.factors.size()) throw std::invalid_argument("reorder position out of range");
  auto ex = exchange(term.factors[pos], term.factors[pos + 1]);
  if (!ex) throw std::domain_error("exchange refused at this position (cleared-only relation?)");
  CurrentExpr out;
  for (auto& et : *ex) {
    CTerm t;
    t.coeff = term.coeff * et.coeff;
    t.factors.assign(term.factors.begin(), term.factors.begin() + long(pos));
    t.factors.insert(t.factors.end(), et.factors.begin(), et.factors.end());
    t.factors.insert(t.factors.end(), term.factors.begin() + long(pos) + 2, term.factors.end());
    t.dpow = term.dpow;
    t.d1pow = term.d1pow;
    out.terms().push_back(std::move(t));
  }
  out.collect();
  return out;
}

CurrentExpr cleared_reorder_at(const CTerm& term, size_t pos) {
  if (pos + 1 >= term.factors.size()) throw std::invalid_argument("reorder position out of range");
  auto ce = cleared_exchange(term.factors[pos], term.factors[pos + 1]);
  if (!ce) throw std::domain_error("no cleared relation for this factor pair");
  MultiDist coeff = term.coeff;
  for (auto& lin : ce->clearing)
    if (!divide_by_lin(coeff, lin))
      throw std::domain_error("cleared exchange refused: clearing factor " + lin.str() +
                              " not present in the coefficient");
  CTerm t;
  t.coeff = coeff * ce->rhs_coeff;
  t.factors.assign(term.factors.begin(), term.factors.begin() + long(pos));
  t.factors.push_back(term.factors[pos + 1]);
  t.factors.push_back(term.factors[pos]);
  t.factors.insert(t.factors.end(), term.factors.begin() + long(pos) + 2, term.factors.end());
  t.dpow = term.dpow;
  t.d1pow = term.d1pow;
  return CurrentExpr::from_term(std::move(t));
}

CurrentExpr reduce(const CurrentExpr& e, const ReduceOptions& opts) {
  std::vector<CTerm> work(e.terms().begin(), e.terms().end());
  std::vector<CTerm> done;
  long guard = 0;
  const long guard_max = 200000;
  while (!work.empty()) {
    if (++guard > guard_max) throw std::runtime_error("reduce: iteration guard tripped");
    CTerm t = std::move(work.back());
    work.pop_back();

    // pin factor arguments through order-0 delta supports of the coefficient
    if (opts.pin_args) {
      bool pinned = false;
      for (auto& dt : t.coeff.terms()) {
        if (pinned) break;
        for (auto& d : dt.deltas) {
          if (pinned) break;
          if (d.order != 0 || d.ratio.e.size() != 2) continue;
          VarId v1 = d.ratio.e[0].first, v2 = d.ratio.e[1].first;
          int k1 = d.ratio.e[0].second, k2 = d.ratio.e[1].second;
          if ((k1 != 1 && k1 != -1) || (k2 != 1 && k2 != -1)) continue;
          // only ever pin the larger-id variable to the smaller one (terminates)
          for (VarId v : {std::max(v1, v2)}) {
            bool in_factors = false;
            for (auto& f : t.factors) in_factors |= (f.var == v);
            if (!in_factors) continue;
            VarId tgt = v == v1 ? v2 : v1;
            int kv = d.ratio.get(v), kt = d.ratio.get(tgt);
            if (kv * kt != -1) continue;  // need z_v = scale * z_tgt
            Monomial scale = kv == 1 ? d.mu.inverse() : d.mu;
            DeltaAtom keep = d;
            // the substitution is valid when every coefficient term carries the atom
            MultiDist stripped = MultiDist::zero();
            bool all_have = true;
            for (auto dt2 : t.coeff.terms()) {
              bool removed = false;
              for (size_t di = 0; di < dt2.deltas.size(); ++di)
                if (dt2.deltas[di] == keep) {
                  dt2.deltas.erase(dt2.deltas.begin() + long(di));
                  removed = true;
                  break;
                }
              if (!removed) {
                all_have = false;
                break;
              }
              stripped.terms().push_back(std::move(dt2));
            }
            if (!all_have) continue;
            CTerm t2 = t;
            t2.coeff = stripped;
            CurrentExpr sub = CurrentExpr::from_term(t2).subst_arg_var(v, scale, tgt);
            for (auto& st : sub.terms()) {
              CTerm t3 = st;
              t3.coeff = t3.coeff * MultiDist::delta(keep);
              work.push_back(std::move(t3));
            }
            pinned = true;
            break;
          }
        }
      }
      if (pinned) continue;
    }

    // cancel adjacent formal inverses
    bool changed = false;
    for (size_t i = 0; i + 1 < t.factors.size(); ++i) {
      if (cancel_pair(t.factors[i], t.factors[i + 1])) {
        t.factors.erase(t.factors.begin() + long(i), t.factors.begin() + long(i) + 2);
        changed = true;
        break;
      }
    }
    if (changed) {
      work.push_back(std::move(t));
      continue;
    }

    if (opts.sort_factors) {
      if (opts.use_cleared) t.coeff = t.coeff.rats_merged().lins_cancelled();
      bool acted = false;
      for (size_t i = 0; i + 1 < t.factors.size() && !acted; ++i) {
        const Factor& A = t.factors[i];
        const Factor& B = t.factors[i + 1];
        bool need = false;
        if (sort_rank(A.sym) > sort_rank(B.sym)) need = true;
        else if (sort_rank(A.sym) == sort_rank(B.sym) && commuting_pair(A, B) &&
                 family_less(B, A))
          need = true;
        else if (opts.use_cleared && sort_rank(A.sym) == sort_rank(B.sym) && B < A &&
                 cleared_exchange(A, B).has_value())
          need = true;
        if (!need) continue;
        auto ex = exchange(A, B);
        if (ex) {
          CurrentExpr repl = reorder_at(t, i);
          for (auto& rt : repl.terms()) work.push_back(rt);
          acted = true;
          continue;
        }
        if (!opts.use_cleared) continue;
        auto ce = cleared_exchange(A, B);
        if (!ce) continue;
        MultiDist coeff = t.coeff;
        bool ok = true;
        for (auto& lin : ce->clearing)
          if (!divide_by_lin(coeff, lin)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        CTerm t2 = t;
        t2.coeff = coeff * ce->rhs_coeff;
        std::swap(t2.factors[i], t2.factors[i + 1]);
        work.push_back(std::move(t2));
        acted = true;
      }
      if (acted) continue;
    }
    done.push_back(std::move(t));
  }
  CurrentExpr out;
  out.terms() = std::move(done);
  out.collect();
  return out;
}

CurrentExpr residue_in(const CurrentExpr& e, VarId v) {
  CurrentExpr red = reduce(e);
  CurrentExpr out;
  for (auto& t : red.terms()) {
    for (auto& f : t.factors)
      if (f.var == v)
        throw std::domain_error("residue variable still bound to a current factor");
    CTerm nt = t;
    nt.coeff = t.coeff.residue_var(v);
    if (!nt.coeff.syntactically_zero()) out.terms().push_back(std::move(nt));
  }
  out.collect();
  return out;
}

std::pair<int, int> root_grading(const CTerm& t) {
  int a0 = 0, a1 = 0;
  for (auto& f : t.factors) {
    switch (f.sym.kind) {
      case SymKind::XPlus: (f.sym.idx == 0 ? a0 : a1) += 1; break;
      case SymKind::XMinus: (f.sym.idx == 0 ? a0 : a1) -= 1; break;
      case SymKind::DXPlus: a1 += 1; break;
      case SymKind::DXMinus: a1 -= 1; break;
      case SymKind::HEPlus: a1 += 1; break;
      case SymKind::HEMinus: a1 -= 1; break;
      default: break;
    }
  }
  return {a0, a1};
}

WindowReport is_zero_within(const CurrentExpr& e, int window, const ReduceOptions& opts) {
  CurrentExpr red = reduce(e, opts);
  WindowReport rep;
  for (auto& t : red.terms()) {
    Box box = t.coeff.default_box(window);
    if (!t.coeff.is_zero_on(box)) {
      rep.zero = false;
      rep.residuals.push_back(t.str());
    }
  }
  return rep;
}

}  // namespace toroidal
