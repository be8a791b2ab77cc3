#include "toroidal/multidist.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace toroidal {

namespace {
std::vector<std::string>& names() {
  static std::vector<std::string> n;
  return n;
}
std::unordered_map<std::string, VarId>& name_index() {
  static std::unordered_map<std::string, VarId> m;
  return m;
}
std::mutex& var_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

VarId var_id(const std::string& name) {
  std::lock_guard<std::mutex> lock(var_mutex());
  auto it = name_index().find(name);
  if (it != name_index().end()) return it->second;
  VarId v = VarId(names().size());
  names().push_back(name);
  name_index().emplace(name, v);
  return v;
}

const std::string& var_name(VarId v) {
  std::lock_guard<std::mutex> lock(var_mutex());
  return names().at(size_t(v));
}

VarId gamma_slot() {
  static VarId v = var_id("@gamma");
  return v;
}

VarId fresh_var(const std::string& stem) {
  std::lock_guard<std::mutex> lock(var_mutex());
  static int counter = 0;
  std::string nm;
  do {
    nm = stem + "#" + std::to_string(counter++);
  } while (name_index().count(nm));
  VarId v = VarId(names().size());
  names().push_back(nm);
  name_index().emplace(nm, v);
  return v;
}

ExpVec ExpVec::unit(VarId v, int k) {
  ExpVec r;
  if (k != 0) r.e.push_back({v, k});
  return r;
}

int ExpVec::get(VarId v) const {
  for (auto& [w, k] : e)
    if (w == v) return k;
  return 0;
}

void ExpVec::set(VarId v, int k) {
  for (auto it = e.begin(); it != e.end(); ++it) {
    if (it->first == v) {
      if (k == 0) e.erase(it);
      else it->second = k;
      return;
    }
    if (it->first > v) {
      if (k != 0) e.insert(it, {v, k});
      return;
    }
  }
  if (k != 0) e.push_back({v, k});
}

ExpVec ExpVec::operator+(const ExpVec& o) const {
  ExpVec r;
  size_t i = 0, j = 0;
  while (i < e.size() || j < o.e.size()) {
    if (j == o.e.size() || (i < e.size() && e[i].first < o.e[j].first)) r.e.push_back(e[i++]);
    else if (i == e.size() || o.e[j].first < e[i].first) r.e.push_back(o.e[j++]);
    else {
      int k = e[i].second + o.e[j].second;
      if (k != 0) r.e.push_back({e[i].first, k});
      ++i;
      ++j;
    }
  }
  return r;
}

ExpVec ExpVec::operator-() const {
  ExpVec r = *this;
  for (auto& [v, k] : r.e) k = -k;
  return r;
}

ExpVec ExpVec::operator-(const ExpVec& o) const { return *this + (-o); }

ExpVec ExpVec::operator*(int k) const {
  ExpVec r;
  if (k == 0) return r;
  r = *this;
  for (auto& [v, c] : r.e) c *= k;
  return r;
}

std::string ExpVec::str() const {
  if (e.empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (auto& [v, k] : e) {
    if (!first) os << "*";
    first = false;
    os << var_name(v);
    if (k != 1) os << "^" << k;
  }
  return os.str();
}

bool DeltaAtom::operator<(const DeltaAtom& o) const {
  if (order != o.order) return order < o.order;
  if (!(ratio == o.ratio)) return ratio < o.ratio;
  return mu < o.mu;
}

std::string DeltaAtom::str() const {
  std::ostringstream os;
  os << "delta";
  if (order) os << "^(" << order << ")";
  os << "(";
  if (!mu.is_one()) os << mu.str() << "*";
  os << ratio.str() << ")";
  return os.str();
}

bool DirFactor::operator<(const DirFactor& o) const {
  if (dir != o.dir) return dir < o.dir;
  if (!(ratio == o.ratio)) return ratio < o.ratio;
  return fr < o.fr;
}

std::string DirFactor::str() const {
  std::ostringstream os;
  os << "[" << fr.str() << " ; u=" << ratio.str() << "]_" << (dir == Direction::At0 ? "0" : "inf");
  return os.str();
}

bool LinFactor::operator<(const LinFactor& o) const {
  if (!(a == o.a)) return a < o.a;
  if (!(b == o.b)) return b < o.b;
  return mu < o.mu;
}

std::string LinFactor::str() const {
  std::ostringstream os;
  os << "(" << a.str() << " - " << mu.str() << "*" << b.str() << ")";
  return os.str();
}

void DTerm::sort_factors() {
  std::sort(deltas.begin(), deltas.end());
  std::sort(rats.begin(), rats.end());
  std::sort(lins.begin(), lins.end());
}

bool DTerm::same_shape(const DTerm& o) const {
  return mono == o.mono && deltas == o.deltas && rats == o.rats && lins == o.lins;
}

bool DTerm::shape_less(const DTerm& o) const {
  if (!(mono == o.mono)) return mono < o.mono;
  if (!(deltas == o.deltas)) return deltas < o.deltas;
  if (!(lins == o.lins)) return lins < o.lins;
  return rats < o.rats;
}

std::string DTerm::str() const {
  std::ostringstream os;
  os << "(" << coeff.str() << ")";
  if (!mono.is_zero()) os << "*" << mono.str();
  for (auto& l : lins) os << "*" << l.str();
  for (auto& d : deltas) os << "*" << d.str();
  for (auto& r : rats) os << "*" << r.str();
  return os.str();
}

MultiDist MultiDist::scalar(QScalar c) {
  MultiDist d;
  if (!c.is_zero()) {
    DTerm t;
    t.coeff = std::move(c);
    d.terms_.push_back(std::move(t));
  }
  return d;
}

MultiDist MultiDist::monomial(ExpVec mono, QScalar c) {
  MultiDist d;
  if (!c.is_zero()) {
    DTerm t;
    t.coeff = std::move(c);
    t.mono = std::move(mono);
    d.terms_.push_back(std::move(t));
  }
  return d;
}

MultiDist MultiDist::var_power(VarId v, int k) { return monomial(ExpVec::unit(v, k)); }

MultiDist MultiDist::delta(DeltaAtom atom, QScalar c) {
  MultiDist d;
  DTerm t;
  t.coeff = std::move(c);
  t.deltas.push_back(std::move(atom));
  d.terms_.push_back(std::move(t));
  return d;
}

MultiDist MultiDist::dir_factor(DirFactor f) {
  MultiDist d;
  DTerm t;
  if (f.fr.is_zero()) return d;
  t.rats.push_back(std::move(f));
  d.terms_.push_back(std::move(t));
  return d;
}

MultiDist MultiDist::lin_factor(LinFactor f) {
  MultiDist d;
  DTerm t;
  t.lins.push_back(std::move(f));
  d.terms_.push_back(std::move(t));
  return d;
}

MultiDist MultiDist::from_term(DTerm t) {
  MultiDist d;
  if (!t.coeff.is_zero()) d.terms_.push_back(std::move(t));
  return d;
}

MultiDist MultiDist::operator+(const MultiDist& o) const {
  MultiDist r = *this;
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  r.collect();
  return r;
}

MultiDist MultiDist::operator-() const {
  MultiDist r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

MultiDist MultiDist::operator-(const MultiDist& o) const { return *this + (-o); }

MultiDist MultiDist::operator*(const MultiDist& o) const {
  MultiDist r;
  for (auto& a : terms_)
    for (auto& b : o.terms_) {
      DTerm t;
      t.coeff = a.coeff * b.coeff;
      if (t.coeff.is_zero()) continue;
      t.mono = a.mono + b.mono;
      t.deltas = a.deltas;
      t.deltas.insert(t.deltas.end(), b.deltas.begin(), b.deltas.end());
      t.rats = a.rats;
      t.rats.insert(t.rats.end(), b.rats.begin(), b.rats.end());
      t.lins = a.lins;
      t.lins.insert(t.lins.end(), b.lins.begin(), b.lins.end());
      r.terms_.push_back(std::move(t));
    }
  r.collect();
  return r;
}

MultiDist MultiDist::operator*(const QScalar& c) const {
  if (c.is_zero()) return MultiDist();
  MultiDist r = *this;
  for (auto& t : r.terms_) t.coeff = t.coeff * c;
  return r;
}

MultiDist MultiDist::bar() const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    t.coeff = t.coeff.bar();
    for (auto& d : t.deltas) d.mu = d.mu.bar();
    for (auto& f : t.rats) f.fr = f.fr.bar();
    for (auto& l : t.lins) l.mu = l.mu.bar();
  }
  r.collect();
  return r;
}

MultiDist MultiDist::gamma_flatten() const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    t.coeff = t.coeff.gamma_flatten();
    for (auto& d : t.deltas) { d.mu.g2 = 0; d.mu.s1 = 0; d.mu.s2 = 0; }
    for (auto& f : t.rats) f.fr = f.fr.gamma_flatten();
    for (auto& l : t.lins) { l.mu.g2 = 0; l.mu.s1 = 0; l.mu.s2 = 0; }
  }
  r.collect();
  return r;
}

MultiDist MultiDist::resolve_slots(bool to_gamma) const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    for (auto& d : t.deltas) d.mu = d.mu.resolve_slots(to_gamma);
    for (auto& l : t.lins) l.mu = l.mu.resolve_slots(to_gamma);
    // rationals: slot charges live inside roots/coefficients; roots are Monomials
    for (auto& f : t.rats) {
      FactoredRational nf = FactoredRational::from_poly(f.fr.num(), f.fr.shift());
      for (auto& [root, mult] : f.fr.den()) {
        FactoredRational lin = FactoredRational::linear(root.resolve_slots(to_gamma));
        for (int k = 0; k < mult; ++k) nf = nf * lin.inverse();
      }
      f.fr = nf;
    }
  }
  r.collect();
  return r;
}

MultiDist MultiDist::subst_var(VarId v, const Monomial& scale, const ExpVec& target) const {
  if (target.get(v) != 0) throw std::invalid_argument("subst target involves the variable");
  MultiDist r;
  for (auto t : terms_) {
    bool dead = false;
    int k = t.mono.get(v);
    if (k != 0) {
      t.mono.set(v, 0);
      t.mono = t.mono + target * k;
      QScalar sc = scale.pow(k).to_qscalar();
      t.coeff = t.coeff * sc;
    }
    for (auto& d : t.deltas) {
      int dk = d.ratio.get(v);
      if (dk == 0) continue;
      d.ratio.set(v, 0);
      d.ratio = d.ratio + target * dk;
      d.mu = d.mu * scale.pow(dk);
      if (d.ratio.is_zero())
        throw std::domain_error("ill-defined product: delta argument became constant");
    }
    std::vector<DirFactor> keep_rats;
    for (auto& f : t.rats) {
      int fk = f.ratio.get(v);
      if (fk != 0) {
        f.ratio.set(v, 0);
        f.ratio = f.ratio + target * fk;
        f.fr = f.fr.compose_scale(scale.pow(fk));
      }
      if (f.ratio.is_zero()) {
        // the argument collapsed to a constant: evaluate (throws at a pole)
        QScalar val = f.fr.eval(Monomial::one());
        if (val.is_zero()) { dead = true; break; }
        t.coeff = t.coeff * val;
      } else {
        keep_rats.push_back(std::move(f));
      }
    }
    if (dead) continue;
    t.rats = std::move(keep_rats);
    std::vector<LinFactor> keep_lins;
    for (auto& l : t.lins) {
      int ka = l.a.get(v), kb = l.b.get(v);
      if (ka != 0 || kb != 0) {
        // (s^ka z^a' - mu s^kb z^b') = s^ka (z^a' - mu s^(kb-ka) z^b')
        l.a.set(v, 0);
        l.a = l.a + target * ka;
        l.b.set(v, 0);
        l.b = l.b + target * kb;
        t.coeff = t.coeff * scale.pow(ka).to_qscalar();
        l.mu = l.mu * scale.pow(kb - ka);
      }
      if (l.a == l.b) {
        QScalar val = QScalar::one() - l.mu.to_qscalar();
        if (val.is_zero()) { dead = true; break; }
        t.coeff = t.coeff * val;
        t.mono = t.mono + l.a;
      } else {
        keep_lins.push_back(std::move(l));
      }
    }
    if (dead) continue;
    t.lins = std::move(keep_lins);
    r.terms_.push_back(std::move(t));
  }
  r.collect();
  return r;
}

MultiDist MultiDist::invert_var(VarId v) const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    t.mono.set(v, -t.mono.get(v));
    for (auto& d : t.deltas) d.ratio.set(v, -d.ratio.get(v));
    for (auto& f : t.rats) f.ratio.set(v, -f.ratio.get(v));
    for (auto& l : t.lins) {
      l.a.set(v, -l.a.get(v));
      l.b.set(v, -l.b.get(v));
    }
  }
  r.collect();
  return r;
}

MultiDist MultiDist::rename_var(VarId from, VarId to) const {
  if (from == to) return *this;
  return subst_var(from, Monomial::one(), ExpVec::unit(to, 1));
}

std::set<VarId> MultiDist::vars() const {
  std::set<VarId> s;
  for (auto& t : terms_) {
    for (auto& [v, k] : t.mono.e) s.insert(v);
    for (auto& d : t.deltas)
      for (auto& [v, k] : d.ratio.e) s.insert(v);
    for (auto& f : t.rats)
      for (auto& [v, k] : f.ratio.e) s.insert(v);
    for (auto& l : t.lins) {
      for (auto& [v, k] : l.a.e) s.insert(v);
      for (auto& [v, k] : l.b.e) s.insert(v);
    }
  }
  return s;
}

void MultiDist::collect() {
  for (auto& t : terms_) t.sort_factors();
  std::sort(terms_.begin(), terms_.end(), [](const DTerm& a, const DTerm& b) {
    if (a.coeff.gamma2() != b.coeff.gamma2()) return a.coeff.gamma2() < b.coeff.gamma2();
    return a.shape_less(b);
  });
  std::vector<DTerm> out;
  for (auto& t : terms_) {
    if (!out.empty() && out.back().same_shape(t) &&
        out.back().coeff.gamma2() == t.coeff.gamma2())
      out.back().coeff = out.back().coeff + t.coeff;
    else out.push_back(t);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const DTerm& t) { return t.coeff.is_zero(); }),
            out.end());
  terms_ = std::move(out);
}

MultiDist MultiDist::lins_cancelled() const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    bool changed = true;
    while (changed) {
      changed = false;
      // fold pole-free rational factors of degree <= 1 into scalars/lin factors
      for (size_t fi = 0; fi < t.rats.size() && !changed; ++fi) {
        DirFactor& f = t.rats[fi];
        if (!f.fr.is_polynomial()) continue;
        if (f.fr.num_degree() == 0) {
          t.coeff = t.coeff * f.fr.num()[0];
          t.mono = t.mono + f.ratio * f.fr.shift();
          t.rats.erase(t.rats.begin() + long(fi));
          changed = true;
          break;
        }
        if (f.fr.num_degree() == 1) {
          // c0 + c1 u = c1 (u - (-c0/c1)): a lin factor when the root is a monomial
          Monomial root;
          QScalar r0 = -(f.fr.num()[0] / f.fr.num()[1]);
          if (!qscalar_to_monomial(r0, root)) continue;
          LinFactor l;
          l.a = f.ratio;
          l.b = ExpVec();
          l.mu = root;
          t.coeff = t.coeff * f.fr.num()[1];
          t.mono = t.mono + f.ratio * (f.fr.shift() + 0);
          // the u^shift part plus one factor of u from the linear term structure:
          // value = u^shift (c1 u + c0) = c1 u^shift (u - root)
          t.lins.push_back(std::move(l));
          t.rats.erase(t.rats.begin() + long(fi));
          changed = true;
          break;
        }
      }
      if (changed) continue;
      for (size_t li = 0; li < t.lins.size() && !changed; ++li) {
        const LinFactor& l = t.lins[li];
        ExpVec diff = l.a - l.b;
        for (size_t fi = 0; fi < t.rats.size() && !changed; ++fi) {
          DirFactor& f = t.rats[fi];
          int m = 0;
          if (f.ratio == diff) m = 1;
          else if (f.ratio == -diff) m = -1;
          else continue;
          // lin = z^b (u^m - mu) in the factor's variable u = z^ratio
          Monomial root = m == 1 ? l.mu : l.mu.inverse();
          if (!f.fr.has_pole_at(root)) continue;
          // (u - root) * fr removes one pole; for m == -1,
          // (u^-1 - mu) = -mu u^-1 (u - mu^-1)
          FactoredRational lin_u = FactoredRational::linear(root);
          f.fr = f.fr * lin_u;
          ExpVec base = l.b;
          QScalar extra = QScalar::one();
          if (m == -1) {
            // z^a - mu z^b with a - b = -ratio: rewrite in terms of u
            extra = -(l.mu.to_qscalar());
            base = l.a;  // z^a - mu z^b = -mu z^a (u - mu^-1), u = z^(b-a)=z^ratio
          }
          t.mono = t.mono + base;
          t.coeff = t.coeff * extra;
          t.lins.erase(t.lins.begin() + long(li));
          changed = true;
        }
      }
    }
  }
  r.collect();
  return r;
}

MultiDist MultiDist::rats_merged() const {
  MultiDist r = *this;
  for (auto& t : r.terms_) {
    // orient ratios canonically
    for (auto& f : t.rats) {
      if (f.ratio.e.empty()) continue;
      if (f.ratio.e[0].second < 0) {
        f.ratio = -f.ratio;
        f.fr = f.fr.compose_invert();
        f.dir = f.dir == Direction::At0 ? Direction::AtInf : Direction::At0;
      }
    }
    // merge factors on the same ratio
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t i = 0; i < t.rats.size() && !changed; ++i)
        for (size_t j = i + 1; j < t.rats.size() && !changed; ++j) {
          if (!(t.rats[i].ratio == t.rats[j].ratio)) continue;
          DirFactor &a = t.rats[i], &b = t.rats[j];
          // products mixing central-charge slopes stay as separate factors
          auto try_mul = [](const FactoredRational& x,
                            const FactoredRational& y) -> std::optional<FactoredRational> {
            try {
              return x * y;
            } catch (const std::domain_error&) {
              return std::nullopt;
            }
          };
          if (a.dir == b.dir) {
            if (auto p = try_mul(a.fr, b.fr)) {
              a.fr = *p;
              t.rats.erase(t.rats.begin() + long(j));
              changed = true;
            }
            continue;
          }
          // mixed directions merge only through a pole-free side
          if (b.fr.is_polynomial()) {
            if (auto p = try_mul(a.fr, b.fr)) {
              a.fr = *p;
              t.rats.erase(t.rats.begin() + long(j));
              changed = true;
            }
          } else if (a.fr.is_polynomial()) {
            if (auto p = try_mul(a.fr, b.fr)) {
              b.fr = *p;
              t.rats.erase(t.rats.begin() + long(i));
              changed = true;
            }
          }
        }
    }
    // pole-free constants fold away
    for (size_t i = t.rats.size(); i-- > 0;) {
      if (t.rats[i].fr.is_polynomial() && t.rats[i].fr.num_degree() == 0) {
        t.coeff = t.coeff * t.rats[i].fr.num()[0];
        t.mono = t.mono + t.rats[i].ratio * t.rats[i].fr.shift();
        t.rats.erase(t.rats.begin() + long(i));
      } else if (t.rats[i].fr.is_zero()) {
        t.coeff = QScalar::zero();
      }
    }
  }
  r.collect();
  return r;
}

MultiDist MultiDist::lins_expanded() const {
  MultiDist r;
  for (auto& t : terms_) {
    std::vector<DTerm> work = {t};
    work[0].lins.clear();
    for (auto& l : t.lins) {
      std::vector<DTerm> next;
      for (auto& w : work) {
        DTerm p = w;
        p.mono = p.mono + l.a;
        next.push_back(std::move(p));
        DTerm m = w;
        m.mono = m.mono + l.b;
        m.coeff = -(m.coeff * l.mu.to_qscalar());
        next.push_back(std::move(m));
      }
      work = std::move(next);
    }
    for (auto& w : work) r.terms_.push_back(std::move(w));
  }
  r.collect();
  return r;
}

namespace {

bool var_used_outside_delta(const DTerm& t, size_t delta_idx, VarId v) {
  if (t.mono.get(v) != 0) return true;
  for (size_t i = 0; i < t.deltas.size(); ++i)
    if (i != delta_idx && t.deltas[i].ratio.get(v) != 0) return true;
  for (auto& f : t.rats)
    if (f.ratio.get(v) != 0) return true;
  for (auto& l : t.lins)
    if (l.a.get(v) != 0 || l.b.get(v) != 0) return true;
  return false;
}

// Substitution data for eliminating v from delta^(n)(mu * z^ratio):
// z_v := scale * z^target on the support.
struct Elim {
  VarId v;
  Monomial scale;
  ExpVec target;
};

Elim elimination_for(const DeltaAtom& d, VarId v) {
  int eps = d.ratio.get(v);
  if (eps != 1 && eps != -1)
    throw std::domain_error("delta localization requires a unit exponent variable");
  ExpVec rest = d.ratio - ExpVec::unit(v, eps);
  Elim e;
  e.v = v;
  if (eps == 1) {
    e.scale = d.mu.inverse();
    e.target = -rest;
  } else {
    e.scale = d.mu;
    e.target = rest;
  }
  return e;
}

}  // namespace

MultiDist MultiDist::localized(const std::set<VarId>& protected_vars) const {
  MultiDist out;
  for (auto& t0 : terms_) {
    std::vector<DTerm> stack = {t0};
    // repeatedly localize the first non-separated delta of each pending term
    std::vector<DTerm> done;
    while (!stack.empty()) {
      DTerm t = std::move(stack.back());
      stack.pop_back();
      bool acted = false;
      for (size_t i = 0; i < t.deltas.size() && !acted; ++i) {
        DeltaAtom& d = t.deltas[i];
        if (d.ratio.is_zero())
          throw std::domain_error("ill-defined product: delta of a constant argument");
        // the atom is usable once some unit-exponent variable of it is exclusive
        bool has_exclusive = false;
        for (auto& [v, k] : d.ratio.e)
          if ((k == 1 || k == -1) && !var_used_outside_delta(t, i, v)) has_exclusive = true;
        if (has_exclusive) continue;
        // choose elimination variable: prefer unprotected with |exp| = 1
        VarId best = -1;
        int best_rank = 99;
        for (auto& [v, k] : d.ratio.e) {
          if (k != 1 && k != -1) continue;
          int rank = protected_vars.count(v) ? 1 : 0;
          if (rank < best_rank) {
            best_rank = rank;
            best = v;
          }
        }
        if (best < 0) throw std::domain_error("cannot localize delta: no unit-exponent variable");
        Elim el = elimination_for(d, best);
        if (d.order == 0) {
          DeltaAtom keep = d;
          DTerm rest = t;
          rest.deltas.erase(rest.deltas.begin() + long(i));
          MultiDist sub = MultiDist::from_term(rest).subst_var(el.v, el.scale, el.target);
          for (auto& rt : sub.terms()) {
            DTerm nt = rt;
            nt.deltas.push_back(keep);
            stack.push_back(std::move(nt));
          }
          acted = true;
        } else {
          // derivative atom: expand lins first, then apply the product-rule form
          if (!t.lins.empty()) {
            MultiDist ex = MultiDist::from_term(t).lins_expanded();
            for (auto& rt : ex.terms()) stack.push_back(rt);
            acted = true;
            break;
          }
          for (size_t j = 0; j < t.deltas.size(); ++j)
            if (j != i && t.deltas[j].ratio.get(el.v) != 0)
              throw std::domain_error(
                  "derivative delta sharing a variable with another delta is unsupported");
          // Write u for the delta argument. On the support z_v = u^eps * scale * z^target,
          // so the term reads  c * u^k0 * z^mono * prod_i x_i^{a_i} G_i^{(r_i)}(x_i),
          // with x_i the (u-dependent) argument of the i-th rational factor.
          // d/du x^a G^(r)(x) = m/u * (a x^a G^(r)(x) + x^(a+1) G^(r+1)(x)) for x ~ u^m.
          int eps = d.ratio.get(el.v);
          struct UFactor {
            FactoredRational fr;
            ExpVec ratio;
            Direction dir;
            int m = 0;       // u-power inside the argument
            int a = 0;       // x-multiplications accumulated
            int r = 0;       // derivative order of G
          };
          struct UTerm {
            QScalar c;
            int k0 = 0;
            ExpVec mono;
            std::vector<UFactor> fs;
          };
          UTerm base;
          base.c = t.coeff;
          {
            int kv = t.mono.get(el.v);
            ExpVec m = t.mono;
            m.set(el.v, 0);
            base.mono = m + el.target * kv;
            base.c = base.c * el.scale.pow(kv).to_qscalar();
            base.k0 = eps * kv;
          }
          for (auto& f : t.rats) {
            UFactor uf;
            int kv = f.ratio.get(el.v);
            uf.ratio = f.ratio;
            uf.ratio.set(el.v, 0);
            uf.ratio = uf.ratio + el.target * kv;
            uf.fr = f.fr.compose_scale(el.scale.pow(kv));
            uf.dir = f.dir;
            uf.m = eps * kv;
            base.fs.push_back(std::move(uf));
          }
          int n = d.order;
          std::vector<std::vector<UTerm>> levels = {{base}};
          for (int j = 1; j <= n; ++j) {
            std::vector<UTerm> next;
            for (auto& ut : levels.back()) {
              if (ut.k0 != 0) {
                UTerm a = ut;
                a.c = a.c * QScalar(long(ut.k0));
                a.k0 -= 1;
                next.push_back(std::move(a));
              }
              for (size_t fi = 0; fi < ut.fs.size(); ++fi) {
                const UFactor& f = ut.fs[fi];
                if (f.m == 0) continue;
                if (f.a != 0) {
                  UTerm a = ut;
                  a.c = a.c * QScalar(long(f.m)) * QScalar(long(f.a));
                  a.k0 -= 1;
                  next.push_back(std::move(a));
                }
                UTerm b = ut;
                b.c = b.c * QScalar(long(f.m));
                b.k0 -= 1;
                b.fs[fi].a += 1;
                b.fs[fi].r += 1;
                next.push_back(std::move(b));
              }
            }
            levels.push_back(std::move(next));
          }
          for (int p = 0; p <= n; ++p) {
            int j = n - p;
            BigInt binom = 1;
            for (int tt = 1; tt <= p; ++tt) binom = binom * BigInt(n - p + tt) / BigInt(tt);
            QScalar sgn = (j % 2 == 0) ? QScalar::one() : -QScalar::one();
            for (auto& ut : levels[size_t(j)]) {
              DTerm nt;
              nt.coeff = ut.c * sgn * QScalar(binom);
              nt.mono = ut.mono;
              bool dead = false;
              for (auto& f : ut.fs) {
                FactoredRational fr = f.fr;
                for (int r = 0; r < f.r; ++r) fr = fr.derivative();
                if (f.a != 0) fr = fr * FactoredRational::monomial_term(QScalar::one(), f.a);
                if (f.ratio.is_zero()) {
                  QScalar v = fr.eval(Monomial::one());
                  if (v.is_zero()) { dead = true; break; }
                  nt.coeff = nt.coeff * v;
                } else {
                  DirFactor df;
                  df.fr = std::move(fr);
                  df.ratio = f.ratio;
                  df.dir = f.dir;
                  if (!df.fr.is_zero()) nt.rats.push_back(std::move(df));
                  else { dead = true; break; }
                }
              }
              if (dead || nt.coeff.is_zero()) continue;
              for (size_t j2 = 0; j2 < t.deltas.size(); ++j2)
                if (j2 != i) nt.deltas.push_back(t.deltas[j2]);
              DeltaAtom nd = d;
              nd.order = p;
              nt.deltas.push_back(nd);
              stack.push_back(std::move(nt));
            }
          }
          acted = true;
        }
      }
      if (!acted) done.push_back(std::move(t));
    }
    for (auto& t : done) out.terms_.push_back(std::move(t));
  }
  out.collect();
  return out;
}

namespace {

// weights w with w . dir > 0 for every direction
std::optional<std::map<VarId, long>> solve_weights(const std::vector<ExpVec>& dirs,
                                                   const std::set<VarId>& all_vars) {
  // try graph layering for unit two-variable differences / single variables
  bool graph_ok = true;
  for (auto& d : dirs) {
    if (d.e.size() > 2) graph_ok = false;
    for (auto& [v, k] : d.e)
      if (k != 1 && k != -1) graph_ok = false;
    if (d.e.size() == 2 && d.e[0].second + d.e[1].second != 0) graph_ok = false;
  }
  std::map<VarId, long> w;
  for (auto v : all_vars) w[v] = 0;
  if (graph_ok) {
    // edges u -> v meaning w[v] > w[u]; single vars compare against a virtual 0
    const VarId ZERO = -1;
    std::map<VarId, std::vector<VarId>> adj;
    std::set<VarId> nodes = all_vars;
    nodes.insert(ZERO);
    auto add_edge = [&](VarId lo, VarId hi) { adj[lo].push_back(hi); };
    for (auto& d : dirs) {
      if (d.e.empty()) return std::nullopt;
      if (d.e.size() == 1) {
        if (d.e[0].second > 0) add_edge(ZERO, d.e[0].first);
        else add_edge(d.e[0].first, ZERO);
      } else {
        VarId plus = d.e[0].second > 0 ? d.e[0].first : d.e[1].first;
        VarId minus = d.e[0].second > 0 ? d.e[1].first : d.e[0].first;
        add_edge(minus, plus);
      }
    }
    // longest-path layering with cycle detection
    std::map<VarId, int> state;  // 0 unvisited, 1 on stack, 2 done
    std::map<VarId, long> depth;
    bool cyclic = false;
    std::function<long(VarId)> dfs = [&](VarId u) -> long {
      if (state[u] == 1) {
        cyclic = true;
        return 0;
      }
      if (state[u] == 2) return depth[u];
      state[u] = 1;
      long d0 = 0;
      for (auto v : adj[u]) d0 = std::max(d0, dfs(v) + 1);
      state[u] = 2;
      depth[u] = d0;
      return d0;
    };
    for (auto v : nodes) dfs(v);
    if (!cyclic) {
      long base = depth[ZERO];
      for (auto v : all_vars) w[v] = base - depth[v];
      // w[v] < w[u] when edge v->u: check orientation: depth measured towards sinks;
      bool ok = true;
      for (auto& d : dirs) {
        long s = 0;
        for (auto& [v, k] : d.e) s += k * w[v];
        if (s <= 0) ok = false;
      }
      if (!ok)
        for (auto v : all_vars) w[v] = -(w[v]);
      ok = true;
      for (auto& d : dirs) {
        long s = 0;
        for (auto& [v, k] : d.e) s += k * w[v];
        if (s <= 0) ok = false;
      }
      if (ok) return w;
    }
  }
  // randomized fallback
  unsigned long long seed = 88172645463325252ull;
  auto rnd = [&seed]() {
    seed ^= seed << 13;
    seed ^= seed >> 7;
    seed ^= seed << 17;
    return long(seed % 2001) - 1000;
  };
  for (int attempt = 0; attempt < 500; ++attempt) {
    for (auto& [v, x] : w) x = rnd();
    bool ok = true;
    for (auto& d : dirs) {
      long s = 0;
      for (auto& [v, k] : d.e) s += k * w[v];
      if (s <= 0) {
        ok = false;
        break;
      }
    }
    if (ok) return w;
  }
  return std::nullopt;
}

long dotw(const std::map<VarId, long>& w, const ExpVec& e) {
  long s = 0;
  for (auto& [v, k] : e.e) {
    auto it = w.find(v);
    if (it != w.end()) s += long(k) * it->second;
  }
  return s;
}

}  // namespace

CoeffMap MultiDist::materialize(const Box& box) const {
  CoeffMap out;
  MultiDist loc = localized().rats_merged().lins_expanded();
  for (auto& t : loc.terms()) {
    // sanity: all variables covered by the box
    for (auto v : MultiDist::from_term(t).vars())
      if (!box.count(v))
        throw std::invalid_argument("materialize: box does not cover variable " + var_name(v));

    // directions of rationals
    std::vector<ExpVec> dirs;
    std::set<VarId> rat_vars;
    for (auto& f : t.rats) {
      dirs.push_back(f.dir == Direction::At0 ? f.ratio : -f.ratio);
      for (auto& [v, k] : f.ratio.e) rat_vars.insert(v);
    }
    std::map<VarId, long> w;
    if (!dirs.empty()) {
      auto sol = solve_weights(dirs, rat_vars);
      if (!sol)
        throw std::domain_error("ill-defined product: no consistent expansion direction");
      w = *sol;
    }
    long wbox = 0;
    for (auto& [v, x] : w) {
      auto it = box.find(v);
      long m = std::max(std::abs(long(it->second.first)), std::abs(long(it->second.second)));
      wbox += std::abs(x) * m;
    }

    const VarId gslot = gamma_slot();
    auto put = [&gslot](std::map<ExpVec, QScalar>& m, ExpVec E, const QScalar& c) {
      if (c.is_zero()) return;
      E.set(gslot, c.gamma2());
      auto [it, fresh] = m.emplace(std::move(E), c);
      if (!fresh) {
        it->second = it->second + c;
        if (it->second.is_zero()) m.erase(it);
      }
    };
    std::map<ExpVec, QScalar> acc;
    put(acc, t.mono, t.coeff);
    // deltas first: parameters bounded through their exclusive variables
    for (auto& d : t.deltas) {
      VarId excl = -1;
      for (auto& [v, k] : d.ratio.e)
        if ((k == 1 || k == -1) && !var_used_outside_delta(t, size_t(&d - &t.deltas[0]), v)) {
          excl = v;
          break;
        }
      if (excl < 0) throw std::domain_error("materialize: delta atom with no exclusive variable");
      int rv = d.ratio.get(excl);
      auto range = box.at(excl);
      std::map<ExpVec, QScalar> next;
      for (auto& [E, c] : acc) {
        // k * rv must carry E(excl)=0.. into the box range; E(excl) is whatever mono gave (0)
        int base = E.get(excl);
        for (int ev = range.first; ev <= range.second; ++ev) {
          int krv = ev - base;
          int k = krv * rv;  // rv = +-1
          // atom coefficient for step index k: fall(k+n, n) * mu^k
          BigInt fall = 1;
          for (int tt = 0; tt < d.order; ++tt) fall *= BigInt(k + d.order - tt);
          if (fall == 0) continue;
          QScalar cc = c * QScalar(fall) * d.mu.to_qscalar().pow(k);
          if (cc.is_zero()) continue;
          put(next, E + d.ratio * k, cc);
        }
      }
      acc = std::move(next);
    }
    // rationals, one at a time, with weight-budget bounds
    for (size_t fi = 0; fi < t.rats.size(); ++fi) {
      const DirFactor& f = t.rats[fi];
      long wd = dotw(w, f.dir == Direction::At0 ? f.ratio : -f.ratio);
      // anchor exponent & orientation
      // At0: exponents tt >= f.fr.shift(); AtInf: tt <= shift + num_degree
      long minrest = 0;
      for (size_t gi = fi + 1; gi < t.rats.size(); ++gi) {
        const DirFactor& g = t.rats[gi];
        long wg = dotw(w, g.ratio);
        long anchor = (g.dir == Direction::At0) ? g.fr.shift() : g.fr.shift() + g.fr.num_degree();
        minrest += anchor * wg;  // steps beyond the anchor only increase w.
      }
      std::map<ExpVec, QScalar> next;
      for (auto& [E, c] : acc) {
        long base = dotw(w, E);
        long budget = wbox - base - minrest;
        // steps s >= 0 along direction, cost s * wd each
        long smax = budget / std::max(1l, wd);
        if (smax < 0) continue;
        int anchor = (f.dir == Direction::At0) ? f.fr.shift() : f.fr.shift() + f.fr.num_degree();
        int lo = (f.dir == Direction::At0) ? anchor : anchor - int(smax);
        int hi = (f.dir == Direction::At0) ? anchor + int(smax) : anchor;
        auto coeffs = f.fr.expand(f.dir, lo, hi);
        for (auto& [tt, fc] : coeffs) {
          QScalar cc = c * fc;
          if (cc.is_zero()) continue;
          put(next, E + f.ratio * tt, cc);
        }
      }
      acc = std::move(next);
    }
    // box filter and accumulate
    for (auto& [E, c] : acc) {
      bool inside = true;
      for (auto& [v, range] : box) {
        if (v == gslot) continue;
        int ev = E.get(v);
        if (ev < range.first || ev > range.second) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      put(out, E, c);
    }
  }
  return out;
}

bool MultiDist::is_zero_on(const Box& box) const { return materialize(box).empty(); }

Box MultiDist::default_box(int n, const std::set<VarId>& extra) const {
  Box b;
  for (auto v : vars()) b[v] = {-n, n};
  for (auto v : extra) b[v] = {-n, n};
  return b;
}

MultiDist MultiDist::coefficient_var(VarId v, int k) const {
  MultiDist loc = localized({v}).lins_expanded();
  // make v exclusive to a delta wherever it sits in one, so it can be read off
  MultiDist fixed;
  for (auto& t : loc.terms()) {
    int didx = -1;
    for (size_t i = 0; i < t.deltas.size(); ++i) {
      int kv = t.deltas[i].ratio.get(v);
      if (kv == 1 || kv == -1) didx = int(i);
    }
    if (didx >= 0 && var_used_outside_delta(t, size_t(didx), v)) {
      if (t.deltas[size_t(didx)].order != 0)
        throw std::domain_error("coefficient extraction through a derivative delta");
      DeltaAtom keep = t.deltas[size_t(didx)];
      DTerm rest = t;
      rest.deltas.erase(rest.deltas.begin() + didx);
      Elim el = elimination_for(keep, v);
      MultiDist sub = MultiDist::from_term(rest).subst_var(el.v, el.scale, el.target);
      for (auto rt : sub.terms()) {
        rt.deltas.push_back(keep);
        fixed.terms().push_back(std::move(rt));
      }
    } else {
      fixed.terms().push_back(t);
    }
  }
  fixed.collect();
  loc = std::move(fixed);
  MultiDist out;
  for (auto& t : loc.terms()) {
    // v in rats is not extractable in closed form
    for (auto& f : t.rats)
      if (f.ratio.get(v) != 0)
        throw std::domain_error("coefficient extraction hits a directed rational tail");
    int dcount = 0;
    size_t didx = 0;
    for (size_t i = 0; i < t.deltas.size(); ++i)
      if (t.deltas[i].ratio.get(v) != 0) {
        ++dcount;
        didx = i;
      }
    if (dcount > 1) throw std::domain_error("coefficient extraction: variable in two deltas");
    int km = t.mono.get(v);
    if (dcount == 0) {
      if (km != k) continue;
      DTerm nt = t;
      nt.mono.set(v, 0);
      out.terms_.push_back(std::move(nt));
    } else {
      const DeltaAtom& d = t.deltas[didx];
      int rv = d.ratio.get(v);
      if (rv != 1 && rv != -1)
        throw std::domain_error("coefficient extraction: non-unit delta exponent");
      // delta step index kk satisfies km + kk*rv = k
      int kk = (k - km) * rv;
      BigInt fall = 1;
      for (int tt = 0; tt < d.order; ++tt) fall *= BigInt(kk + d.order - tt);
      DTerm nt = t;
      nt.deltas.erase(nt.deltas.begin() + long(didx));
      if (fall == 0) continue;
      nt.coeff = nt.coeff * QScalar(fall) * d.mu.to_qscalar().pow(kk);
      ExpVec rest = d.ratio;
      rest.set(v, 0);
      nt.mono = nt.mono + rest * kk;
      nt.mono.set(v, 0);
      out.terms_.push_back(std::move(nt));
    }
  }
  out.collect();
  return out;
}

MultiDist MultiDist::residue_var(VarId v) const { return coefficient_var(v, -1); }

std::string MultiDist::str() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  for (size_t i = 0; i < terms_.size(); ++i) {
    if (i) os << " + ";
    os << terms_[i].str();
  }
  return os.str();
}

bool divide_by_lin(MultiDist& d, const LinFactor& f) {
  ExpVec diff = f.a - f.b;
  for (auto& t : d.terms()) {
    bool found = false;
    for (size_t i = 0; i < t.lins.size(); ++i) {
      const LinFactor& l = t.lins[i];
      if (l.a - l.b == diff && l.mu == f.mu) {
        // l = z^(l.b - f.b) * f
        t.mono = t.mono + (l.b - f.b);
        t.lins.erase(t.lins.begin() + long(i));
        found = true;
        break;
      }
      if (l.b - l.a == diff && l.mu == f.mu.inverse()) {
        // l = -mu^-1 z^(l.a - f.b... ) * f : (z^A - m^-1 z^B) with B-A = diff
        // l = -(l.mu) * z^(l.a - f.a) ... derive: z^A - mu^-1 z^B = -mu^-1 (z^B - mu z^A)
        t.coeff = t.coeff * (-(l.mu.to_qscalar()));
        t.mono = t.mono + (l.a - f.b);
        t.lins.erase(t.lins.begin() + long(i));
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace toroidal
