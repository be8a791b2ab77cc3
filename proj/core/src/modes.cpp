#include "toroidal/modes.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <sstream>

namespace toroidal {

std::string ModeLetter::str() const {
  std::ostringstream os;
  os << sym.str() << "{" << mode << "}";
  return os.str();
}

std::string ModeWord::str() const {
  std::ostringstream os;
  os << "(" << coeff.str() << ")";
  for (auto& l : letters) os << " " << l.str();
  return os.str();
}

int ModeWord::grading() const {
  int g = 0;
  for (auto& l : letters) g += l.mode;
  return g;
}

void mode_collect(ModeSum& s) {
  std::sort(s.begin(), s.end(), [](const ModeWord& a, const ModeWord& b) {
    if (a.coeff.gamma2() != b.coeff.gamma2()) return a.coeff.gamma2() < b.coeff.gamma2();
    return a.letters < b.letters;
  });
  ModeSum out;
  for (auto& w : s) {
    if (!out.empty() && out.back().letters == w.letters &&
        out.back().coeff.gamma2() == w.coeff.gamma2())
      out.back().coeff = out.back().coeff + w.coeff;
    else
      out.push_back(w);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const ModeWord& w) { return w.coeff.is_zero(); }),
            out.end());
  s = std::move(out);
}

bool mode_sum_equal(ModeSum a, ModeSum b) {
  for (auto& w : b) {
    w.coeff = -w.coeff;
    a.push_back(w);
  }
  mode_collect(a);
  return a.empty();
}

bool mode_allowed(const Sym& s, int mode) {
  switch (s.kind) {
    case SymKind::KPlus: return mode >= 0;
    case SymKind::KMinus: return mode <= 0;
    case SymKind::DKPlus: return s.idx == 0 ? mode <= 0 : true;
    case SymKind::DKMinus: return s.idx == 0 ? mode >= 0 : true;
    case SymKind::CbarPlus: return mode >= 0;
    case SymKind::CbarMinus: return mode <= 0;
    case SymKind::HPsiPlus: return mode >= 0;
    case SymKind::HPsiMinus: return mode <= 0;
    case SymKind::XPlus:
    case SymKind::XMinus:
    case SymKind::DXPlus:
    case SymKind::DXMinus:
    case SymKind::HEPlus:
    case SymKind::HEMinus:
      return true;
    default:
      throw std::domain_error("mode expansion undefined for " + s.str());
  }
}

ModeSum modes_at(const CurrentExpr& e, const std::map<VarId, int>& eta, int M) {
  ModeSum out;
  for (auto& t : e.terms()) {
    if (t.dpow != 0 || t.d1pow != 0)
      throw std::domain_error("mode expansion with dangling degree operators");
    for (auto& f : t.factors)
      if (is_inverse(f.sym.kind) || f.sym.kind == SymKind::Unknown)
        throw std::domain_error("mode expansion undefined for " + f.sym.str());
    size_t n = t.factors.size();
    // box for the coefficient materialization
    Box box;
    for (auto& [v, k] : eta) box[v] = {k - int(n) * M, k + int(n) * M};
    for (auto v : t.coeff.vars())
      if (!box.count(v)) box[v] = {-int(n + 1) * M, int(n + 1) * M};
    for (auto& f : t.factors)
      if (!box.count(f.var)) box[f.var] = {-int(n + 1) * M, int(n + 1) * M};
    CoeffMap cm0 = t.coeff.materialize(box);
    // aggregate over central-charge sectors
    std::map<ExpVec, std::vector<QScalar>> cm;
    for (auto& [E, c] : cm0) {
      ExpVec E2 = E;
      E2.set(gamma_slot(), 0);
      cm[E2].push_back(c);
    }
    // enumerate mode assignments
    std::vector<int> modes(n, 0);
    std::function<void(size_t)> rec = [&](size_t i) {
      if (i == n) {
        // required coefficient exponent
        ExpVec need;
        for (auto& [v, k] : eta) need.set(v, k);
        for (size_t j = 0; j < n; ++j) {
          const Factor& f = t.factors[j];
          need.set(f.var, need.get(f.var) + modes[j] * f.vexp);
        }
        auto it = cm.find(need);
        if (it == cm.end()) return;
        for (const QScalar& val : it->second) {
          ModeWord w;
          w.coeff = val;
          for (size_t j = 0; j < n; ++j) {
            const Factor& f = t.factors[j];
            w.coeff = w.coeff * f.scale.resolve_slots(true).pow(-modes[j]).to_qscalar();
            w.letters.push_back({f.sym, modes[j]});
          }
          out.push_back(std::move(w));
        }
        return;
      }
      for (int m = -M; m <= M; ++m) {
        if (!mode_allowed(t.factors[i].sym, m)) continue;
        modes[i] = m;
        rec(i + 1);
      }
    };
    rec(0);
  }
  mode_collect(out);
  return out;
}

namespace {

std::map<int, QScalar> g_series_coeffs(int i, int j, int sign, int gamma_scale, int lo, int hi) {
  FactoredRational fr =
      structure_series(i, j, sign).compose_scale(Monomial::gamma_power(gamma_scale));
  return fr.expand(Direction::At0, lo, hi);
}

}  // namespace

ModeSum mode_swap(const ModeLetter& A, const ModeLetter& B) {
  ModeSum out;
  SymKind ak = A.sym.kind, bk = B.sym.kind;
  auto push = [&](QScalar c, std::vector<ModeLetter> ls) {
    if (c.is_zero()) return;
    ModeWord w;
    w.coeff = std::move(c);
    w.letters = std::move(ls);
    out.push_back(std::move(w));
  };

  if (is_toroidal(ak) && is_toroidal(bk)) {
    bool akk = is_k_family(ak), bkk = is_k_family(bk);
    if (is_inverse(ak) || is_inverse(bk)) throw std::domain_error("mode swap of inverse letters");
    if (akk && bkk) {
      int as = ak == SymKind::KPlus ? +1 : -1;
      int bs = bk == SymKind::KPlus ? +1 : -1;
      if (as == bs) {
        push(QScalar::one(), {B, A});
        return out;
      }
      // coefficients of G^{s1}(C^-1 u) G^{s2}(C u) convolved sector by sector
      auto conv = [&](int i, int j, int s1, int s2, int pmax) {
        std::map<int, std::vector<QScalar>> h;
        auto a = structure_series(i, j, s1).compose_scale(Monomial::gamma_power(-2))
                     .expand(Direction::At0, 0, std::max(0, pmax));
        auto b = structure_series(i, j, s2).compose_scale(Monomial::gamma_power(2))
                     .expand(Direction::At0, 0, std::max(0, pmax));
        for (auto& [m1, c1] : a)
          for (auto& [m2, c2] : b) {
            if (m1 + m2 > pmax) continue;
            h[m1 + m2].push_back(c1 * c2);
          }
        return h;
      };
      if (as > 0 && bs < 0) {
        // k+_{j,m} k-_{i,-n} = sum_p h_p k-_{i,-n+p} k+_{j,m-p},
        // h = series of G+_{ij}(C^-1 u) G-_{ij}(C u), eq:kpkm read backwards
        int i = B.sym.idx, j = A.sym.idx;
        int m = A.mode, n = -B.mode;
        int pmax = std::min(m, n);
        for (auto& [p, cs] : conv(i, j, +1, -1, pmax)) {
          if (p < 0 || p > pmax) continue;
          for (auto& c : cs) push(c, {{B.sym, B.mode + p}, {A.sym, A.mode - p}});
        }
        mode_collect(out);
        return out;
      }
      // k-_{i,-n} k+_{j,m}: the displayed orientation of eq:kpkm
      int i = A.sym.idx, j = B.sym.idx;
      int n = -A.mode, m = B.mode;
      int pmax = std::min(m, n);
      for (auto& [p, cs] : conv(i, j, -1, +1, pmax)) {
        if (p < 0 || p > pmax) continue;
        for (auto& c : cs) push(c, {{B.sym, B.mode - p}, {A.sym, A.mode + p}});
      }
      mode_collect(out);
      return out;
    }
    if (akk && is_x_family(bk)) {
      // k+_{i,m} x_{j,r} = sum_{p=0}^{m} g_p gamma^{-xs p} x_{j,r+p} k+_{i,m-p}
      // k-_{i,-n} x_{j,r} = sum_{p>=0} g_p gamma^{-xs p} x_{j,r-p} k-_{i,-n+p}
      int i = A.sym.idx, j = B.sym.idx;
      int xs = bk == SymKind::XPlus ? +1 : -1;
      if (ak == SymKind::KPlus) {
        int m = A.mode;
        auto gc = g_series_coeffs(i, j, xs, -xs, 0, m);
        for (auto& [p, c] : gc) {
          if (p < 0 || p > m) continue;
          push(c, {{B.sym, B.mode + p}, {A.sym, A.mode - p}});
        }
        return out;
      }
      // KMinus: infinite tail; only valid in truncated settings
      throw std::domain_error("k- past x has an infinite tail; use windowed reduction");
    }
    if (is_x_family(ak) && bkk) {
      int i = B.sym.idx, j = A.sym.idx;
      int xs = ak == SymKind::XPlus ? +1 : -1;
      if (bk == SymKind::KMinus) {
        // x_{j,r} k-_{i,-n} = sum_{p=0}^{n} g_p gamma^{-xs p} k-_{i,-n+p} x_{j,r-p}
        int n = -B.mode;
        auto gc = g_series_coeffs(i, j, xs, -xs, 0, n);
        for (auto& [p, c] : gc) {
          if (p < 0 || p > n) continue;
          push(c, {{B.sym, B.mode + p}, {A.sym, A.mode - p}});
        }
        return out;
      }
      throw std::domain_error("x past k+ has an infinite tail; use windowed reduction");
    }
    if (is_x_family(ak) && is_x_family(bk)) {
      int as = ak == SymKind::XPlus ? +1 : -1;
      int bs = bk == SymKind::XPlus ? +1 : -1;
      if (as != bs) {
        // x+ x- = x- x+ + delta_ij/(q-q^-1)(gamma^{m-n} k+_{m+n} - gamma^{n-m} k-_{m+n})
        const ModeLetter& xp = as > 0 ? A : B;
        const ModeLetter& xm = as > 0 ? B : A;
        int sgn = as > 0 ? +1 : -1;
        push(QScalar::one(), {B, A});
        if (xp.sym.idx == xm.sym.idx) {
          int m = xp.mode, n = xm.mode;
          QScalar pref = (QScalar::q_power(1) - QScalar::q_power(-1)).inverse() *
                         QScalar(long(sgn));
          if (m + n >= 0)
            push(pref * QScalar::gamma_power(m - n),
                 {{{SymKind::KPlus, xp.sym.idx}, m + n}});
          if (m + n <= 0)
            push(-pref * QScalar::gamma_power(n - m),
                 {{{SymKind::KMinus, xp.sym.idx}, m + n}});
        }
        return out;
      }
      // same sign: recursion from the cleared relation, m >= 0 > n
      int m = A.mode, n = B.mode;
      if (!(m >= 0 && n < 0))
        throw std::domain_error("same-sign x mode swap only across the sign boundary");
      if (m + n == -1)
        throw std::domain_error(
            "same-sign x exchange at total mode -1 has no sorted resolution");
      int c = CartanData::c(A.sym.idx, B.sym.idx) * as;
      QScalar qc = QScalar::q_power(c);
      // x_{i,m} x_{j,n} = q^c x_{i,m-1} x_{j,n+1} + q^c x_{j,n} x_{i,m} - x_{j,n+1} x_{i,m-1}
      push(qc, {B, A});
      ModeLetter A1{A.sym, A.mode - 1}, B1{B.sym, B.mode + 1};
      push(-QScalar::one(), {B1, A1});
      if (A1.mode >= 0 && B1.mode < 0) {
        for (auto& w : mode_swap(A1, B1)) {
          ModeWord w2 = w;
          w2.coeff = w2.coeff * qc;
          out.push_back(std::move(w2));
        }
      } else {
        push(qc, {A1, B1});
      }
      mode_collect(out);
      return out;
    }
  }
  throw std::domain_error("mode swap not defined for this pair");
}

NormalOrder normal_order(const ModeWord& w) {
  NormalOrder r;
  r.leading = w;
  // stable partition by sign with the leading exchange scalar
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < r.leading.letters.size(); ++i) {
      ModeLetter& A = r.leading.letters[i];
      ModeLetter& B = r.leading.letters[i + 1];
      if (A.mode >= 0 && B.mode < 0) {
        // leading scalar of the exchange
        SymKind ak = A.sym.kind, bk = B.sym.kind;
        QScalar lead = QScalar::one();
        if (is_k_family(ak) && is_k_family(bk)) lead = QScalar::one();
        else if (is_k_family(ak) && is_x_family(bk))
          lead = QScalar::q_power(CartanData::c(A.sym.idx, B.sym.idx) *
                                  (bk == SymKind::XPlus ? 1 : -1) *
                                  (ak == SymKind::KPlus ? 1 : -1) *
                                  (is_inverse(ak) ? -1 : 1));
        else if (is_x_family(ak) && is_k_family(bk))
          lead = QScalar::q_power(CartanData::c(B.sym.idx, A.sym.idx) *
                                  (ak == SymKind::XPlus ? 1 : -1) *
                                  (bk == SymKind::KMinus ? 1 : -1) *
                                  (is_inverse(bk) ? -1 : 1));
        else if (is_x_family(ak) && is_x_family(bk)) {
          int as = ak == SymKind::XPlus ? 1 : -1;
          int bs = bk == SymKind::XPlus ? 1 : -1;
          if (as == bs)
            lead = QScalar::q_power(CartanData::c(A.sym.idx, B.sym.idx) * as);
          else
            lead = QScalar::one();
        }
        r.leading.coeff = r.leading.coeff * lead;
        std::swap(A, B);
        changed = true;
      }
    }
  }
  int neg = 0, nonneg = 0;
  for (auto& l : w.letters) {
    if (l.mode < 0) neg -= l.mode;
    else nonneg += l.mode;
  }
  r.ncert = std::min(neg, nonneg);
  return r;
}

ModeSum mode_reduce(const ModeWord& w) {
  ModeSum work = {w}, done;
  long guard = 0;
  while (!work.empty()) {
    if (++guard > 200000) throw std::runtime_error("mode_reduce: guard tripped");
    ModeWord cur = std::move(work.back());
    work.pop_back();
    bool acted = false;
    for (size_t i = 0; i + 1 < cur.letters.size() && !acted; ++i) {
      const ModeLetter& A = cur.letters[i];
      const ModeLetter& B = cur.letters[i + 1];
      bool need = (A.mode >= 0 && B.mode < 0);
      // canonical order inside commuting k-blocks
      if (!need && is_k_family(A.sym.kind) && is_k_family(B.sym.kind) &&
          (A.sym.kind == B.sym.kind) && ((A.mode >= 0) == (B.mode >= 0)) && B < A)
        need = true;
      if (!need) continue;
      ModeSum repl;
      if (is_k_family(A.sym.kind) && is_k_family(B.sym.kind) && A.sym.kind == B.sym.kind) {
        ModeWord sw = cur;
        std::swap(sw.letters[i], sw.letters[i + 1]);
        repl = {ModeWord{QScalar::one(), {sw.letters[i], sw.letters[i + 1]}}};
        repl[0].letters = {cur.letters[i + 1], cur.letters[i]};
      } else {
        repl = mode_swap(A, B);
      }
      for (auto& rw : repl) {
        ModeWord nw;
        nw.coeff = cur.coeff * rw.coeff;
        nw.letters.assign(cur.letters.begin(), cur.letters.begin() + long(i));
        nw.letters.insert(nw.letters.end(), rw.letters.begin(), rw.letters.end());
        nw.letters.insert(nw.letters.end(), cur.letters.begin() + long(i) + 2,
                          cur.letters.end());
        work.push_back(std::move(nw));
      }
      acted = true;
    }
    if (!acted) done.push_back(std::move(cur));
  }
  mode_collect(done);
  return done;
}

ModeSum mode_reduce(const ModeSum& s) {
  ModeSum out;
  for (auto& w : s) {
    ModeSum r = mode_reduce(w);
    out.insert(out.end(), r.begin(), r.end());
  }
  mode_collect(out);
  return out;
}

int valuation_bound(const ModeSum& s) {
  int v = INT_MAX;
  for (auto& w : s) v = std::min(v, normal_order(w).ncert);
  return v;
}

double ultrametric_norm(const ModeSum& s) {
  if (s.empty()) return 0.0;
  return std::exp(-double(valuation_bound(s)));
}

}  // namespace toroidal
