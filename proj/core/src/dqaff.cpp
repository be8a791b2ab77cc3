#include "toroidal/dqaff.hpp"

#include <algorithm>

namespace toroidal {

namespace {

struct StepTerm {
  QScalar c;
  bool swapped;   // true: the pair is in the target (exchanged) order
  int amode, bmode;  // modes of the two letters after the step, in output order
};

}  // namespace

TriangularRewrite triangular_reorder(const ModeLetter& A, const ModeLetter& B, int depth) {
  SymKind ak = A.sym.kind, bk = B.sym.kind;
  TriangularRewrite out;
  QScalar q2 = QScalar::q_power(2), qm2 = QScalar::q_power(-2);
  QScalar C = QScalar::gamma_power(2), Cinv = QScalar::gamma_power(-2);

  // Every pattern unrolls through the same one-step rewrite
  //   A_a B_b = lead * B_b A_a + extra * B_{b+1} A_{a-1} + cont * A_{a-1} B_{b+1},
  // a consequence of the corresponding polynomial-cleared relation of Def. 3.1.
  QScalar lead, extra, cont;
  int nu = 0;
  if (ak == SymKind::DXPlus && bk == SymKind::DKPlus && B.sym.idx >= 1) {
    // X+_s K+_l = q^2 K+_l X+_s - K+_{l+1} X+_{s-1} + q^2 X+_{s-1} K+_{l+1}
    lead = q2;
    extra = -QScalar::one();
    cont = q2;
    nu = std::min(B.mode, -A.mode) + depth + 1;
  } else if (ak == SymKind::DKMinus && A.sym.idx >= 1 && bk == SymKind::DXMinus) {
    // K-_l X-_s = q^-2 X-_s K-_l - X-_{s+1} K-_{l-1} + q^-2 K-_{l-1} X-_{s+1}
    lead = qm2;
    extra = -QScalar::one();
    cont = qm2;
    nu = std::min(-A.mode, B.mode) + depth + 1;
  } else if (ak == SymKind::DKPlus && A.sym.idx >= 1 && bk == SymKind::DXMinus) {
    // K+_{m,l} X-_s = q^-2 X-_s K+_l - C^-1 q^{2m} X-_{s+1} K+_{l-1}
    //                 + C^-1 q^{2(m-1)} K+_{l-1} X-_{s+1}
    int m = A.sym.idx;
    lead = qm2;
    extra = -(QScalar::q_power(2 * m) * Cinv);
    cont = QScalar::q_power(2 * (m - 1)) * Cinv;
    nu = std::min(-A.mode, B.mode) + depth + 1;
  } else if (ak == SymKind::DXPlus && bk == SymKind::DKMinus && B.sym.idx >= 1) {
    // X+_s K-_l = q^2 K-_l X+_s - C q^{-2m} K-_{l+1} X+_{s-1} + C q^{2-2m} X+_{s-1} K-_{l+1}
    int m = B.sym.idx;
    lead = q2;
    extra = -(C * QScalar::q_power(-2 * m));
    cont = C * QScalar::q_power(2 - 2 * m);
    nu = std::min(B.mode, -A.mode) + depth + 1;
  } else {
    throw std::domain_error("triangular_reorder: pair does not match a Prop. rewrite pattern");
  }

  QScalar cont_coeff = QScalar::one();
  int am = A.mode, bm = B.mode;
  for (int step = 0; step <= depth; ++step) {
    ModeWord w1;
    w1.coeff = cont_coeff * lead;
    w1.letters = {{B.sym, bm}, {A.sym, am}};
    out.expansion.push_back(std::move(w1));
    ModeWord w2;
    w2.coeff = cont_coeff * extra;
    w2.letters = {{B.sym, bm + 1}, {A.sym, am - 1}};
    out.expansion.push_back(std::move(w2));
    cont_coeff = cont_coeff * cont;
    am -= 1;
    bm += 1;
  }
  out.residual.coeff = cont_coeff;
  out.residual.letters = {{A.sym, am}, {B.sym, bm}};
  out.nu = nu;
  mode_collect(out.expansion);
  return out;
}

CurrentExpr derived_p(int sign, VarId z) {
  Monomial ginv = Monomial::gamma_power(-1);
  if (sign > 0) {
    CurrentExpr c = CurrentExpr::gen(make_factor(SymKind::CbarPlus, 0, z));
    CurrentExpr k1 = CurrentExpr::gen(make_factor(SymKind::DKMinusInv, 0, z, ginv));
    CurrentExpr k2 =
        CurrentExpr::gen(make_factor(SymKind::DKMinus, 0, z, ginv * Monomial::q_power(2)));
    return c * k1 * k2;
  }
  CurrentExpr c = CurrentExpr::gen(make_factor(SymKind::CbarMinus, 0, z));
  CurrentExpr k1 = CurrentExpr::gen(make_factor(SymKind::DKPlusInv, 0, z, ginv));
  CurrentExpr k2 =
      CurrentExpr::gen(make_factor(SymKind::DKPlus, 0, z, ginv * Monomial::q_power(2)));
  return c * k1 * k2;
}

CurrentExpr derived_t(int sign, int m, VarId z) {
  if (m < 1) throw std::invalid_argument("derived_t requires m >= 1");
  QScalar pref = (QScalar::q_power(1) - QScalar::q_power(-1)).inverse();
  if (sign > 0) {
    CurrentExpr kinv =
        CurrentExpr::gen(make_factor(SymKind::DKPlusInv, 0, z, Monomial::q_power(-2 * m)));
    CurrentExpr km = CurrentExpr::gen(make_factor(SymKind::DKPlus, m, z));
    return (kinv * km).scaled(-pref);
  }
  CurrentExpr km = CurrentExpr::gen(make_factor(SymKind::DKMinus, m, z));
  CurrentExpr kinv =
      CurrentExpr::gen(make_factor(SymKind::DKMinusInv, 0, z, Monomial::q_power(-2 * m)));
  return (km * kinv).scaled(pref);
}

CurrentExpr truncate_level0(const CurrentExpr& e) {
  CurrentExpr out;
  for (auto t : e.terms()) {
    std::vector<Factor> kept;
    for (auto& f : t.factors) {
      switch (f.sym.kind) {
        case SymKind::CbarPlus:
        case SymKind::CbarMinus:
        case SymKind::CbarPlusInv:
        case SymKind::CbarMinusInv:
          break;  // becomes 1
        default:
          kept.push_back(f);
      }
    }
    t.factors = std::move(kept);
    out.terms().push_back(std::move(t));
  }
  out.collect();
  return out;
}

ModeSum truncate_modes(const ModeSum& s, int level) {
  ModeSum out;
  for (auto& w : s) {
    bool keep = true;
    std::vector<ModeLetter> letters;
    for (auto& l : w.letters) {
      bool is_c = l.sym.kind == SymKind::CbarPlus || l.sym.kind == SymKind::CbarMinus;
      if (is_c) {
        if (level == 0) {
          if (l.mode == 0) continue;  // c0 acts as 1 at the bottom level
          keep = false;
          break;
        }
        if (std::abs(l.mode) >= level) {
          keep = false;
          break;
        }
      }
      letters.push_back(l);
    }
    if (!keep) continue;
    ModeWord nw = w;
    nw.letters = std::move(letters);
    out.push_back(std::move(nw));
  }
  mode_collect(out);
  return out;
}

const std::vector<DRelation>& drelation_table() {
  static const std::vector<DRelation> table = {
      {"Csf-central", "eq:Csfcentral", false},
      {"cbar-mod", "eq:csbf", false},
      {"K0-res", "res K+10 K-10 = 1", false},
      {"K+K+", "eq:K+K+", true},
      {"K+K-", "eq:K+K-", true},
      {"K+X+", "eqbf:K+X+", true},
      {"K+X-", "eq:K+X-", true},
      {"X+rX+s", "eq:X+rX+s", true},
      {"X+X-", "eq:X+X-", false},
      {"K0+K0+", "eq:K0+K0+ (derived, exact)", false},
      {"K0+K0-", "eq:K0+K0- (derived, exact)", false},
      {"K0-X", "thm proof display (derived, exact)", false},
      {"K0-K1", "prop:Hall proof display (derived, exact)", false},
  };
  return table;
}

}  // namespace toroidal
