#include "toroidal/morphisms.hpp"

#include <algorithm>
#include <sstream>

#include "toroidal/modes.hpp"

namespace toroidal {

ResExpr ResExpr::operator*(const ResExpr& o) const {
  ResExpr r;
  r.body = body * o.body;
  r.rvars = rvars;
  r.rvars.insert(r.rvars.end(), o.rvars.begin(), o.rvars.end());
  return r;
}

ResExpr ResExpr::operator+(const ResExpr& o) const {
  ResExpr r;
  r.body = body + o.body;
  r.rvars = rvars;
  for (auto v : o.rvars)
    if (std::find(r.rvars.begin(), r.rvars.end(), v) == r.rvars.end()) r.rvars.push_back(v);
  return r;
}

ResExpr ResExpr::operator-() const { return {-body, rvars}; }

ResExpr ResExpr::scaled(const MultiDist& c) const { return {body.scaled(c), rvars}; }
ResExpr ResExpr::scaled(const QScalar& c) const { return {body.scaled(c), rvars}; }

std::string ResExpr::str() const {
  std::ostringstream os;
  if (!rvars.empty()) {
    os << "res_{";
    for (size_t i = 0; i < rvars.size(); ++i) {
      if (i) os << ",";
      os << var_name(rvars[i]);
    }
    os << "} ";
  }
  os << body.str();
  return os.str();
}

CurrentExpr reduce_res(const ResExpr& e, const ReduceOptions& opts) {
  CurrentExpr red = reduce(e.body, opts);
  for (auto v : e.rvars) {
    CurrentExpr out;
    for (auto& t : red.terms()) {
      bool bound = false;
      for (auto& f : t.factors) bound |= (f.var == v);
      if (bound) {
        // such terms must cancel among themselves; verify and drop
        if (!t.coeff.is_zero_on(t.coeff.default_box(opts.zero_window)))
          throw std::domain_error(
              "residue variable still bound to a current factor with nonzero coefficient");
        continue;
      }
      CTerm nt = t;
      nt.coeff = t.coeff.coefficient_var(v, 0);
      if (!nt.coeff.syntactically_zero()) out.terms().push_back(std::move(nt));
    }
    out.collect();
    red = reduce(out, opts);
  }
  return red;
}

ResExpr twisted_bracket(const ResExpr& a, const ResExpr& b, const MultiDist& s,
                        const MultiDist& t) {
  ResExpr ab = a * b, ba = b * a;
  ResExpr r;
  r.body = (ab.body).scaled(s) - (ba.body).scaled(t);
  r.rvars = ab.rvars;
  return r;
}

ResExpr bracket_res(const ResExpr& a, const ResExpr& b) {
  MultiDist one = MultiDist::scalar(QScalar::one());
  return twisted_bracket(a, b, one, one);
}

ResExpr rgen(SymKind k, int node, VarId v, Monomial scale, int vexp) {
  return ResExpr::lift(CurrentExpr::gen(make_factor(k, node, v, scale, vexp)));
}

MultiDist g_twist(int i, int j, int sign, VarId num, VarId den, const Monomial& scale) {
  DirFactor f;
  f.fr = structure_series(i, j, sign).compose_scale(scale);
  f.ratio = ExpVec::unit(num, 1) + ExpVec::unit(den, -1);
  f.dir = Direction::At0;
  return MultiDist::dir_factor(f);
}

namespace {

MultiDist g_twist_exp(int i, int j, int sign, const ExpVec& num_exp, const ExpVec& den_exp,
                      const Monomial& scale) {
  DirFactor f;
  f.fr = structure_series(i, j, sign).compose_scale(scale);
  f.ratio = num_exp - den_exp;
  f.dir = Direction::At0;
  return MultiDist::dir_factor(f);
}

QScalar qbr(int n) { return qint(n); }

// the residue-defined Lusztig images of the node-0 currents
ResExpr t_image_x0(bool inverse, bool plus, VarId var, int vexp, const Monomial& scale) {
  VarId w1 = fresh_var("w"), w2 = fresh_var("w");
  ExpVec zexp = ExpVec::unit(var, vexp);
  QScalar pref = qbr(2).inverse();
  Monomial q2 = Monomial::q_power(inverse ? -2 : 2);
  Monomial args = scale * q2;  // argument of the x0 factor: scale*q^{+-2} * z^vexp
  auto x1gen = [&](VarId w) {
    return rgen(plus ? SymKind::XPlus : SymKind::XMinus, 1, w);
  };
  ResExpr x0 = rgen(plus ? SymKind::XPlus : SymKind::XMinus, 0, var, args, vexp);
  int gsign = plus ? -1 : +1;  // G^- twists for x+, G^+ twists for x-
  ExpVec w1e = ExpVec::unit(w1, 1), w2e = ExpVec::unit(w2, 1);
  ResExpr inner, outer;
  if ((plus && !inverse) || (!plus && inverse)) {
    // [x1(w1), [x1(w2), x0(z q^{+-2})]_{G10(w2/zq^2)}]_{G11(w1/w2) G10(w1/zq^2)}
    MultiDist gi = g_twist_exp(1, 0, gsign, w2e, zexp, args.inverse());
    inner = twisted_bracket(x1gen(w2), x0, MultiDist::scalar(QScalar::one()), gi);
    MultiDist go = g_twist(1, 1, gsign, w1, w2, Monomial::one()) *
                   g_twist_exp(1, 0, gsign, w1e, zexp, args.inverse());
    outer = twisted_bracket(x1gen(w1), inner, MultiDist::scalar(QScalar::one()), go);
  } else {
    // [[x0(z q^{-+2}), x1(w1)]_{G10(zq^-2/w1)}, x1(w2)]_{G11(w1/w2) G10(zq^-2/w2)}
    MultiDist gi = g_twist_exp(1, 0, gsign, zexp, w1e, args);
    inner = twisted_bracket(x0, x1gen(w1), MultiDist::scalar(QScalar::one()), gi);
    MultiDist go = g_twist(1, 1, gsign, w1, w2, Monomial::one()) *
                   g_twist_exp(1, 0, gsign, zexp, w2e, args);
    outer = twisted_bracket(inner, x1gen(w2), MultiDist::scalar(QScalar::one()), go);
  }
  MultiDist winv =
      MultiDist::monomial(ExpVec::unit(w1, -1) + ExpVec::unit(w2, -1), pref);
  ResExpr out = outer.scaled(winv);
  out.rvars.push_back(w1);
  out.rvars.push_back(w2);
  return out;
}

// image of a single factor under a morphism generator
ResExpr gen_image(MorphName m, const Factor& f) {
  SymKind k = f.sym.kind;
  int node = f.sym.idx;
  if (!is_toroidal(k)) throw std::domain_error("morphism applied outside the toroidal alphabet");
  Monomial g1 = Monomial::gamma_power(-1), g2 = Monomial::gamma_power(-2);
  auto mk = [&](SymKind kk, int nn, Monomial extra) {
    return rgen(kk, nn, f.var, f.scale * extra, f.vexp);
  };
  switch (m) {
    case MorphName::Tpi:
      return mk(k, 1 - node, Monomial::one());
    case MorphName::TOmega0:
    case MorphName::TOmega1:
    case MorphName::TOmega0Inv:
    case MorphName::TOmega1Inv: {
      int i = (m == MorphName::TOmega0 || m == MorphName::TOmega0Inv) ? 0 : 1;
      int inv = (m == MorphName::TOmega0Inv || m == MorphName::TOmega1Inv) ? -1 : 1;
      if (node != i) return ResExpr::lift(CurrentExpr::gen(f));
      switch (k) {
        case SymKind::XPlus:
        case SymKind::XMinus: {
          int s = (k == SymKind::XPlus ? 1 : -1) * inv;
          // multiply by the argument^s
          MultiDist mono = MultiDist::monomial(ExpVec::unit(f.var, s * f.vexp),
                                               f.scale.resolve_slots(true).pow(s).to_qscalar());
          return ResExpr::lift(CurrentExpr::gen(f).scaled(mono));
        }
        case SymKind::KPlus:
        case SymKind::KPlusInv: {
          int s = (k == SymKind::KPlus ? 1 : -1) * inv;
          return ResExpr::lift(CurrentExpr::gen(f).scaled(QScalar::gamma_power(2 * s)));
        }
        case SymKind::KMinus:
        case SymKind::KMinusInv: {
          int s = (k == SymKind::KMinus ? 1 : -1) * inv;
          return ResExpr::lift(CurrentExpr::gen(f).scaled(QScalar::gamma_power(-2 * s)));
        }
        default:
          break;
      }
      throw std::logic_error("unreachable");
    }
    case MorphName::Eta: {
      // x -> x(1/z), k+- -> k-+(1/z); argument inversion
      SymKind nk = k;
      switch (k) {
        case SymKind::KPlus: nk = SymKind::KMinus; break;
        case SymKind::KMinus: nk = SymKind::KPlus; break;
        case SymKind::KPlusInv: nk = SymKind::KMinusInv; break;
        case SymKind::KMinusInv: nk = SymKind::KPlusInv; break;
        default: break;
      }
      return rgen(nk, node, f.var, f.scale.inverse(), -f.vexp);
    }
    case MorphName::Phi: {
      SymKind nk = k;
      switch (k) {
        case SymKind::XPlus: nk = SymKind::XMinus; break;
        case SymKind::XMinus: nk = SymKind::XPlus; break;
        case SymKind::KPlus: nk = SymKind::KMinus; break;
        case SymKind::KMinus: nk = SymKind::KPlus; break;
        case SymKind::KPlusInv: nk = SymKind::KMinusInv; break;
        case SymKind::KMinusInv: nk = SymKind::KPlusInv; break;
        default: break;
      }
      return rgen(nk, node, f.var, f.scale.bar().inverse(), -f.vexp);
    }
    case MorphName::T:
    case MorphName::Tinv: {
      bool inv = m == MorphName::Tinv;
      Monomial qs = Monomial::q_power(inv ? -2 : 2);
      switch (k) {
        case SymKind::KPlus:
        case SymKind::KMinus:
          if (node == 1) return mk(inverse_kind(k), 1, Monomial::one());
          // k0(z) -> k0(z q^{+-2}) k1(z) k1(z q^{+-2})
          return mk(k, 0, qs) * mk(k, 1, Monomial::one()) * mk(k, 1, qs);
        case SymKind::KPlusInv:
        case SymKind::KMinusInv:
          if (node == 1) return mk(inverse_kind(k), 1, Monomial::one());
          return mk(k, 0, qs) * mk(k, 1, Monomial::one()) * mk(k, 1, qs);
        case SymKind::XPlus:
          if (node == 1) {
            if (!inv)  // -x-_1(C^-1 z) k+_1(C^-1/2 z)^-1
              return -(mk(SymKind::XMinus, 1, g2) * mk(SymKind::KPlusInv, 1, g1));
            // -k-_1(C^1/2 z)^-1 x-_1(C z)
            return -(mk(SymKind::KMinusInv, 1, g1.inverse()) *
                     mk(SymKind::XMinus, 1, g2.inverse()));
          }
          return t_image_x0(inv, true, f.var, f.vexp, f.scale);
        case SymKind::XMinus:
          if (node == 1) {
            if (!inv)  // -k-_1(C^-1/2 z)^-1 x+_1(C^-1 z)
              return -(mk(SymKind::KMinusInv, 1, g1) * mk(SymKind::XPlus, 1, g2));
            // -x+_1(C z) k+_1(C^1/2 z)^-1
            return -(mk(SymKind::XPlus, 1, g2.inverse()) *
                     mk(SymKind::KPlusInv, 1, g1.inverse()));
          }
          return t_image_x0(inv, false, f.var, f.vexp, f.scale);
        default:
          break;
      }
      throw std::logic_error("unreachable");
    }
  }
  throw std::logic_error("unreachable");
}

bool is_anti(MorphName m) { return m == MorphName::Eta || m == MorphName::Phi; }
bool is_bar(MorphName m) { return m == MorphName::Phi; }
int d_flip(MorphName m) { return m == MorphName::Phi ? -1 : 1; }

}  // namespace

ResExpr apply_m(MorphName m, const ResExpr& e) {
  ResExpr out;
  out.rvars = e.rvars;
  CurrentExpr acc;
  for (auto& t : e.body.terms()) {
    MultiDist coeff = is_bar(m) ? t.coeff.bar() : t.coeff;
    ResExpr term = ResExpr::lift(CurrentExpr::unit());
    if (is_anti(m)) {
      // reverse factor order, D power moves to the front
      term = term * ResExpr::lift(CurrentExpr::d_power(d_flip(m) * t.dpow));
      for (auto it = t.factors.rbegin(); it != t.factors.rend(); ++it)
        term = term * gen_image(m, *it);
    } else {
      for (auto& f : t.factors) term = term * gen_image(m, f);
      term = term * ResExpr::lift(CurrentExpr::d_power(d_flip(m) * t.dpow));
    }
    acc = acc + term.body.scaled(coeff);
    for (auto v : term.rvars) out.rvars.push_back(v);
  }
  out.body = acc;
  return out;
}

ResExpr apply_word(const std::vector<MorphName>& word, const ResExpr& e) {
  ResExpr r = e;
  for (auto it = word.rbegin(); it != word.rend(); ++it) r = apply_m(*it, r);
  return r;
}

ResExpr apply_y(int power, const ResExpr& e) {
  ResExpr r = e;
  for (int i = 0; i < std::abs(power); ++i) {
    if (power > 0) {
      r = apply_m(MorphName::T, r);
      r = apply_m(MorphName::Tpi, r);
    } else {
      r = apply_m(MorphName::Tpi, r);
      r = apply_m(MorphName::Tinv, r);
    }
  }
  return r;
}

ResExpr x_loop(int sign, int m, VarId z) {
  ResExpr x = rgen(sign > 0 ? SymKind::XPlus : SymKind::XMinus, 1, z);
  return apply_y(sign > 0 ? -m : m, x);
}

ResExpr wp_current(int sign, VarId z) {
  SymKind k = sign > 0 ? SymKind::KPlus : SymKind::KMinus;
  return rgen(k, 0, z) * rgen(k, 1, z, Monomial::q_power(2));
}

ResExpr gamma_current(int sign, VarId z) {
  SymKind k = sign > 0 ? SymKind::KPlus : SymKind::KMinus;
  return rgen(k, 0, z) * rgen(k, 1, z);
}

CurrentExpr extract_delta_component(const CurrentExpr& e, VarId w, VarId v, const Monomial& mu) {
  CurrentExpr out;
  ExpVec ratio = ExpVec::unit(w, 1) + ExpVec::unit(v, -1);
  for (auto& t : e.terms()) {
    // find the atom delta(mu w/v) in the coefficient (single-term coefficients)
    CTerm nt = t;
    MultiDist stripped = MultiDist::zero();
    bool found_all = !nt.coeff.terms().empty();
    for (auto dt : nt.coeff.terms()) {
      bool found = false;
      for (size_t i = 0; i < dt.deltas.size(); ++i) {
        const DeltaAtom& d = dt.deltas[i];
        if (d.order != 0) continue;
        if (d.ratio == ratio && d.mu == mu) {
          dt.deltas.erase(dt.deltas.begin() + long(i));
          found = true;
          break;
        }
        if (d.ratio == -ratio && d.mu == mu.inverse()) {
          dt.deltas.erase(dt.deltas.begin() + long(i));
          found = true;
          break;
        }
      }
      if (!found) {
        found_all = false;
        break;
      }
      stripped.terms().push_back(std::move(dt));
    }
    if (!found_all) continue;
    stripped.collect();
    nt.coeff = stripped;
    CurrentExpr piece = CurrentExpr::from_term(nt).subst_arg_var(w, mu.inverse(), v);
    out = out + piece;
  }
  return out;
}

ResExpr psi_loop(int sign, int m, VarId z, int max_depth) {
  if (m < 1) throw std::invalid_argument("psi_loop requires m >= 1");
  if (m > max_depth) throw std::domain_error("psi_loop recursion depth exceeded");
  Monomial g = Monomial::gamma_power(1);
  if (m == 1) {
    if (sign > 0) {
      // -res_w w^-1 [Y(k-_1(w)^-1 x-_1(C^1/2 w)), x+_1(z)]_{G10^-(C^-1/2 w/z)}
      VarId w = fresh_var("pw");
      ResExpr A = apply_y(1, rgen(SymKind::KMinusInv, 1, w) * rgen(SymKind::XMinus, 1, w, g));
      MultiDist tw = g_twist(1, 0, -1, w, z, g.inverse());
      ResExpr br = twisted_bracket(A, rgen(SymKind::XPlus, 1, z),
                                   MultiDist::scalar(QScalar::one()), tw);
      ResExpr out = (-br).scaled(MultiDist::var_power(w, -1));
      out.rvars.push_back(w);
      return out;
    }
    // -res_w w^-1 [x-_1(z), Y(x+_1(C^1/2 w) k+_1(w)^-1)]_{G10^+(C^1/2 z/w)}
    VarId w = fresh_var("pw");
    ResExpr A = apply_y(1, rgen(SymKind::XPlus, 1, w, g) * rgen(SymKind::KPlusInv, 1, w));
    MultiDist tw = g_twist(1, 0, +1, z, w, g);
    ResExpr br = twisted_bracket(rgen(SymKind::XMinus, 1, z), A,
                                 MultiDist::scalar(QScalar::one()), tw);
    ResExpr out = (-br).scaled(MultiDist::var_power(w, -1));
    out.rvars.push_back(w);
    return out;
  }
  // recursion via eq:psipsimm / eq:psi-psi- at m' = m-1
  int mp = m - 1;
  VarId w = fresh_var("pr");
  ResExpr psi1 = psi_loop(sign, 1, w, max_depth);
  ResExpr psim = psi_loop(sign, mp, z, max_depth);
  ReduceOptions opts;
  opts.use_cleared = true;
  if (sign > 0) {
    // {}_{G01^-(q^-2mp v/w) G11^-(q^{2(1-mp)} v/w)} [psi1(w), psim(v)]_{G01^-(w/vq^2) G11^-(w/v)}
    //   = [2] delta(w/vq^2) psi_{mp+1}(q^2 v) - [2] delta(q^{2mp} w/v) psi_{mp+1}(v)
    MultiDist left = g_twist(0, 1, -1, z, w, Monomial::q_power(-2 * mp)) *
                     g_twist(1, 1, -1, z, w, Monomial::q_power(2 * (1 - mp)));
    MultiDist right = g_twist(0, 1, -1, w, z, Monomial::q_power(-2)) *
                      g_twist(1, 1, -1, w, z, Monomial::one());
    ResExpr lhs = twisted_bracket(psi1, psim, left, right);
    CurrentExpr red = reduce_res(lhs, opts);
    CurrentExpr comp = extract_delta_component(red, w, z, Monomial::q_power(2 * mp));
    return ResExpr::lift(reduce((-comp).scaled(qbr(2).inverse()), opts));
  }
  // lower signs: {}_{G01^+(q^{2mp} w/v) G11^+(q^{2(mp-1)} w/v)} [psim(v), psi1(w)]_{...}
  //   = [2] delta(w/vq^2) psi_{-(mp+1)}(q^2 v) - [2] delta(q^{2mp} w/v) psi_{-(mp+1)}(v)
  MultiDist left = g_twist(0, 1, +1, w, z, Monomial::q_power(2 * mp)) *
                   g_twist(1, 1, +1, w, z, Monomial::q_power(2 * (mp - 1)));
  MultiDist right = g_twist(0, 1, +1, z, w, Monomial::q_power(2)) *
                    g_twist(1, 1, +1, z, w, Monomial::one());
  ResExpr lhs = twisted_bracket(psim, psi1, left, right);
  CurrentExpr red = reduce_res(lhs, opts);
  CurrentExpr comp = extract_delta_component(red, w, z, Monomial::q_power(2 * mp));
  return ResExpr::lift(reduce((-comp).scaled(qbr(2).inverse()), opts));
}

CurrentExpr psi_forward(const Factor& f) {
  SymKind k = f.sym.kind;
  int node = f.sym.idx;
  if (!is_toroidal(k)) throw std::domain_error("psi_forward expects a toroidal generator");
  Monomial g1 = Monomial::gamma_power(-1);
  auto mk = [&](SymKind kk, int idx, Monomial extra) {
    return CurrentExpr::gen(make_factor(kk, idx, f.var, f.scale * extra, f.vexp));
  };
  switch (k) {
    case SymKind::XPlus:
      if (node == 1) return mk(SymKind::DXPlus, 0, Monomial::one());
      // +cbar-(C^1/2 z) K+_{1,0}(z)^-1 X-_{1,1}(C z)
      return mk(SymKind::CbarMinus, 0, g1.inverse()) * mk(SymKind::DKPlusInv, 0, Monomial::one()) *
             mk(SymKind::DXMinus, 1, g1.inverse().pow(2));
    case SymKind::XMinus:
      if (node == 1) return mk(SymKind::DXMinus, 0, Monomial::one());
      // +X+_{1,-1}(C z) cbar+(C^1/2 z) K-_{1,0}(z)^-1
      return mk(SymKind::DXPlus, -1, g1.inverse().pow(2)) * mk(SymKind::CbarPlus, 0, g1.inverse()) *
             mk(SymKind::DKMinusInv, 0, Monomial::one());
    case SymKind::KPlus:
      if (node == 1) return -mk(SymKind::DKMinus, 0, g1);
      return -(mk(SymKind::CbarPlus, 0, Monomial::one()) * mk(SymKind::DKMinusInv, 0, g1));
    case SymKind::KMinus:
      if (node == 1) return -mk(SymKind::DKPlus, 0, g1);
      return -(mk(SymKind::CbarMinus, 0, Monomial::one()) * mk(SymKind::DKPlusInv, 0, g1));
    case SymKind::KPlusInv:
      if (node == 1) return -mk(SymKind::DKMinusInv, 0, g1);
      return -(mk(SymKind::CbarPlusInv, 0, Monomial::one()) * mk(SymKind::DKMinus, 0, g1));
    case SymKind::KMinusInv:
      if (node == 1) return -mk(SymKind::DKPlusInv, 0, g1);
      return -(mk(SymKind::CbarMinusInv, 0, Monomial::one()) * mk(SymKind::DKPlus, 0, g1));
    default:
      throw std::domain_error("psi_forward: unsupported generator");
  }
}

ResExpr psi_inverse(const Factor& f, int max_depth) {
  SymKind k = f.sym.kind;
  if (!is_dqaff(k)) throw std::domain_error("psi_inverse expects a dqaff generator");
  Monomial g = Monomial::gamma_power(1);
  QScalar qdiff = QScalar::q_power(1) - QScalar::q_power(-1);
  auto tor = [&](SymKind kk, int node, Monomial extra) {
    return rgen(kk, node, f.var, f.scale * extra, f.vexp);
  };
  switch (k) {
    case SymKind::DXPlus:
      return apply_y(-f.sym.idx, tor(SymKind::XPlus, 1, Monomial::one()));
    case SymKind::DXMinus:
      return apply_y(f.sym.idx, tor(SymKind::XMinus, 1, Monomial::one()));
    case SymKind::DKPlus: {
      int m = f.sym.idx;
      if (m == 0) return -tor(SymKind::KMinus, 1, g);
      // (q - q^-1) k-_1(C^1/2 z q^-2m) psi+_{1,m}(z)
      VarId z2 = fresh_var("pz");
      ResExpr psi = psi_loop(+1, m, z2, max_depth);
      // rename the psi variable to the factor's argument
      ResExpr kpart = tor(SymKind::KMinus, 1, g * Monomial::q_power(-2 * m));
      ResExpr prod = kpart * psi;
      // substitute z2 := scale * z^vexp
      CurrentExpr body = prod.body.subst_arg_var(
          z2, f.scale, f.var);
      if (f.vexp != 1) throw std::domain_error("psi_inverse with inverted arguments unsupported");
      return ResExpr{body.scaled(qdiff), prod.rvars};
    }
    case SymKind::DKMinus: {
      int m = f.sym.idx;
      if (m == 0) return -tor(SymKind::KPlus, 1, g);
      VarId z2 = fresh_var("pz");
      ResExpr psi = psi_loop(-1, m, z2, max_depth);
      ResExpr kpart = tor(SymKind::KPlus, 1, g * Monomial::q_power(-2 * m));
      ResExpr prod = psi * kpart;
      CurrentExpr body = prod.body.subst_arg_var(z2, f.scale, f.var);
      if (f.vexp != 1) throw std::domain_error("psi_inverse with inverted arguments unsupported");
      return ResExpr{(-body).scaled(qdiff), prod.rvars};
    }
    case SymKind::DKPlusInv:
      if (f.sym.idx == 0) return -tor(SymKind::KMinusInv, 1, g);
      break;
    case SymKind::DKMinusInv:
      if (f.sym.idx == 0) return -tor(SymKind::KPlusInv, 1, g);
      break;
    case SymKind::CbarPlus:
      return tor(SymKind::KPlus, 0, Monomial::one()) * tor(SymKind::KPlus, 1, Monomial::one());
    case SymKind::CbarMinus:
      return tor(SymKind::KMinus, 0, Monomial::one()) * tor(SymKind::KMinus, 1, Monomial::one());
    case SymKind::CbarPlusInv:
      return tor(SymKind::KPlusInv, 1, Monomial::one()) * tor(SymKind::KPlusInv, 0, Monomial::one());
    case SymKind::CbarMinusInv:
      return tor(SymKind::KMinusInv, 1, Monomial::one()) *
             tor(SymKind::KMinusInv, 0, Monomial::one());
    default:
      break;
  }
  throw std::domain_error("psi_inverse: unsupported generator " + f.sym.str());
}

bool res_modes_equal(const ResExpr& a, const ResExpr& b, const std::vector<VarId>& free_vars,
                     int range, int M) {
  ReduceOptions opts;
  opts.use_cleared = true;
  CurrentExpr ra = reduce(a.body, opts), rb = reduce(b.body, opts);
  // enumerate targets over the free variables
  std::vector<std::map<VarId, int>> etas = {{}};
  for (auto v : free_vars) {
    std::vector<std::map<VarId, int>> next;
    for (auto& eta : etas)
      for (int k = -range; k <= range; ++k) {
        auto e2 = eta;
        e2[v] = k;
        next.push_back(e2);
      }
    etas = std::move(next);
  }
  for (auto& eta : etas) {
    auto full = eta;
    for (auto v : a.rvars) full[v] = 0;
    ModeSum ma = modes_at(ra, full, M);
    auto fullb = eta;
    for (auto v : b.rvars) fullb[v] = 0;
    ModeSum mb = modes_at(rb, fullb, M);
    if (mode_sum_equal(ma, mb)) continue;
    // normalize both through the exact mode exchanges where defined
    try {
      if (!mode_sum_equal(mode_reduce(ma), mode_reduce(mb))) return false;
    } catch (const std::domain_error&) {
      return false;
    }
  }
  return true;
}

CurrentExpr iota_closed(int m, const Factor& f) {
  SymKind k = f.sym.kind;
  if (f.sym.idx != 1 || !is_toroidal(k))
    throw std::domain_error("iota embeds the node-1 quantum affine subalgebra");
  Monomial g1 = Monomial::gamma_power(-1);
  auto mk = [&](SymKind kk, int idx, Monomial extra) {
    return CurrentExpr::gen(make_factor(kk, idx, f.var, f.scale * extra, f.vexp));
  };
  switch (k) {
    case SymKind::XPlus:
      return mk(SymKind::DXPlus, m, Monomial::one());
    case SymKind::XMinus:
      return mk(SymKind::DXMinus, -m, Monomial::one());
    case SymKind::KPlus:
    case SymKind::KMinus: {
      bool plus = k == SymKind::KPlus;
      CurrentExpr prod = CurrentExpr::unit(QScalar(-1));
      for (int p = 1; p <= std::abs(m); ++p) {
        int e = m >= 1 ? -2 * p : 2 * (p - 1);
        SymKind ck;
        if (m >= 1) ck = plus ? SymKind::CbarPlus : SymKind::CbarMinus;
        else ck = plus ? SymKind::CbarPlusInv : SymKind::CbarMinusInv;
        prod = prod * mk(ck, 0, Monomial::q_power(e));
      }
      prod = prod * mk(plus ? SymKind::DKMinus : SymKind::DKPlus, 0, g1);
      return prod;
    }
    default:
      throw std::domain_error("iota_closed: unsupported generator");
  }
}

}  // namespace toroidal
