#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "toroidal/morphisms.hpp"

using namespace toroidal;

namespace {
QScalar qq(int k) { return QScalar::q_power(k); }

bool res_equal(const ResExpr& a, const ResExpr& b, int window = 4, bool cleared = false) {
  ReduceOptions opts;
  opts.use_cleared = cleared;
  CurrentExpr ra = reduce_res(a, opts), rb = reduce_res(b, opts);
  return is_zero_within(ra - rb, window, opts).zero;
}

std::vector<Factor> all_generators(VarId z) {
  std::vector<Factor> gens;
  for (int i : {0, 1}) {
    gens.push_back(make_factor(SymKind::XPlus, i, z));
    gens.push_back(make_factor(SymKind::XMinus, i, z));
    gens.push_back(make_factor(SymKind::KPlus, i, z));
    gens.push_back(make_factor(SymKind::KMinus, i, z));
  }
  return gens;
}
}  // namespace

TEST_CASE("eta and phi are involutive on every generator") {
  VarId z = fresh_var("mz");
  for (auto& g : all_generators(z)) {
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    CHECK(res_equal(apply_m(MorphName::Eta, apply_m(MorphName::Eta, e)), e));
    CHECK(res_equal(apply_m(MorphName::Phi, apply_m(MorphName::Phi, e)), e));
  }
}

namespace {
// compare residue expressions whose bodies are parallel constructions:
// align residue variables by bijection, normalizing inverted occurrences
CurrentExpr invert_expr_var(const CurrentExpr& e, VarId v) {
  CurrentExpr r = e;
  for (auto& t : r.terms()) {
    t.coeff = t.coeff.invert_var(v);
    for (auto& f : t.factors)
      if (f.var == v) f.vexp = -f.vexp;
  }
  r.collect();
  return r;
}

CurrentExpr normalize_rvar_orientation(CurrentExpr e, const std::vector<VarId>& rvars) {
  for (auto v : rvars) {
    int pos = 0, neg = 0;
    for (auto& t : e.terms())
      for (auto& f : t.factors)
        if (f.var == v) (f.vexp > 0 ? pos : neg)++;
    if (neg > pos) e = invert_expr_var(e, v);
  }
  return e;
}

bool res_bodies_equal(const ResExpr& a, const ResExpr& b, int window) {
  if (a.rvars.size() != b.rvars.size()) return false;
  ReduceOptions opts;
  opts.use_cleared = true;
  CurrentExpr na = normalize_rvar_orientation(a.body, a.rvars);
  std::vector<VarId> perm = b.rvars;
  std::sort(perm.begin(), perm.end());
  do {
    CurrentExpr nb = b.body;
    std::vector<VarId> tmps;
    for (size_t i = 0; i < perm.size(); ++i) {
      VarId tmp = fresh_var("al");
      tmps.push_back(tmp);
      nb = nb.rename_var(perm[i], tmp);
    }
    for (size_t i = 0; i < perm.size(); ++i) nb = nb.rename_var(tmps[i], a.rvars[i]);
    nb = normalize_rvar_orientation(nb, a.rvars);
    if (is_zero_within(reduce(na, opts) - reduce(nb, opts), window, opts).zero) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}
}  // namespace

TEST_CASE("phi commutes with Tpi and with T on generators") {
  VarId z = fresh_var("mz");
  for (auto& g : all_generators(z)) {
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    ResExpr a = apply_m(MorphName::Phi, apply_m(MorphName::Tpi, e));
    ResExpr b = apply_m(MorphName::Tpi, apply_m(MorphName::Phi, e));
    CHECK(res_equal(a, b));
    ResExpr c = apply_m(MorphName::Phi, apply_m(MorphName::T, e));
    ResExpr d = apply_m(MorphName::T, apply_m(MorphName::Phi, e));
    if (is_x_family(g.sym.kind) && g.sym.idx == 0) {
      // residue-defined images: windowed mode-level comparison
      CHECK(res_modes_equal(c, d, {z}, 3, 3));
    } else {
      CHECK(res_equal(c, d, 4, true));
    }
  }
}

TEST_CASE("T T^-1 = id on node-1 and k generators") {
  VarId z = fresh_var("mz");
  for (auto& g : all_generators(z)) {
    if (is_x_family(g.sym.kind) && g.sym.idx == 0) continue;  // residue route below
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    CHECK(res_equal(apply_m(MorphName::T, apply_m(MorphName::Tinv, e)), e));
    CHECK(res_equal(apply_m(MorphName::Tinv, apply_m(MorphName::T, e)), e));
  }
}

TEST_CASE("T^-1 = eta T eta on generators") {
  VarId z = fresh_var("mz");
  for (auto& g : all_generators(z)) {
    if (is_x_family(g.sym.kind) && g.sym.idx == 0) continue;
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    ResExpr lhs = apply_m(MorphName::Tinv, e);
    ResExpr rhs = apply_m(MorphName::Eta, apply_m(MorphName::T, apply_m(MorphName::Eta, e)));
    CHECK(res_equal(lhs, rhs));
  }
}

TEST_CASE("Y images of basic currents") {
  VarId z = fresh_var("mz");
  // Y(x+_1(z)) = -x-_0(C^-1 z) k+_0(C^-1/2 z)^-1
  ResExpr y = apply_y(-(-1), rgen(SymKind::XPlus, 1, z));  // X+_{1,-1} = Y(x+_1)
  ResExpr expect = -(rgen(SymKind::XMinus, 0, z, Monomial::gamma_power(-2)) *
                     rgen(SymKind::KPlusInv, 0, z, Monomial::gamma_power(-1)));
  CHECK(res_equal(y, expect));
  // Y(Gamma(z)) = Gamma(z q^2)
  VarId w = fresh_var("mw");
  for (int sign : {+1, -1}) {
    ResExpr g = gamma_current(sign, w);
    ResExpr yg = apply_y(1, g);
    VarId w2 = fresh_var("mw");
    ResExpr shifted = gamma_current(sign, w2);
    // compare Y(Gamma)(w) with Gamma(w q^2): realize by scaling the argument
    CurrentExpr sh = shifted.body.subst_arg_var(w2, Monomial::q_power(2), w);
    CHECK(res_equal(yg, ResExpr::lift(sh)));
  }
  // Y(wp(z)) = wp(z)
  for (int sign : {+1, -1}) {
    ResExpr p = wp_current(sign, w);
    CHECK(res_equal(apply_y(1, p), p));
  }
}

TEST_CASE("Gamma is central within window") {
  VarId z = fresh_var("mgz"), v = fresh_var("mgv");
  for (int sign : {+1, -1}) {
    ResExpr g = gamma_current(sign, z);
    for (auto& gen : all_generators(v)) {
      ResExpr e = ResExpr::lift(CurrentExpr::gen(gen));
      CHECK(res_equal(g * e, e * g, 4));
    }
  }
}

TEST_CASE("defining bracket of psi+_{1,1} is delta supported") {
  VarId z = fresh_var("dz"), w = fresh_var("dw");
  Monomial g = Monomial::gamma_power(1);
  // bracket = [Y(k-_1(w)^-1 x-_1(C^1/2 w)), x+_1(z)]_{G10^-(C^-1/2 w/z)}
  ResExpr A = apply_y(1, rgen(SymKind::KMinusInv, 1, w) * rgen(SymKind::XMinus, 1, w, g));
  MultiDist tw = g_twist(1, 0, -1, w, z, g.inverse());
  ResExpr br = twisted_bracket(A, rgen(SymKind::XPlus, 1, z), MultiDist::scalar(QScalar::one()), tw);
  // multiply by the clearing factor of the claimed support delta(C^-1/2 q^2 w / z)
  LinFactor lin;
  lin.a = ExpVec::unit(w, 1);
  lin.b = ExpVec::unit(z, 1);
  lin.mu = Monomial::gamma_power(1) * Monomial::q_power(-2);
  ReduceOptions opts;
  opts.use_cleared = true;
  CurrentExpr red = reduce_res(br.scaled(MultiDist::lin_factor(lin)), opts);
  auto rep = is_zero_within(red, 5, opts);
  CHECK(rep.zero);
}

// Y-invariance of psi needs the full derivation chain of prop:psiinv and is
// exercised by the double-loop verification suite.

TEST_CASE("braid: t y^-1 t = y via composite application") {
  // the x-current chains route through the residue-defined node-0 images and
  // reduce to T T^-1 = id there; the full statement is the automorphism
  // verification suite's job. The k chains close on the nose.
  VarId z = fresh_var("bz");
  for (auto& g : all_generators(z)) {
    if (is_x_family(g.sym.kind)) continue;
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    // t y^-1 t with y = Tpi o T, y^-1 = T^-1 o Tpi
    ResExpr lhs = apply_m(MorphName::T, e);
    lhs = apply_m(MorphName::Tpi, lhs);
    lhs = apply_m(MorphName::Tinv, lhs);
    lhs = apply_m(MorphName::T, lhs);
    ResExpr rhs = apply_y(1, e);
    CHECK(res_equal(lhs, rhs, 4, true));
  }
}

TEST_CASE("braid: t x_omega0 t^-1 = x_omega0 on node-1 currents") {
  VarId z = fresh_var("bz");
  for (auto& g : all_generators(z)) {
    if (g.sym.idx == 0) continue;  // node-0 x images go through residues
    ResExpr e = ResExpr::lift(CurrentExpr::gen(g));
    ResExpr lhs =
        apply_m(MorphName::T, apply_m(MorphName::TOmega0, apply_m(MorphName::Tinv, e)));
    ResExpr rhs = apply_m(MorphName::TOmega0, e);
    CHECK(res_equal(lhs, rhs, 4));
  }
}

TEST_CASE("psi map round trip on generators") {
  VarId z = fresh_var("pz");
  for (auto& g : all_generators(z)) {
    CurrentExpr fwd = psi_forward(g);
    // apply psi_inverse factor-wise
    ResExpr back = ResExpr::lift(CurrentExpr::unit());
    REQUIRE(fwd.terms().size() == 1);
    const CTerm& t = fwd.terms()[0];
    for (auto& f : t.factors) back = back * psi_inverse(f);
    back.body = back.body.scaled(t.coeff);
    ResExpr orig = ResExpr::lift(CurrentExpr::gen(g));
    CHECK(res_equal(back, orig, 4));
  }
}

TEST_CASE("iota closed forms at |m| <= 1 match the composite") {
  // the displayed c-product closed forms concern the k_1 images; the x images
  // are the loop generators, covered by the psi round-trip suite
  VarId z = fresh_var("iz");
  for (int m : {-1, 0, 1}) {
    std::vector<Factor> gens = {make_factor(SymKind::KPlus, 1, z),
                                make_factor(SymKind::KMinus, 1, z)};
    std::vector<Factor> xg = {make_factor(SymKind::XPlus, 1, z),
                              make_factor(SymKind::XMinus, 1, z)};
    if (m == 0) gens.insert(gens.end(), xg.begin(), xg.end());
    for (auto& g : gens) {
      // composite: Psi(Y^-m(iota^(1)(g))) with iota^(1) the identity embedding
      ResExpr ym = apply_y(-m, ResExpr::lift(CurrentExpr::gen(g)));
      REQUIRE(ym.rvars.empty());
      CurrentExpr red = reduce(ym.body);
      CurrentExpr composite;
      for (auto& t : red.terms()) {
        CurrentExpr prod = CurrentExpr::unit();
        for (auto& f : t.factors) prod = prod * psi_forward(f);
        composite = composite + prod.scaled(t.coeff) * CurrentExpr::d_power(t.dpow);
      }
      CurrentExpr closed = iota_closed(m, g);
      auto rep = is_zero_within(reduce(composite) - reduce(closed), 4);
      CHECK(rep.zero);
    }
  }
}
