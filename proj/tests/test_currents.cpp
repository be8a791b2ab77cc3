#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "toroidal/currents.hpp"
#include "toroidal/hall_params.hpp"

using namespace toroidal;

namespace {
QScalar qq(int k) { return QScalar::q_power(k); }

CurrentExpr xplus(int i, VarId v, Monomial s = Monomial::one()) {
  return CurrentExpr::gen(make_factor(SymKind::XPlus, i, v, s));
}
CurrentExpr xminus(int i, VarId v, Monomial s = Monomial::one()) {
  return CurrentExpr::gen(make_factor(SymKind::XMinus, i, v, s));
}
CurrentExpr kplus(int i, VarId v, Monomial s = Monomial::one()) {
  return CurrentExpr::gen(make_factor(SymKind::KPlus, i, v, s));
}
CurrentExpr kminus(int i, VarId v, Monomial s = Monomial::one()) {
  return CurrentExpr::gen(make_factor(SymKind::KMinus, i, v, s));
}
CurrentExpr kplus_inv(int i, VarId v, Monomial s = Monomial::one()) {
  return CurrentExpr::gen(make_factor(SymKind::KPlusInv, i, v, s));
}

bool windowed_equal(const CurrentExpr& a, const CurrentExpr& b, int window = 5) {
  return is_zero_within(a - b, window).zero;
}
}  // namespace

TEST_CASE("unit and centrality of C and D handling") {
  VarId z = var_id("cz");
  CurrentExpr e = xplus(1, z);
  CHECK(windowed_equal(e * CurrentExpr::unit(), e));
  CurrentExpr lhs = CurrentExpr::unit(QScalar::gamma_power(1)) * e;
  CurrentExpr rhs = e.scaled(QScalar::gamma_power(1));
  CHECK(windowed_equal(lhs, rhs));
  // D x+(z) D^-1 = x+(z q^-1)
  CurrentExpr de = CurrentExpr::d_power(1) * e * CurrentExpr::d_power(-1);
  CurrentExpr shifted = xplus(1, z, Monomial::q_power(-1));
  CHECK(windowed_equal(de, shifted));
}

TEST_CASE("k same sign commute and inverses cancel") {
  VarId z = var_id("ck1"), w = var_id("ck2");
  CurrentExpr a = kplus(0, z) * kplus(1, w);
  CurrentExpr b = kplus(1, w) * kplus(0, z);
  CHECK(windowed_equal(reduce(a), reduce(b)));
  CurrentExpr c = kplus(1, z) * kplus_inv(1, z);
  CHECK(windowed_equal(reduce(c), CurrentExpr::unit()));
}

TEST_CASE("eq:kpkm round trip") {
  VarId z1 = var_id("ck3"), z2 = var_id("ck4");
  CurrentExpr e = kminus(0, z1) * kplus(1, z2);
  CurrentExpr once = reorder_at(e.terms()[0], 0);
  REQUIRE(once.terms().size() == 1);
  CurrentExpr back = reorder_at(once.terms()[0], 0);
  CHECK(windowed_equal(back, e, 8));
}

TEST_CASE("eq:kpxpm as a relation: G^-(..) k+ x = x k+") {
  VarId z1 = var_id("ck5"), z2 = var_id("ck6");
  for (int i : {0, 1})
    for (int j : {0, 1})
      for (int xs : {+1, -1}) {
        SymKind xk = xs > 0 ? SymKind::XPlus : SymKind::XMinus;
        CurrentExpr kx = kplus(i, z1) * CurrentExpr::gen(make_factor(xk, j, z2));
        DirFactor g;
        g.fr = structure_series(i, j, -xs).compose_scale(Monomial::gamma_power(-xs));
        g.ratio = ExpVec::unit(z2, 1) + ExpVec::unit(z1, -1);
        g.dir = Direction::At0;
        CurrentExpr lhs = kx.scaled(MultiDist::dir_factor(g));
        CurrentExpr rhs = CurrentExpr::gen(make_factor(xk, j, z2)) * kplus(i, z1);
        CHECK(windowed_equal(reduce(lhs), reduce(rhs), 6));
      }
}

TEST_CASE("eq:relx+x- commutator") {
  VarId z1 = var_id("cx1"), z2 = var_id("cx2");
  CurrentExpr comm01 = bracket(xplus(0, z1), xminus(1, z2));
  auto rep = is_zero_within(comm01, 5);
  CHECK(rep.zero);
  CurrentExpr comm = bracket(xplus(1, z1), xminus(1, z2));
  QScalar pref = (qq(1) - qq(-1)).inverse();
  DeltaAtom d1;
  d1.mu = Monomial::gamma_power(-2);
  d1.ratio = ExpVec::unit(z1, 1) + ExpVec::unit(z2, -1);
  DeltaAtom d2;
  d2.mu = Monomial::gamma_power(2);
  d2.ratio = ExpVec::unit(z1, 1) + ExpVec::unit(z2, -1);
  CurrentExpr rhs =
      kplus(1, z1, Monomial::gamma_power(-1)).scaled(MultiDist::delta(d1) * pref) -
      kminus(1, z2, Monomial::gamma_power(-1)).scaled(MultiDist::delta(d2) * pref);
  CHECK(windowed_equal(comm, rhs, 5));
}

TEST_CASE("cleared exchange for same-sign x") {
  VarId z1 = var_id("cx3"), z2 = var_id("cx4");
  LinFactor clear;
  clear.a = ExpVec::unit(z1, 1);
  clear.b = ExpVec::unit(z2, 1);
  clear.mu = Monomial::q_power(2);
  CurrentExpr lhs = (xplus(1, z1) * xplus(1, z2)).scaled(MultiDist::lin_factor(clear));
  CurrentExpr swapped = cleared_reorder_at(lhs.terms()[0], 0);
  LinFactor rhsl;
  rhsl.a = ExpVec::unit(z1, 1);
  rhsl.b = ExpVec::unit(z2, 1);
  rhsl.mu = Monomial::q_power(-2);
  CurrentExpr expect =
      (xplus(1, z2) * xplus(1, z1)).scaled(MultiDist::lin_factor(rhsl) * qq(2));
  CHECK(windowed_equal(swapped, expect, 5));
  CurrentExpr bare = xplus(1, z1) * xplus(1, z2);
  CHECK_THROWS_AS((void)cleared_reorder_at(bare.terms()[0], 0), std::domain_error);
  CHECK_THROWS_AS((void)reorder_at(bare.terms()[0], 0), std::domain_error);
}

TEST_CASE("reduce sorts k- x- x+ k+") {
  VarId a = var_id("cs1"), b = var_id("cs2"), c = var_id("cs3");
  CurrentExpr e = kplus(0, a) * xplus(1, b) * kminus(1, c);
  CurrentExpr red = reduce(e);
  for (auto& t : red.terms()) {
    int last_rank = -1;
    for (auto& f : t.factors) {
      int rank = 0;
      switch (f.sym.kind) {
        case SymKind::KMinus:
        case SymKind::KMinusInv: rank = 0; break;
        case SymKind::XMinus: rank = 1; break;
        case SymKind::XPlus: rank = 2; break;
        default: rank = 3;
      }
      CHECK(rank >= last_rank);
      last_rank = rank;
    }
  }
  CurrentExpr e2 = kplus(0, a) * (xplus(1, b) * kminus(1, c));
  CHECK(windowed_equal(reduce(e), reduce(e2), 4));
}

TEST_CASE("x+ x- full reduce agrees with single reorder") {
  VarId z1 = var_id("cr1"), z2 = var_id("cr2");
  CurrentExpr prod = xplus(1, z1) * xminus(1, z2);
  CurrentExpr red = reduce(prod);
  CurrentExpr one_step = reorder_at(prod.terms()[0], 0);
  CHECK(windowed_equal(red, reduce(one_step), 5));
}

TEST_CASE("dqaff eq:X+X- at r=s=0") {
  VarId v = var_id("cd1"), z = var_id("cd2");
  CurrentExpr Xp = CurrentExpr::gen(make_factor(SymKind::DXPlus, 0, v));
  CurrentExpr Xm = CurrentExpr::gen(make_factor(SymKind::DXMinus, 0, z));
  CurrentExpr comm = bracket(Xp, Xm);
  QScalar pref = (qq(1) - qq(-1)).inverse();
  DeltaAtom d1;
  d1.mu = Monomial::gamma_power(2);
  d1.ratio = ExpVec::unit(v, 1) + ExpVec::unit(z, -1);
  DeltaAtom d2;
  d2.mu = Monomial::gamma_power(-2);
  d2.ratio = ExpVec::unit(v, 1) + ExpVec::unit(z, -1);
  CurrentExpr rhs =
      CurrentExpr::gen(make_factor(SymKind::DKPlus, 0, v)).scaled(MultiDist::delta(d1) * pref) -
      CurrentExpr::gen(make_factor(SymKind::DKMinus, 0, z)).scaled(MultiDist::delta(d2) * pref);
  CHECK(windowed_equal(comm, rhs, 5));
}

TEST_CASE("dqaff eq:X+X- at r=0, s=1 carries a cbar inverse") {
  VarId v = var_id("cd5"), z = var_id("cd6");
  CurrentExpr Xp = CurrentExpr::gen(make_factor(SymKind::DXPlus, 0, v));
  CurrentExpr Xm = CurrentExpr::gen(make_factor(SymKind::DXMinus, 1, z));
  CurrentExpr comm = reduce(bracket(Xp, Xm));
  // expect exactly one term: delta(Cv/q^2 z) cbar-(C^-1/2 z)^-1 K+_{1,1}(v) / (q - q^-1)
  bool found = false;
  for (auto& t : comm.terms()) {
    if (t.factors.size() == 2 && t.factors[0].sym.kind == SymKind::CbarMinusInv &&
        t.factors[1].sym.kind == SymKind::DKPlus && t.factors[1].sym.idx == 1)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("dqaff K0 exchange directions and round trip") {
  VarId v = var_id("cd3"), z = var_id("cd4");
  CurrentExpr K0p = CurrentExpr::gen(make_factor(SymKind::DKPlus, 0, v));
  CurrentExpr X = CurrentExpr::gen(make_factor(SymKind::DXPlus, 2, z));
  CurrentExpr lhs = K0p * X;
  CurrentExpr red = reduce(lhs);
  REQUIRE(red.terms().size() == 1);
  CHECK(red.terms()[0].factors[0].sym.kind == SymKind::DXPlus);
  CHECK(red.terms()[0].factors[1].sym.kind == SymKind::DKPlus);
  CurrentExpr back = reorder_at(red.terms()[0], 0);
  CHECK(windowed_equal(back, lhs, 6));
}

TEST_CASE("hall e+ e- commutator") {
  VarId z = var_id("ch1"), w = var_id("ch2");
  CurrentExpr ep = CurrentExpr::gen(make_factor(SymKind::HEPlus, 0, z));
  CurrentExpr em = CurrentExpr::gen(make_factor(SymKind::HEMinus, 0, w));
  CurrentExpr comm = bracket(ep, em);
  QScalar pref = hall_g11().inverse();
  DeltaAtom d1;  // delta(Cw/z)
  d1.mu = Monomial::gamma_power(2);
  d1.ratio = ExpVec::unit(w, 1) + ExpVec::unit(z, -1);
  DeltaAtom d2;  // delta(w/(Cz))
  d2.mu = Monomial::gamma_power(-2);
  d2.ratio = ExpVec::unit(w, 1) + ExpVec::unit(z, -1);
  CurrentExpr rhs =
      CurrentExpr::gen(make_factor(SymKind::HPsiPlus, 0, w)).scaled(MultiDist::delta(d1) * pref) -
      CurrentExpr::gen(make_factor(SymKind::HPsiMinus, 0, z)).scaled(MultiDist::delta(d2) * pref);
  CHECK(windowed_equal(comm, rhs, 5));
}

TEST_CASE("hall cleared e+ e+ is involutive") {
  VarId z = var_id("ch3"), w = var_id("ch4");
  Factor e1 = make_factor(SymKind::HEPlus, 0, z);
  Factor e2 = make_factor(SymKind::HEPlus, 0, w);
  auto ce = cleared_exchange(e1, e2);
  REQUIRE(ce.has_value());
  CHECK(ce->clearing.size() == 3);
  MultiDist cl = MultiDist::scalar(QScalar::one());
  for (auto& l : ce->clearing) cl = cl * MultiDist::lin_factor(l);
  CurrentExpr lhs = (CurrentExpr::gen(e1) * CurrentExpr::gen(e2)).scaled(cl);
  CurrentExpr rhs = (CurrentExpr::gen(e2) * CurrentExpr::gen(e1)).scaled(ce->rhs_coeff);
  CurrentExpr once = cleared_reorder_at(lhs.terms()[0], 0);
  CHECK(windowed_equal(once, rhs, 5));
  // applying the mirrored exchange to the swapped word returns the original
  auto ce2 = cleared_exchange(e2, e1);
  REQUIRE(ce2.has_value());
  CurrentExpr twice = cleared_reorder_at(rhs.terms()[0], 0);
  CHECK(windowed_equal(twice, lhs, 5));
}

TEST_CASE("root grading") {
  VarId z = var_id("cg1"), w = var_id("cg2");
  CurrentExpr e = xplus(0, z) * xminus(1, w);
  auto [a0, a1] = root_grading(e.terms()[0]);
  CHECK(a0 == 1);
  CHECK(a1 == -1);
}
