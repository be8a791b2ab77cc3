#pragma once

#include "toroidal/currents.hpp"

namespace toroidal {

enum class MorphName { Tpi, TOmega0, TOmega1, TOmega0Inv, TOmega1Inv, Eta, Phi, T, Tinv };

/// Expression with pending residues: res_{v in rvars} prod v^-1 * body.
/// The Lusztig images of the node-0 currents only exist in this form.
struct ResExpr {
  CurrentExpr body;
  std::vector<VarId> rvars;

  static ResExpr lift(CurrentExpr e) { return {std::move(e), {}}; }
  ResExpr operator*(const ResExpr& o) const;
  ResExpr operator+(const ResExpr& o) const;
  ResExpr operator-() const;
  ResExpr scaled(const MultiDist& c) const;
  ResExpr scaled(const QScalar& c) const;
  std::string str() const;
};

/// Reduce and evaluate the pending residues.
CurrentExpr reduce_res(const ResExpr& e, const ReduceOptions& opts = {});

/// s a b - t b a on res expressions.
ResExpr twisted_bracket(const ResExpr& a, const ResExpr& b, const MultiDist& s,
                        const MultiDist& t);
ResExpr bracket_res(const ResExpr& a, const ResExpr& b);

/// Apply a single (anti)automorphism generator-wise. Images of the node-0
/// x currents under T, T^-1 are residue expressions.
ResExpr apply_m(MorphName m, const ResExpr& e);
ResExpr apply_word(const std::vector<MorphName>& word, const ResExpr& e);
/// Y = Tpi o T; negative powers use Y^-1 = T^-1 o Tpi.
ResExpr apply_y(int power, const ResExpr& e);

/// Generators as res expressions.
ResExpr rgen(SymKind k, int node, VarId v, Monomial scale = Monomial::one(), int vexp = 1);

/// Derived double-loop currents of the toroidal side.
ResExpr x_loop(int sign, int m, VarId z);     // X^{sign}_{1,m}(z) = Y^{-sign*m}(x^{sign}_1(z))
ResExpr wp_current(int sign, VarId z);        // k_0(z) k_1(z q^2)
ResExpr gamma_current(int sign, VarId z);     // k_0(z) k_1(z)
/// psi^{sign}_{1, sign*m}(z); m = 1 via the defining bracket, m >= 2 by the
/// exchange recursion. Throws if the recursion depth is exceeded.
ResExpr psi_loop(int sign, int m, VarId z, int max_depth = 3);

/// Extract the coefficient of delta(mu * w / v) from a reduced expression:
/// keeps terms whose coefficient carries the atom, localizes w := mu^-1 v and
/// drops the atom.  Terms carrying a different atom on the same ratio are
/// ignored; terms with no such atom cause failure if strict.
CurrentExpr extract_delta_component(const CurrentExpr& e, VarId w, VarId v, const Monomial& mu);

/// The G-twist product used by the psi_1 defining bracket, as a MultiDist.
MultiDist g_twist(int i, int j, int sign, VarId num, VarId den, const Monomial& scale);

/// Forward Damiani-Beck map on toroidal generators (values in the dqaff alphabet).
CurrentExpr psi_forward(const Factor& f);
/// Inverse map on dqaff generators (values in the toroidal side, res expressions).
ResExpr psi_inverse(const Factor& f, int max_depth = 3);

/// iota_m embedding of the quantum affine algebra: closed-form images.
CurrentExpr iota_closed(int m, const Factor& f);

/// Windowed mode-level equality of two residue expressions sharing the free
/// variables: residues are w^0 coefficient extractions, evaluated through
/// modes_at with letter modes bounded by M. Mode words are normalized by
/// mode_reduce where the exchange is defined.
bool res_modes_equal(const ResExpr& a, const ResExpr& b, const std::vector<VarId>& free_vars,
                     int range, int M);

}  // namespace toroidal
