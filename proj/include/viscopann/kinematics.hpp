#pragma once

//! \file kinematics.hpp
//! \brief Deformation measures, invariant sets and their first derivatives.
//!
//! Gradients with respect to a symmetric argument X are returned as the
//! symmetric tensor G with dI = G : dX for symmetric increments dX.
//! The templated kernels perform no SPD validation; the double entry points
//! that can fail say so.

#include <array>
#include <cmath>

#include "viscopann/tensor3.hpp"

namespace viscopann {

template <class T>
struct DeformationStateT
{
  Tensor2T<T> F;
  T J;
  SymTensor2T<T> C;
  SymTensor2T<T> Cbar;
};
using DeformationState = DeformationStateT<double>;

/// (tr Cbar, tr cof Cbar).
template <class T>
using EqInvariantsT = std::array<T, 2>;
/// (Cbar : Cbar_i^{-1}, Cbar^{-1} : Cbar_i).
template <class T>
using NeqInvariantsT = std::array<T, 2>;
/// The nine dissipation invariants of (Ap, Cbar).
template <class T>
using DissInvariantsT = std::array<T, 9>;

using EqInvariants = EqInvariantsT<double>;
using NeqInvariants = NeqInvariantsT<double>;
using DissInvariants = DissInvariantsT<double>;

/// Dissipation invariants that are linear in the projected force.
inline constexpr std::array<int, 3> linear_diss_invariants{0, 5, 7};
/// Dissipation invariants that enter the small-strain viscosity.
inline constexpr std::array<int, 3> quadratic_diss_invariants{1, 6, 8};

template <class T>
SymTensor2T<T> right_cauchy_green(Tensor2T<T> const& F)
{
  SymTensor2T<T> C;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) C(i, j) = F(0, i) * F(0, j) + F(1, i) * F(1, j) + F(2, i) * F(2, j);
  return C;
}

/// Isochoric part det(X)^{-1/3} X.
template <class T>
SymTensor2T<T> unimodular(SymTensor2T<T> const& X)
{
  using std::cbrt;
  return (T(1.0) / cbrt(det(X))) * X;
}

/// Throws if det F <= 0.
DeformationState isochoric_split(Tensor2 const& F);

template <class T>
EqInvariantsT<T> eq_invariants(SymTensor2T<T> const& Cbar)
{
  T const t = trace(Cbar);
  return {t, T(0.5) * (t * t - ddot(Cbar, Cbar))};
}

template <class T>
NeqInvariantsT<T> neq_invariants(SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci)
{
  using std::cbrt;
  T const d13 = cbrt(det(Ci));
  SymTensor2T<T> const Ci_inv = inverse(Ci);
  SymTensor2T<T> const Cbar_inv = inverse(Cbar);
  return {d13 * ddot(Cbar, Ci_inv), ddot(Cbar_inv, Ci) / d13};
}

/// A - (1/3)(Ci : A) Ci^{-1}.
template <class T>
SymTensor2T<T> project_force(SymTensor2T<T> const& A, SymTensor2T<T> const& Ci)
{
  return A - (ddot(Ci, A) / T(3.0)) * inverse(Ci);
}

template <class T>
DissInvariantsT<T> diss_invariants(SymTensor2T<T> const& Ap, SymTensor2T<T> const& Cbar)
{
  Tensor2T<T> const a = Ap.full();
  Tensor2T<T> const c = Cbar.full();
  Tensor2T<T> const a2 = a * a;
  Tensor2T<T> const c2 = c * c;
  // For symmetric X, Y: tr(XY) = X : Y.
  DissInvariantsT<T> I;
  I[0] = trace(a);
  I[1] = T(0.5) * ddot(a, a);
  I[2] = T(0.25) * ddot(a2, a2);
  I[3] = trace(c);
  I[4] = T(0.5) * ddot(c, c);
  I[5] = ddot(a, c);
  I[6] = T(0.5) * ddot(a2, c);
  I[7] = ddot(a, c2);
  I[8] = T(0.5) * ddot(a2, c2);
  return I;
}

/// Invariant tuple at zero projected force.
template <class T>
DissInvariantsT<T> diss_invariants_at_rest(SymTensor2T<T> const& Cbar)
{
  DissInvariantsT<T> I;
  I.fill(T(0.0));
  I[3] = trace(Cbar);
  I[4] = T(0.5) * ddot(Cbar, Cbar);
  return I;
}

// ---------------------------------------------------------------------------
// Gradients

/// d(Ibar_1, Ibar_2)/dC with C the full right Cauchy-Green tensor.
template <class T>
std::array<SymTensor2T<T>, 2> eq_invariants_grad_C(SymTensor2T<T> const& C)
{
  using std::cbrt;
  T const d = det(C);
  T const j23 = T(1.0) / cbrt(d);  // J^{-2/3}
  SymTensor2T<T> const Cinv = inverse(C);
  T const i1 = trace(C);
  T const i2 = T(0.5) * (i1 * i1 - ddot(C, C));
  SymTensor2T<T> const I = SymTensor2T<T>::identity();
  return {j23 * (I - (i1 / T(3.0)) * Cinv), (j23 * j23) * (i1 * I - C - (T(2.0) * i2 / T(3.0)) * Cinv)};
}

/// d(Ibar_1^e, Ibar_2^e)/dC at fixed Ci.
template <class T>
std::array<SymTensor2T<T>, 2> neq_invariants_grad_C(SymTensor2T<T> const& C, SymTensor2T<T> const& Ci)
{
  using std::cbrt;
  T const j23 = T(1.0) / cbrt(det(C));
  SymTensor2T<T> const Cinv = inverse(C);
  SymTensor2T<T> const Ci_hat = unimodular(Ci);
  SymTensor2T<T> const Ci_hat_inv = inverse(Ci_hat);
  SymTensor2T<T> const g1 = j23 * (Ci_hat_inv - (ddot(C, Ci_hat_inv) / T(3.0)) * Cinv);
  SymTensor2T<T> const g2 = (T(1.0) / j23) * ((ddot(Cinv, Ci_hat) / T(3.0)) * Cinv - sandwich(Cinv, Ci_hat));
  return {g1, g2};
}

/// d(Ibar_1^e, Ibar_2^e)/dCi at fixed Cbar, including the det(Ci)^{-1/3} factor.
template <class T>
std::array<SymTensor2T<T>, 2> neq_invariants_grad_Ci(SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci)
{
  using std::cbrt;
  T const d13 = cbrt(det(Ci));
  SymTensor2T<T> const Ci_inv = inverse(Ci);
  SymTensor2T<T> const Cbar_inv = inverse(Cbar);
  SymTensor2T<T> const g1 = d13 * ((ddot(Cbar, Ci_inv) / T(3.0)) * Ci_inv - sandwich(Ci_inv, Cbar));
  SymTensor2T<T> const g2 = (T(1.0) / d13) * (Cbar_inv - (ddot(Cbar_inv, Ci) / T(3.0)) * Ci_inv);
  return {g1, g2};
}

/// d(I_k)/dAp for all nine dissipation invariants.
template <class T>
std::array<SymTensor2T<T>, 9> diss_invariants_grad_Ap(SymTensor2T<T> const& Ap, SymTensor2T<T> const& Cbar)
{
  Tensor2T<T> const a = Ap.full();
  Tensor2T<T> const c = Cbar.full();
  Tensor2T<T> const c2 = c * c;
  Tensor2T<T> const a2 = a * a;
  SymTensor2T<T> const zero = SymTensor2T<T>::zero();
  std::array<SymTensor2T<T>, 9> g;
  g[0] = SymTensor2T<T>::identity();
  g[1] = Ap;
  g[2] = SymTensor2T<T>::sym(a2 * a);
  g[3] = zero;
  g[4] = zero;
  g[5] = Cbar;
  g[6] = SymTensor2T<T>::sym(a * c);
  g[7] = SymTensor2T<T>::sym(c2);
  g[8] = SymTensor2T<T>::sym(a * c2);
  return g;
}

/// Pulls a gradient with respect to Ap back to one with respect to A:
/// G - (1/3)(G : Ci^{-1}) Ci.
template <class T>
SymTensor2T<T> project_gradient(SymTensor2T<T> const& G, SymTensor2T<T> const& Ci)
{
  return G - (ddot(G, inverse(Ci)) / T(3.0)) * Ci;
}

}  // namespace viscopann
