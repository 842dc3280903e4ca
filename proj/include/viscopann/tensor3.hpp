#pragma once

//! \file tensor3.hpp
//! \brief Fixed-size 3x3 tensor algebra.
//!
//! The core types are templated on the scalar so that the same kinematic and
//! constitutive kernels run on plain doubles and on ad::Var. Matrix functions
//! that need an eigendecomposition or a factorization are double-only.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "viscopann/ad.hpp"

namespace viscopann {

/// Raised when an SPD precondition is violated (Cholesky or eigenvalue test).
class NotSpdError : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// Full 3x3 tensor, row-major.
template <class T>
struct Tensor2T
{
  std::array<T, 9> a{};

  T& operator()(int i, int j) { return a[3 * i + j]; }
  T const& operator()(int i, int j) const { return a[3 * i + j]; }

  static Tensor2T zero()
  {
    Tensor2T r;
    r.a.fill(T(0.0));
    return r;
  }
  static Tensor2T identity()
  {
    Tensor2T r = zero();
    r.a[0] = r.a[4] = r.a[8] = T(1.0);
    return r;
  }
  static Tensor2T diag(T const& d0, T const& d1, T const& d2)
  {
    Tensor2T r = zero();
    r.a[0] = d0;
    r.a[4] = d1;
    r.a[8] = d2;
    return r;
  }

  Tensor2T& operator+=(Tensor2T const& o)
  {
    for (int k = 0; k < 9; ++k) a[k] += o.a[k];
    return *this;
  }
  Tensor2T& operator-=(Tensor2T const& o)
  {
    for (int k = 0; k < 9; ++k) a[k] -= o.a[k];
    return *this;
  }
  Tensor2T& operator*=(T const& s)
  {
    for (auto& x : a) x *= s;
    return *this;
  }
};

/// Symmetric 3x3 tensor stored as (11, 22, 33, 12, 13, 23).
template <class T>
struct SymTensor2T
{
  std::array<T, 6> v{};

  static constexpr int index(int i, int j)
  {
    constexpr int map[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    return map[i][j];
  }

  T const& operator()(int i, int j) const { return v[index(i, j)]; }
  T& operator()(int i, int j) { return v[index(i, j)]; }

  static SymTensor2T zero()
  {
    SymTensor2T r;
    r.v.fill(T(0.0));
    return r;
  }
  static SymTensor2T identity()
  {
    SymTensor2T r = zero();
    r.v[0] = r.v[1] = r.v[2] = T(1.0);
    return r;
  }
  static SymTensor2T diag(T const& d0, T const& d1, T const& d2)
  {
    SymTensor2T r = zero();
    r.v[0] = d0;
    r.v[1] = d1;
    r.v[2] = d2;
    return r;
  }

  /// Symmetric part of a full tensor.
  static SymTensor2T sym(Tensor2T<T> const& m)
  {
    SymTensor2T r;
    r.v[0] = m(0, 0);
    r.v[1] = m(1, 1);
    r.v[2] = m(2, 2);
    r.v[3] = T(0.5) * (m(0, 1) + m(1, 0));
    r.v[4] = T(0.5) * (m(0, 2) + m(2, 0));
    r.v[5] = T(0.5) * (m(1, 2) + m(2, 1));
    return r;
  }

  Tensor2T<T> full() const
  {
    Tensor2T<T> m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  SymTensor2T& operator+=(SymTensor2T const& o)
  {
    for (int k = 0; k < 6; ++k) v[k] += o.v[k];
    return *this;
  }
  SymTensor2T& operator-=(SymTensor2T const& o)
  {
    for (int k = 0; k < 6; ++k) v[k] -= o.v[k];
    return *this;
  }
  SymTensor2T& operator*=(T const& s)
  {
    for (auto& x : v) x *= s;
    return *this;
  }
};

using Tensor2 = Tensor2T<double>;
using SymTensor2 = SymTensor2T<double>;

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <class T>
Tensor2T<T> operator+(Tensor2T<T> x, Tensor2T<T> const& y)
{
  return x += y;
}
template <class T>
Tensor2T<T> operator-(Tensor2T<T> x, Tensor2T<T> const& y)
{
  return x -= y;
}
template <class T>
Tensor2T<T> operator-(Tensor2T<T> x)
{
  for (auto& e : x.a) e = -e;
  return x;
}
template <class T>
Tensor2T<T> operator*(T const& s, Tensor2T<T> x)
{
  return x *= s;
}
inline Tensor2 operator*(double s, Tensor2 x) { return x *= s; }

template <class T>
SymTensor2T<T> operator+(SymTensor2T<T> x, SymTensor2T<T> const& y)
{
  return x += y;
}
template <class T>
SymTensor2T<T> operator-(SymTensor2T<T> x, SymTensor2T<T> const& y)
{
  return x -= y;
}
template <class T>
SymTensor2T<T> operator-(SymTensor2T<T> x)
{
  for (auto& e : x.v) e = -e;
  return x;
}
template <class T>
SymTensor2T<T> operator*(T const& s, SymTensor2T<T> x)
{
  return x *= s;
}
inline SymTensor2 operator*(double s, SymTensor2 x) { return x *= s; }

// ---------------------------------------------------------------------------
// Products and scalar functions

template <class T>
Tensor2T<T> operator*(Tensor2T<T> const& x, Tensor2T<T> const& y)
{
  Tensor2T<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
  return r;
}

template <class T>
Tensor2T<T> transpose(Tensor2T<T> const& x)
{
  Tensor2T<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = x(j, i);
  return r;
}

template <class T>
T trace(Tensor2T<T> const& x)
{
  return x.a[0] + x.a[4] + x.a[8];
}
template <class T>
T trace(SymTensor2T<T> const& x)
{
  return x.v[0] + x.v[1] + x.v[2];
}

/// Double contraction x : y = x_ij y_ij.
template <class T>
T ddot(Tensor2T<T> const& x, Tensor2T<T> const& y)
{
  T s = x.a[0] * y.a[0];
  for (int k = 1; k < 9; ++k) s += x.a[k] * y.a[k];
  return s;
}
template <class T>
T ddot(SymTensor2T<T> const& x, SymTensor2T<T> const& y)
{
  return x.v[0] * y.v[0] + x.v[1] * y.v[1] + x.v[2] * y.v[2] +
         T(2.0) * (x.v[3] * y.v[3] + x.v[4] * y.v[4] + x.v[5] * y.v[5]);
}

template <class T>
T det(Tensor2T<T> const& x)
{
  return x(0, 0) * (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) - x(0, 1) * (x(1, 0) * x(2, 2) - x(1, 2) * x(2, 0)) +
         x(0, 2) * (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0));
}
template <class T>
T det(SymTensor2T<T> const& s)
{
  auto const& v = s.v;
  return v[0] * (v[1] * v[2] - v[5] * v[5]) - v[3] * (v[3] * v[2] - v[5] * v[4]) +
         v[4] * (v[3] * v[5] - v[1] * v[4]);
}

/// Cofactor matrix, cof x = det(x) x^{-T}.
template <class T>
Tensor2T<T> cofactor(Tensor2T<T> const& x)
{
  Tensor2T<T> c;
  c(0, 0) = x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1);
  c(0, 1) = x(1, 2) * x(2, 0) - x(1, 0) * x(2, 2);
  c(0, 2) = x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0);
  c(1, 0) = x(0, 2) * x(2, 1) - x(0, 1) * x(2, 2);
  c(1, 1) = x(0, 0) * x(2, 2) - x(0, 2) * x(2, 0);
  c(1, 2) = x(0, 1) * x(2, 0) - x(0, 0) * x(2, 1);
  c(2, 0) = x(0, 1) * x(1, 2) - x(0, 2) * x(1, 1);
  c(2, 1) = x(0, 2) * x(1, 0) - x(0, 0) * x(1, 2);
  c(2, 2) = x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0);
  return c;
}

/// Inverse by cofactors. Throws on an exactly singular argument.
template <class T>
Tensor2T<T> inverse(Tensor2T<T> const& x)
{
  Tensor2T<T> c = cofactor(x);
  T const d = x(0, 0) * c(0, 0) + x(0, 1) * c(0, 1) + x(0, 2) * c(0, 2);
  if (value(d) == 0.0) throw std::runtime_error("inverse: singular tensor");
  T const inv = T(1.0) / d;
  Tensor2T<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = c(j, i) * inv;
  return r;
}

/// Inverse of a symmetric tensor by cofactors.
template <class T>
SymTensor2T<T> inverse(SymTensor2T<T> const& s)
{
  auto const& v = s.v;
  SymTensor2T<T> c;
  c.v[0] = v[1] * v[2] - v[5] * v[5];
  c.v[1] = v[0] * v[2] - v[4] * v[4];
  c.v[2] = v[0] * v[1] - v[3] * v[3];
  c.v[3] = v[4] * v[5] - v[3] * v[2];
  c.v[4] = v[3] * v[5] - v[1] * v[4];
  c.v[5] = v[3] * v[4] - v[0] * v[5];
  T const d = v[0] * c.v[0] + v[3] * c.v[3] + v[4] * c.v[4];
  if (value(d) == 0.0) throw std::runtime_error("inverse: singular tensor");
  T const inv = T(1.0) / d;
  for (auto& e : c.v) e *= inv;
  return c;
}

/// Product of two symmetric tensors (not symmetric in general).
template <class T>
Tensor2T<T> operator*(SymTensor2T<T> const& x, SymTensor2T<T> const& y)
{
  return x.full() * y.full();
}

/// x * y * x for symmetric x and y; the result is symmetric.
template <class T>
SymTensor2T<T> sandwich(SymTensor2T<T> const& x, SymTensor2T<T> const& y)
{
  Tensor2T<T> const xy = x.full() * y.full();
  SymTensor2T<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) r(i, j) = xy(i, 0) * x(0, j) + xy(i, 1) * x(1, j) + xy(i, 2) * x(2, j);
  return r;
}

/// Frobenius norm.
inline double norm(Tensor2 const& x) { return std::sqrt(ddot(x, x)); }
inline double norm(SymTensor2 const& x) { return std::sqrt(ddot(x, x)); }

template <class U, class T>
Tensor2T<U> cast(Tensor2T<T> const& x)
{
  Tensor2T<U> r;
  for (int k = 0; k < 9; ++k) r.a[k] = U(x.a[k]);
  return r;
}
template <class U, class T>
SymTensor2T<U> cast(SymTensor2T<T> const& x)
{
  SymTensor2T<U> r;
  for (int k = 0; k < 6; ++k) r.v[k] = U(x.v[k]);
  return r;
}

template <class T>
Tensor2 values(Tensor2T<T> const& x)
{
  Tensor2 r;
  for (int k = 0; k < 9; ++k) r.a[k] = value(x.a[k]);
  return r;
}
template <class T>
SymTensor2 values(SymTensor2T<T> const& x)
{
  SymTensor2 r;
  for (int k = 0; k < 6; ++k) r.v[k] = value(x.v[k]);
  return r;
}

// ---------------------------------------------------------------------------
// Matrix exponential for general arguments

/// exp(x) by scaling and squaring with a diagonal [6/6] Pade approximant.
template <class T>
Tensor2T<T> expm(Tensor2T<T> const& x)
{
  double nrm = 0.0;
  for (int j = 0; j < 3; ++j) {
    double col = 0.0;
    for (int i = 0; i < 3; ++i) col += std::abs(value(x(i, j)));
    nrm = std::max(nrm, col);
  }
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  T const scale(std::ldexp(1.0, -squarings));

  Tensor2T<T> const xs = scale * x;
  constexpr double c[7] = {1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  Tensor2T<T> const x2 = xs * xs;
  Tensor2T<T> const x4 = x2 * x2;
  Tensor2T<T> const x6 = x4 * x2;
  Tensor2T<T> even = T(c[2]) * x2 + T(c[4]) * x4 + T(c[6]) * x6;
  Tensor2T<T> odd = T(c[1]) * Tensor2T<T>::identity() + T(c[3]) * x2 + T(c[5]) * x4;
  for (int k = 0; k < 9; k += 4) even.a[k] += T(c[0]);
  odd = xs * odd;
  Tensor2T<T> r = inverse(even - odd) * (even + odd);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

// ---------------------------------------------------------------------------
// Double-only matrix functions

/// Eigenpairs of a symmetric tensor: values ascending, vectors as columns.
struct SymEigen
{
  std::array<double, 3> values;
  Tensor2 vectors;
};

/// Cyclic Jacobi eigensolver. Throws if the sweep limit is hit.
SymEigen eig_sym(SymTensor2 const& s);

/// Q diag(f(values)) Q^T.
template <class Fn>
SymTensor2 spectral_apply(SymEigen const& e, Fn&& f)
{
  std::array<double, 3> fv{f(e.values[0]), f(e.values[1]), f(e.values[2])};
  SymTensor2 r = SymTensor2::zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += e.vectors(i, k) * fv[k] * e.vectors(j, k);
      r(i, j) = s;
    }
  return r;
}

SymTensor2 expm_sym(SymTensor2 const& s);

/// Principal square root of an SPD tensor. Throws NotSpdError if the smallest
/// eigenvalue is not above spd_threshold.
SymTensor2 sqrtm_spd(SymTensor2 const& s);

/// Inverse of an SPD tensor through its Cholesky factor. Throws NotSpdError.
SymTensor2 inv_spd(SymTensor2 const& s);

/// Determinant from traces of powers.
double det_ch(SymTensor2 const& s);

/// Smallest eigenvalue accepted as positive definite.
inline constexpr double spd_threshold = 1e-12;

/// Throws NotSpdError unless all eigenvalues exceed spd_threshold.
void require_spd(SymTensor2 const& s, char const* where);

// ---------------------------------------------------------------------------
// Kelvin-Mandel packing

using KelvinVec = Eigen::Matrix<double, 6, 1>;
using KelvinMat = Eigen::Matrix<double, 6, 6>;

/// Fourth-order tensor with full index storage, K(i,j,k,l).
struct Tensor4
{
  std::array<double, 81> a{};
  double& operator()(int i, int j, int k, int l) { return a[27 * i + 9 * j + 3 * k + l]; }
  double operator()(int i, int j, int k, int l) const { return a[27 * i + 9 * j + 3 * k + l]; }
};

/// Order (11, 22, 33, 12, 13, 23); shear entries are scaled by sqrt(2).
KelvinVec pack_kelvin(SymTensor2 const& s);
SymTensor2 unpack_kelvin(KelvinVec const& v);
KelvinMat pack_kelvin4(Tensor4 const& k);

/// K : S for a fourth-order K.
SymTensor2 contract(Tensor4 const& k, SymTensor2 const& s);

}  // namespace viscopann
