#pragma once

// Random inputs and finite-difference helpers shared by the unit tests.

#include <cmath>
#include <functional>

#include "viscopann/rng.hpp"
#include "viscopann/tensor3.hpp"

namespace testing {

using namespace viscopann;

inline Tensor2 random_tensor(Rng& rng, double scale = 1.0)
{
  Tensor2 t;
  for (auto& x : t.a) x = scale * rng.uniform(-1.0, 1.0);
  return t;
}

inline SymTensor2 random_sym(Rng& rng, double scale = 1.0)
{
  return SymTensor2::sym(random_tensor(rng, scale));
}

/// Rotation from a random unit quaternion.
inline Tensor2 random_rotation(Rng& rng)
{
  double q[4];
  double n = 0.0;
  for (auto& x : q) {
    x = rng.normal();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : q) x /= n;
  double const w = q[0], x = q[1], y = q[2], z = q[3];
  Tensor2 R;
  R(0, 0) = 1 - 2 * (y * y + z * z);
  R(0, 1) = 2 * (x * y - z * w);
  R(0, 2) = 2 * (x * z + y * w);
  R(1, 0) = 2 * (x * y + z * w);
  R(1, 1) = 1 - 2 * (x * x + z * z);
  R(1, 2) = 2 * (y * z - x * w);
  R(2, 0) = 2 * (x * z - y * w);
  R(2, 1) = 2 * (y * z + x * w);
  R(2, 2) = 1 - 2 * (x * x + y * y);
  return R;
}

/// Q diag(eigs) Q^T with eigenvalues log-uniform in [lo, hi].
inline SymTensor2 random_spd(Rng& rng, double lo = 0.5, double hi = 2.0)
{
  Tensor2 const Q = random_rotation(rng);
  Tensor2 D = Tensor2::zero();
  for (int k = 0; k < 3; ++k) D(k, k) = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  return SymTensor2::sym(Q * D * transpose(Q));
}

inline SymTensor2 random_unimodular_spd(Rng& rng, double lo = 0.5, double hi = 2.0)
{
  SymTensor2 const S = random_spd(rng, lo, hi);
  return (1.0 / std::cbrt(det(S))) * S;
}

inline SymTensor2 rotate(Tensor2 const& Q, SymTensor2 const& S)
{
  return SymTensor2::sym(Q * S.full() * transpose(Q));
}

/// Central-difference directional derivative of f at X along symmetric E.
inline double fd_directional(std::function<double(SymTensor2 const&)> const& f, SymTensor2 const& X,
                             SymTensor2 const& E, double h = 1e-6)
{
  return (f(X + h * E) - f(X - h * E)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-12)
{
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
