#include "viscopann/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace viscopann {

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

void jacobi_rotate(Tensor2& m, Tensor2& q, int p, int r)
{
  double const apq = m(p, r);
  if (apq == 0.0) return;
  double const theta = (m(r, r) - m(p, p)) / (2.0 * apq);
  double const t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  double const c = 1.0 / std::sqrt(t * t + 1.0);
  double const s = t * c;
  for (int k = 0; k < 3; ++k) {
    double const mkp = m(k, p);
    double const mkr = m(k, r);
    m(k, p) = c * mkp - s * mkr;
    m(k, r) = s * mkp + c * mkr;
  }
  for (int k = 0; k < 3; ++k) {
    double const mpk = m(p, k);
    double const mrk = m(r, k);
    m(p, k) = c * mpk - s * mrk;
    m(r, k) = s * mpk + c * mrk;
  }
  m(p, r) = m(r, p) = 0.0;
  for (int k = 0; k < 3; ++k) {
    double const qkp = q(k, p);
    double const qkr = q(k, r);
    q(k, p) = c * qkp - s * qkr;
    q(k, r) = s * qkp + c * qkr;
  }
}

}  // namespace

SymEigen eig_sym(SymTensor2 const& s)
{
  for (double x : s.v)
    if (!std::isfinite(x)) throw NotSpdError("eig_sym: tensor has non-finite entries");
  Tensor2 m = s.full();
  Tensor2 q = Tensor2::identity();
  double const scale = std::max(norm(s), 1e-300);
  constexpr int max_sweeps = 50;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double const off = std::abs(m(0, 1)) + std::abs(m(0, 2)) + std::abs(m(1, 2));
    if (off <= 1e-17 * scale) break;
    jacobi_rotate(m, q, 0, 1);
    jacobi_rotate(m, q, 0, 2);
    jacobi_rotate(m, q, 1, 2);
  }
  if (sweep == max_sweeps) throw std::runtime_error("eig_sym: Jacobi iteration did not converge");

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int x, int y) { return m(x, x) < m(y, y); });
  SymEigen e;
  for (int k = 0; k < 3; ++k) {
    e.values[k] = m(order[k], order[k]);
    for (int i = 0; i < 3; ++i) e.vectors(i, k) = q(i, order[k]);
  }
  return e;
}

SymTensor2 expm_sym(SymTensor2 const& s)
{
  return spectral_apply(eig_sym(s), [](double x) { return std::exp(x); });
}

void require_spd(SymTensor2 const& s, char const* where)
{
  SymEigen const e = eig_sym(s);
  if (!(e.values[0] > spd_threshold))
    throw NotSpdError(fmt::format("{}: tensor not positive definite (min eigenvalue {:.3e})", where, e.values[0]));
}

SymTensor2 sqrtm_spd(SymTensor2 const& s)
{
  SymEigen const e = eig_sym(s);
  if (!(e.values[0] > spd_threshold))
    throw NotSpdError(fmt::format("sqrtm_spd: min eigenvalue {:.3e}", e.values[0]));
  return spectral_apply(e, [](double x) { return std::sqrt(x); });
}

SymTensor2 inv_spd(SymTensor2 const& s)
{
  // Lower Cholesky factor L with S = L L^T.
  double l[3][3] = {};
  for (int j = 0; j < 3; ++j) {
    double d = s(j, j);
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0)) throw NotSpdError("inv_spd: Cholesky factorization failed");
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < 3; ++i) {
      double x = s(i, j);
      for (int k = 0; k < j; ++k) x -= l[i][k] * l[j][k];
      l[i][j] = x / l[j][j];
    }
  }
  // Solve S X = I column by column.
  SymTensor2 r;
  for (int c = 0; c < 3; ++c) {
    double y[3];
    for (int i = 0; i < 3; ++i) {
      double x = (i == c) ? 1.0 : 0.0;
      for (int k = 0; k < i; ++k) x -= l[i][k] * y[k];
      y[i] = x / l[i][i];
    }
    double x[3];
    for (int i = 2; i >= 0; --i) {
      double t = y[i];
      for (int k = i + 1; k < 3; ++k) t -= l[k][i] * x[k];
      x[i] = t / l[i][i];
    }
    for (int i = c; i < 3; ++i) r(i, c) = x[i];
  }
  return r;
}

double det_ch(SymTensor2 const& s)
{
  Tensor2 const m = s.full();
  Tensor2 const m2 = m * m;
  double const t1 = trace(m);
  double const t2 = trace(m2);
  double const t3 = ddot(m2, transpose(m));
  return (t1 * t1 * t1 - 3.0 * t1 * t2 + 2.0 * t3) / 6.0;
}

KelvinVec pack_kelvin(SymTensor2 const& s)
{
  KelvinVec v;
  v << s.v[0], s.v[1], s.v[2], sqrt2 * s.v[3], sqrt2 * s.v[4], sqrt2 * s.v[5];
  return v;
}

SymTensor2 unpack_kelvin(KelvinVec const& v)
{
  SymTensor2 s;
  s.v = {v[0], v[1], v[2], v[3] / sqrt2, v[4] / sqrt2, v[5] / sqrt2};
  return s;
}

KelvinMat pack_kelvin4(Tensor4 const& k)
{
  constexpr int ij[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
  KelvinMat m;
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q) {
      double const w = (p < 3 ? 1.0 : sqrt2) * (q < 3 ? 1.0 : sqrt2);
      m(p, q) = w * k(ij[p][0], ij[p][1], ij[q][0], ij[q][1]);
    }
  return m;
}

SymTensor2 contract(Tensor4 const& k, SymTensor2 const& s)
{
  SymTensor2 r = SymTensor2::zero();
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double x = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) x += k(i, j, a, b) * s(a, b);
      r(i, j) = x;
    }
  return r;
}

}  // namespace viscopann
