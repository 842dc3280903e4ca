#pragma once

//! \file ficnn.hpp
//! \brief Monotone fully input-convex networks, gate layers and the corrected
//! potentials built from them.
//!
//! A network with hidden layers k = 1..L computes
//!   z_1 = sp(Wx_1 x + b_1),  z_k = sp(Wz_k z_{k-1} + Wx_k x + b_k),
//!   out = W . z_L + S . x + B,
//! with sp the softplus function. All weights are non-negative; biases are
//! free. Parameters live in a flat array described by FicnnLayout.

#include <span>
#include <vector>

#include "viscopann/ad.hpp"
#include "viscopann/kinematics.hpp"
#include "viscopann/rng.hpp"

namespace viscopann {

struct FicnnArch
{
  int inputs = 2;
  std::vector<int> hidden{8};
};

class FicnnLayout
{
 public:
  struct Layer
  {
    int width;
    int prev;  ///< width of the previous hidden layer, 0 for the first
    int wx;    ///< offset of the width x inputs block
    int wz;    ///< offset of the width x prev block, -1 for the first layer
    int b;     ///< offset of the bias vector
  };

  FicnnLayout() = default;
  explicit FicnnLayout(FicnnArch arch);

  FicnnArch const& arch() const { return arch_; }
  int inputs() const { return arch_.inputs; }
  int size() const { return size_; }
  std::vector<Layer> const& layers() const { return layers_; }
  int out_w() const { return out_w_; }
  int out_s() const { return out_s_; }
  int out_b() const { return out_b_; }
  int max_width() const { return max_width_; }

  /// True for entries constrained to be non-negative.
  std::vector<bool> nonneg_mask() const;

  /// Non-negative weights U(0, 1/fan_in); biases U(-0.5, 0.5).
  void initialize(std::span<double> params, Rng& rng) const;

 private:
  FicnnArch arch_;
  std::vector<Layer> layers_;
  int out_w_ = 0, out_s_ = 0, out_b_ = 0, size_ = 0, max_width_ = 0;
};

/// Network output; writes d(out)/dx into grad when it is non-empty.
template <class T>
T ficnn_eval(FicnnLayout const& L, std::span<T const> p, std::span<T const> x, std::span<T> grad = {})
{
  using std::size_t;
  int const n = L.inputs();
  auto const& layers = L.layers();
  std::vector<std::vector<T>> pre(layers.size()), z(layers.size());

  for (size_t k = 0; k < layers.size(); ++k) {
    auto const& ly = layers[k];
    pre[k].resize(ly.width);
    z[k].resize(ly.width);
    for (int i = 0; i < ly.width; ++i) {
      T a = p[ly.b + i];
      for (int j = 0; j < n; ++j) a += p[ly.wx + i * n + j] * x[j];
      if (k > 0)
        for (int j = 0; j < ly.prev; ++j) a += p[ly.wz + i * ly.prev + j] * z[k - 1][j];
      pre[k][i] = a;
      z[k][i] = ad::softplus(a);
    }
  }
  auto const& last = layers.back();
  T out = p[L.out_b()];
  for (int i = 0; i < last.width; ++i) out += p[L.out_w() + i] * z.back()[i];
  for (int j = 0; j < n; ++j) out += p[L.out_s() + j] * x[j];

  if (!grad.empty()) {
    for (int j = 0; j < n; ++j) grad[j] = p[L.out_s() + j];
    std::vector<T> dz(last.width);
    for (int i = 0; i < last.width; ++i) dz[i] = p[L.out_w() + i];
    for (size_t k = layers.size(); k-- > 0;) {
      auto const& ly = layers[k];
      std::vector<T> da(ly.width);
      for (int i = 0; i < ly.width; ++i) da[i] = dz[i] * ad::sigmoid(pre[k][i]);
      for (int i = 0; i < ly.width; ++i)
        for (int j = 0; j < n; ++j) grad[j] += p[ly.wx + i * n + j] * da[i];
      if (k > 0) {
        std::vector<T> dprev(ly.prev, T(0.0));
        for (int i = 0; i < ly.width; ++i)
          for (int j = 0; j < ly.prev; ++j) dprev[j] += p[ly.wz + i * ly.prev + j] * da[i];
        dz = std::move(dprev);
      }
    }
  }
  return out;
}

template <class T>
std::vector<T> ficnn_grad(FicnnLayout const& L, std::span<T const> p, std::span<T const> x)
{
  std::vector<T> g(L.inputs());
  ficnn_eval<T>(L, p, x, g);
  return g;
}

struct GateConfig
{
  double gamma = 1.025;
  double epsilon = 2.5;
};

/// min(1, gamma tanh(epsilon theta)).
template <class T>
T gate_eval(T const& theta, GateConfig const& cfg = {})
{
  using std::tanh;
  T const g = T(cfg.gamma) * tanh(T(cfg.epsilon) * theta);
  return value(g) >= 1.0 ? T(1.0) : g;
}

/// psi(I) - psi(3, 3) together with its gradient in I.
template <class T>
T psi_eq(FicnnLayout const& L, std::span<T const> p, EqInvariantsT<T> const& I, std::array<T, 2>* grad = nullptr)
{
  std::array<T, 2> const ref{T(3.0), T(3.0)};
  T const f = grad ? ficnn_eval<T>(L, p, I, *grad) : ficnn_eval<T>(L, p, I);
  return f - ficnn_eval<T>(L, p, ref);
}

/// g (psi(I) - psi(3, 3)) together with its gradient in I.
template <class T>
T psi_neq(FicnnLayout const& L, std::span<T const> p, T const& gate, NeqInvariantsT<T> const& I,
          std::array<T, 2>* grad = nullptr)
{
  T const v = psi_eq<T>(L, p, I, grad);
  if (grad)
    for (auto& g : *grad) g *= gate;
  return gate * v;
}

/// Corrected dual dissipation potential
///   g (h(I) - h(I0) - sum_{a linear} dh/dI_a(I0) I_a)
/// with I0 the invariant tuple at zero force for the same Cbar.
template <class T>
T phi_star(FicnnLayout const& L, std::span<T const> p, T const& gate, DissInvariantsT<T> const& I,
           DissInvariantsT<T> const& I0, DissInvariantsT<T>* grad = nullptr)
{
  DissInvariantsT<T> g0;
  T const h0 = ficnn_eval<T>(L, p, I0, g0);
  T h;
  if (grad) {
    h = ficnn_eval<T>(L, p, I, *grad);
    for (int a : linear_diss_invariants) (*grad)[a] -= g0[a];
    for (auto& g : *grad) g *= gate;
  } else {
    h = ficnn_eval<T>(L, p, I);
  }
  T v = h - h0;
  for (int a : linear_diss_invariants) v -= g0[a] * I[a];
  return gate * v;
}

}  // namespace viscopann
