#pragma once

//! \file ad.hpp
//! \brief Tape-based reverse-mode automatic differentiation for scalar code.
//!
//! Every thread owns one tape. A recording starts with Tape::clear(), leaves
//! are created with Var::leaf(), and any number of reverse sweeps can be run
//! over the same recording with different output seeds. Constants (Var built
//! from a double) never touch the tape.

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace viscopann::ad {

struct Node
{
  int parent[2];
  double partial[2];
};

class Tape
{
 public:
  void clear()
  {
    nodes_.clear();
    adjoints_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

  int push_leaf()
  {
    nodes_.push_back(Node{{-1, -1}, {0.0, 0.0}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  int push(int p0, double d0, int p1 = -1, double d1 = 0.0)
  {
    nodes_.push_back(Node{{p0, p1}, {d0, d1}});
    return static_cast<int>(nodes_.size()) - 1;
  }

  /// Reverse sweep seeded with weights on output nodes. Adjoints of every
  /// node are available through adjoint() afterwards.
  void sweep(std::span<const std::pair<int, double>> seeds)
  {
    adjoints_.assign(nodes_.size(), 0.0);
    for (auto const& [idx, w] : seeds) {
      if (idx >= 0) adjoints_[idx] += w;
    }
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      double const a = adjoints_[k];
      if (a == 0.0) continue;
      Node const& n = nodes_[k];
      if (n.parent[0] >= 0) adjoints_[n.parent[0]] += a * n.partial[0];
      if (n.parent[1] >= 0) adjoints_[n.parent[1]] += a * n.partial[1];
    }
  }

  double adjoint(int idx) const { return idx >= 0 ? adjoints_[idx] : 0.0; }

 private:
  std::vector<Node> nodes_;
  std::vector<double> adjoints_;
};

inline Tape& tape()
{
  thread_local Tape t;
  return t;
}

class Var
{
 public:
  Var() = default;
  Var(double v) : v_(v), i_(-1) {}  // NOLINT: implicit constants are intended

  static Var leaf(double v)
  {
    Var x;
    x.v_ = v;
    x.i_ = tape().push_leaf();
    return x;
  }

  double value() const { return v_; }
  int index() const { return i_; }
  bool is_constant() const { return i_ < 0; }

  /// Node with up to two recorded parents; constant parents are dropped.
  static Var make(double v, Var const& a, double da)
  {
    Var r;
    r.v_ = v;
    r.i_ = a.i_ < 0 ? -1 : tape().push(a.i_, da);
    return r;
  }

  static Var make(double v, Var const& a, double da, Var const& b, double db)
  {
    Var r;
    r.v_ = v;
    if (a.i_ < 0 && b.i_ < 0) {
      r.i_ = -1;
    } else if (a.i_ < 0) {
      r.i_ = tape().push(b.i_, db);
    } else if (b.i_ < 0) {
      r.i_ = tape().push(a.i_, da);
    } else {
      r.i_ = tape().push(a.i_, da, b.i_, db);
    }
    return r;
  }

  Var& operator+=(Var const& o) { return *this = *this + o; }
  Var& operator-=(Var const& o) { return *this = *this - o; }
  Var& operator*=(Var const& o) { return *this = *this * o; }
  Var& operator/=(Var const& o) { return *this = *this / o; }

  friend Var operator+(Var const& a, Var const& b) { return make(a.v_ + b.v_, a, 1.0, b, 1.0); }
  friend Var operator-(Var const& a, Var const& b) { return make(a.v_ - b.v_, a, 1.0, b, -1.0); }
  friend Var operator*(Var const& a, Var const& b) { return make(a.v_ * b.v_, a, b.v_, b, a.v_); }
  friend Var operator/(Var const& a, Var const& b)
  {
    double const inv = 1.0 / b.v_;
    return make(a.v_ * inv, a, inv, b, -a.v_ * inv * inv);
  }
  friend Var operator-(Var const& a) { return make(-a.v_, a, -1.0); }

  friend bool operator<(Var const& a, Var const& b) { return a.v_ < b.v_; }
  friend bool operator>(Var const& a, Var const& b) { return a.v_ > b.v_; }

 private:
  double v_ = 0.0;
  int i_ = -1;
};

inline Var exp(Var const& a)
{
  double const e = std::exp(a.value());
  return Var::make(e, a, e);
}
inline Var log(Var const& a) { return Var::make(std::log(a.value()), a, 1.0 / a.value()); }
inline Var sqrt(Var const& a)
{
  double const s = std::sqrt(a.value());
  return Var::make(s, a, 0.5 / s);
}
inline Var tanh(Var const& a)
{
  double const t = std::tanh(a.value());
  return Var::make(t, a, 1.0 - t * t);
}
inline Var pow(Var const& a, double p)
{
  double const v = std::pow(a.value(), p);
  return Var::make(v, a, p * std::pow(a.value(), p - 1.0));
}
inline Var cbrt(Var const& a)
{
  double const c = std::cbrt(a.value());
  return Var::make(c, a, 1.0 / (3.0 * c * c));
}
inline Var abs(Var const& a) { return Var::make(std::abs(a.value()), a, a.value() < 0 ? -1.0 : 1.0); }

/// log(1 + e^x), evaluated without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x)
{
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double const e = std::exp(x);
  return e / (1.0 + e);
}
inline Var softplus(Var const& a) { return Var::make(softplus(a.value()), a, sigmoid(a.value())); }
inline Var sigmoid(Var const& a)
{
  double const s = sigmoid(a.value());
  return Var::make(s, a, s * (1.0 - s));
}

inline double value(double x) { return x; }
inline double value(Var const& x) { return x.value(); }

}  // namespace viscopann::ad

namespace viscopann {
using ad::value;
}
