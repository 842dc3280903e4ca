#pragma once

// Independent reference computations for the ground-truth model. They use
// Eigen's dense matrices and matrix functions only, so they share no code with
// the library kernels they check.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <functional>
#include <vector>

#include "viscopann/groundtruth.hpp"

namespace oracle {

using Mat3 = Eigen::Matrix3d;

struct Params
{
  double mu;
  std::vector<double> mu_e, eta_e;

  static Params from(viscopann::GroundTruthParams const& p)
  {
    Params r{p.mu, {}, {}};
    for (auto const& el : p.elements) {
      r.mu_e.push_back(el.mu);
      r.eta_e.push_back(el.eta);
    }
    return r;
  }
};

/// Uniaxial plane-stress deformation.
inline Mat3 uniaxial(double lambda)
{
  double const t = 1.0 / std::sqrt(lambda);
  return Eigen::Vector3d(lambda, t, t).asDiagonal();
}

/// Rate of Ci for one element: (mu/eta)(C - (1/3)(Ci^{-1} : C) Ci), with J = 1.
inline Mat3 rate(Mat3 const& C, Mat3 const& Ci, double mu, double eta)
{
  return (mu / eta) * (C - (Ci.inverse().cwiseProduct(C).sum() / 3.0) * Ci);
}

/// P11 for a diagonal plane-stress state with J = 1:
/// P = F (mu I + sum mu_e Ci^{-1} + q C^{-1}), q from P33 = 0.
inline double p11(Mat3 const& F, std::vector<Mat3> const& Ci, Params const& p)
{
  Mat3 const C = F.transpose() * F;
  Mat3 S = p.mu * Mat3::Identity();
  for (std::size_t e = 0; e < Ci.size(); ++e) S += p.mu_e[e] * Ci[e].inverse();
  Mat3 const Cinv = C.inverse();
  double const q = -S(2, 2) / Cinv(2, 2);
  S += q * Cinv;
  return (F * S)(0, 0);
}

/// Fourth-order Runge-Kutta integration with a stretch history lambda(t),
/// sampled at the given output times.
inline std::vector<double> rk4_uniaxial(std::function<double(double)> const& lambda, std::vector<double> const& t_out,
                                        int substeps_per_interval, Params const& p)
{
  std::size_t const N = p.mu_e.size();
  std::vector<Mat3> Ci(N, Mat3::Identity());
  std::vector<double> out;
  double t = 0.0;
  for (double t1 : t_out) {
    double const h = (t1 - t) / substeps_per_interval;
    for (int s = 0; s < substeps_per_interval; ++s) {
      auto C_at = [&](double tt) {
        Mat3 const F = uniaxial(lambda(tt));
        return Mat3(F.transpose() * F);
      };
      Mat3 const C0 = C_at(t), Ch = C_at(t + 0.5 * h), C1 = C_at(t + h);
      for (std::size_t e = 0; e < N; ++e) {
        Mat3 const& y = Ci[e];
        Mat3 const k1 = rate(C0, y, p.mu_e[e], p.eta_e[e]);
        Mat3 const k2 = rate(Ch, y + 0.5 * h * k1, p.mu_e[e], p.eta_e[e]);
        Mat3 const k3 = rate(Ch, y + 0.5 * h * k2, p.mu_e[e], p.eta_e[e]);
        Mat3 const k4 = rate(C1, y + h * k3, p.mu_e[e], p.eta_e[e]);
        Ci[e] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      t += h;
    }
    t = t1;
    out.push_back(p11(uniaxial(lambda(t)), Ci, p));
  }
  return out;
}

/// Modified implicit exponential step solved by fixed-point iteration with
/// Eigen's matrix square root and exponential; F is held at its end-of-step value.
inline Mat3 implicit_step(Mat3 const& Ci_prev, Mat3 const& C, double dt, double mu, double eta)
{
  Mat3 const S = Ci_prev.sqrt();
  Mat3 const Sinv = S.inverse();
  Mat3 Ci = Ci_prev;
  for (int it = 0; it < 500; ++it) {
    Mat3 const H = rate(C, Ci, mu, eta) * Ci.inverse();
    Mat3 M = Sinv * H * S;
    M = 0.5 * (M + M.transpose());
    Mat3 const next = S * (M * dt).exp() * S;
    double const d = (next - Ci).norm();
    Ci = next;
    if (d < 1e-15) break;
  }
  return Ci;
}

/// Uniaxial stress series from the independent implicit scheme.
inline std::vector<double> implicit_uniaxial(std::vector<double> const& lambda, std::vector<double> const& dt,
                                             Params const& p)
{
  std::size_t const N = p.mu_e.size();
  std::vector<Mat3> Ci(N, Mat3::Identity());
  std::vector<double> out;
  for (std::size_t n = 0; n < lambda.size(); ++n) {
    Mat3 const F = uniaxial(lambda[n]);
    Mat3 const C = F.transpose() * F;
    for (std::size_t e = 0; e < N; ++e) Ci[e] = implicit_step(Ci[e], C, dt[n], p.mu_e[e], p.eta_e[e]);
    out.push_back(p11(F, Ci, p));
  }
  return out;
}

/// Exact uniaxial stress of the linear generalized Maxwell model
/// sigma = 3 mu eps + sum 3 mu_e (eps - eps_e),  d(eps_e)/dt = (eps - eps_e)/tau_e,
/// for a strain history that is linear between the given samples (eps(0) = 0).
inline std::vector<double> linear_maxwell(std::vector<double> const& t, std::vector<double> const& eps, double mu,
                                          std::vector<double> const& mu_e, std::vector<double> const& tau_e)
{
  std::size_t const N = mu_e.size();
  std::vector<double> u(N, 0.0);  // eps - eps_e
  std::vector<double> out;
  double t0 = 0.0, e0 = 0.0;
  for (std::size_t n = 0; n < t.size(); ++n) {
    double const dt = t[n] - t0;
    double const r = dt > 0.0 ? (eps[n] - e0) / dt : 0.0;
    double sigma = 3.0 * mu * eps[n];
    for (std::size_t e = 0; e < N; ++e) {
      if (std::isfinite(tau_e[e])) {
        double const decay = std::exp(-dt / tau_e[e]);
        u[e] = r * tau_e[e] + (u[e] - r * tau_e[e]) * decay;
      } else {
        u[e] += r * dt;
      }
      sigma += 3.0 * mu_e[e] * u[e];
    }
    out.push_back(sigma);
    t0 = t[n];
    e0 = eps[n];
  }
  return out;
}

}  // namespace oracle
