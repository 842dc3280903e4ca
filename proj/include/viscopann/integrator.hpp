#pragma once

//! \file integrator.hpp
//! \brief Exponential-map time integration of the inelastic right Cauchy-Green
//! tensors and the plane-stress path driver.
//!
//! The implicit scheme solves
//!   R(Ci) = Ci - S exp(Hhat dt) S = 0,  S = sqrt(Ci_prev),  Hhat = sym(S^{-1} H(Ci) S)
//! by Newton's method in Kelvin-Mandel coordinates. The explicit scheme is
//! Ci = exp(H(Ci_prev) dt) Ci_prev and also serves as the Newton predictor.

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "viscopann/constitutive.hpp"
#include "viscopann/tensor3.hpp"

namespace viscopann {

enum class TangentMode
{
  forward_difference,  ///< Kelvin columns by forward differences of R
  analytic,            ///< exact Jacobian of R from the AD tape
};

enum class Scheme
{
  explicit_exp,
  implicit_exp,
};

struct IntegratorConfig
{
  double tol = 1e-10;  ///< Kelvin norm of the residual
  int n_iter = 20;
  TangentMode tangent = TangentMode::forward_difference;
  double fd_step = 1e-8;  ///< relative step of the forward-difference tangent
};

/// Newton failure or loss of positive definiteness during a step.
class ConvergenceError : public std::runtime_error
{
 public:
  ConvergenceError(std::string const& what, double residual, int iterations, int step = -1)
      : std::runtime_error(what), residual(residual), iterations(iterations), step(step)
  {
  }
  double residual;
  int iterations;
  int step;
};

/// Rate factor H as a function of the current inelastic tensor.
using RateFactorFn = std::function<Tensor2(SymTensor2 const& Ci)>;
using RateFactorAdFn = std::function<Tensor2T<ad::Var>(SymTensor2T<ad::Var> const& Ci)>;

/// Quantities fixed during one implicit step.
struct StepContext
{
  SymTensor2 S;      ///< sqrt(Ci_prev)
  SymTensor2 S_inv;
  double dt = 0.0;

  StepContext(SymTensor2 const& Ci_prev, double dt);
};

/// sym(S^{-1} H S).
template <class T>
SymTensor2T<T> modified_rate_factor(Tensor2T<T> const& H, SymTensor2T<T> const& S, SymTensor2T<T> const& S_inv)
{
  return SymTensor2T<T>::sym(S_inv.full() * H * S.full());
}

/// Residual of the modified implicit scheme on the AD tape; uses the Pade exponential.
SymTensor2T<ad::Var> implicit_residual_ad(SymTensor2T<ad::Var> const& Ci, Tensor2T<ad::Var> const& H,
                                          SymTensor2T<ad::Var> const& S, SymTensor2T<ad::Var> const& S_inv, double dt);

/// Residual of the modified implicit scheme; uses the spectral exponential.
SymTensor2 implicit_residual(StepContext const& ctx, SymTensor2 const& Ci, Tensor2 const& H);

struct StepDiagnostics
{
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;  ///< residual norm before each Newton update and at exit
};

struct StepResult
{
  SymTensor2 Ci;
  StepDiagnostics diag;
};

/// exp(H dt) Ci_prev, symmetrized.
SymTensor2 step_explicit(SymTensor2 const& Ci_prev, double dt, RateFactorFn const& H);

StepResult step_implicit(SymTensor2 const& Ci_prev, double dt, RateFactorFn const& H, IntegratorConfig const& cfg,
                         RateFactorAdFn const& H_ad = {});

/// Forward-difference Kelvin tangent dR/dCi.
KelvinMat newton_tangent_fd(StepContext const& ctx, SymTensor2 const& Ci, RateFactorFn const& H, double rel_step);
/// Exact Kelvin tangent dR/dCi from the tape.
KelvinMat newton_tangent_ad(StepContext const& ctx, SymTensor2 const& Ci, RateFactorAdFn const& H);

/// Model-based single steps for element e at the new deformation F_new.
SymTensor2 step_explicit(ConstitutiveModel const& model, int e, SymTensor2 const& Ci_prev, Tensor2 const& F_new,
                         double dt);
StepResult step_implicit(ConstitutiveModel const& model, int e, SymTensor2 const& Ci_prev, Tensor2 const& F_new,
                         double dt, IntegratorConfig const& cfg);

/// Sets F33 = 1/(F11 F22 - F12 F21) and clears the out-of-plane shear terms.
Tensor2 complete_plane_stress(Tensor2 F);

/// Resolves the Lagrange multiplier for a given state.
using PressureResolver =
    std::function<double(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model)>;

struct LoadPath
{
  std::vector<double> dt;       ///< s
  std::vector<Tensor2> F;
  std::vector<Tensor2> P;       ///< MPa; empty until labeled
  std::string name;

  std::size_t size() const { return dt.size(); }
  bool labeled() const { return P.size() == dt.size(); }
};

struct PathStep
{
  std::vector<SymTensor2> Ci;
  Tensor2 P;
  double p = 0.0;
  double dissipation = 0.0;  ///< sum_e A_e : d(phi*_e)/dA_e at the end of the step
  int max_iterations = 0;
  double max_residual = 0.0;
};

struct PathResult
{
  std::vector<PathStep> steps;
};

struct SimulationOptions
{
  Scheme scheme = Scheme::implicit_exp;
  IntegratorConfig integrator;
  PressureResolver pressure;  ///< plane stress when empty
};

/// Runs a load path from F = Ci = I. Throws ConvergenceError tagged with the step index.
PathResult simulate_path(LoadPath const& path, ConstitutiveModel const& model, SimulationOptions const& opts = {});

}  // namespace viscopann
