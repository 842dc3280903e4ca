#pragma once

//! \file constitutive.hpp
//! \brief Model-agnostic constitutive interface for the generalized Maxwell
//! structure: one equilibrium branch and N Maxwell elements, each with its own
//! inelastic right Cauchy-Green tensor.

#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "viscopann/kinematics.hpp"
#include "viscopann/tensor3.hpp"

namespace viscopann {

struct ElementParams
{
  double mu = 0.0;   ///< shear modulus, MPa
  double eta = 0.0;  ///< viscosity, MPa s
  double tau() const { return mu > 0.0 ? eta / mu : std::numeric_limits<double>::infinity(); }
};

/// Small-strain moduli and viscosities implied by a model.
struct LinearParams
{
  double mu = 0.0;
  std::vector<ElementParams> elements;
};

class ConstitutiveModel
{
 public:
  virtual ~ConstitutiveModel() = default;

  virtual int num_elements() const = 0;
  /// Inactive elements contribute nothing and are not integrated.
  virtual bool is_active(int e) const { return e >= 0 && e < num_elements(); }

  /// Total free energy at full C and per-element Ci.
  virtual double free_energy(SymTensor2 const& C, std::span<SymTensor2 const> Ci) const = 0;
  /// 2 d(psi_eq)/dC.
  virtual SymTensor2 stress_eq(SymTensor2 const& C) const = 0;
  /// 2 d(psi_neq of element e)/dC at fixed Ci.
  virtual SymTensor2 stress_neq(int e, SymTensor2 const& C, SymTensor2 const& Ci) const = 0;
  /// Thermodynamic force -2 d(psi_neq)/dCi.
  virtual SymTensor2 force(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const = 0;
  /// Dual dissipation potential at an arbitrary force A.
  virtual double dual_dissipation(int e, SymTensor2 const& A, SymTensor2 const& Ci, SymTensor2 const& Cbar) const = 0;
  /// d(phi*)/dA.
  virtual SymTensor2 dissipation_gradient(int e, SymTensor2 const& A, SymTensor2 const& Ci,
                                          SymTensor2 const& Cbar) const = 0;

  virtual LinearParams linear_params() const = 0;

  /// Evolution rate 2 d(phi*)/dA evaluated at the current force.
  SymTensor2 rate(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const;
  /// Factor H with rate = H Ci.
  virtual Tensor2 rate_factor(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const;

  /// Rate factor recorded on the AD tape with Ci as the independent variable.
  virtual Tensor2T<ad::Var> rate_factor_ad(int e, SymTensor2 const& Cbar, SymTensor2T<ad::Var> const& Ci) const;
};

struct StressResult
{
  Tensor2 P;                  ///< first Piola-Kirchhoff stress, MPa
  double p = 0.0;             ///< Lagrange multiplier, MPa
  Tensor2 P_eq;               ///< equilibrium branch
  std::vector<Tensor2> P_neq; ///< one per element, zero if inactive
};

/// P = F (S_eq + sum S_neq) + p cof F for a given multiplier p.
StressResult stress(Tensor2 const& F, std::span<SymTensor2 const> Ci, double p, ConstitutiveModel const& model);

/// Multiplier that makes P33 vanish for a plane-stress-shaped F.
double plane_stress_multiplier(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model);

std::vector<SymTensor2> forces(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model);

struct EvolutionRate
{
  SymTensor2 rate;
  Tensor2 H;
};

std::vector<EvolutionRate> evolution_rate(Tensor2 const& F, std::span<SymTensor2 const> Ci,
                                          ConstitutiveModel const& model);

/// Dissipation rate sum_e A_e : d(phi*_e)/dA_e.
double dissipation_rate(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model);

}  // namespace viscopann
