#pragma once

//! \file groundtruth.hpp
//! \brief Classical incompressible generalized Maxwell model with neo-Hookean
//! branches and a quadratic dual dissipation potential.

#include <string>
#include <vector>

#include <json.hpp>

#include "viscopann/constitutive.hpp"

namespace viscopann {

struct GroundTruthParams
{
  double mu = 0.0;
  std::vector<ElementParams> elements;

  /// Three-element reference set used throughout the synthetic examples.
  static GroundTruthParams reference();
  void validate() const;
};

void to_json(nlohmann::json& j, GroundTruthParams const& p);
void from_json(nlohmann::json const& j, GroundTruthParams& p);

/// (mu/2)(Ibar_1 - 3) + sum (mu_e/2)(Ibar_1^e - 3).
double gt_energy(SymTensor2 const& Cbar, std::span<SymTensor2 const> Cbar_i, GroundTruthParams const& p);

/// Closed form of -2 d/dCi of (mu_e/2)(Cbar : Cbar_i^{-1} - 3).
SymTensor2 gt_force(SymTensor2 const& Cbar, SymTensor2 const& Ci, double mu_e);

/// Itilde_2 / (2 eta) with Atilde = A Ci - (1/3)(A : Ci) I.
double gt_dual_dissipation(SymTensor2 const& A, SymTensor2 const& Ci, double eta);

/// (mu_e/eta_e)(C - (1/3)(Ci^{-1} : C) Ci).
SymTensor2 gt_evolution_rate(SymTensor2 const& C, SymTensor2 const& Ci, ElementParams const& el);

/// H with rate = H Ci for one element, from the force and dissipation closed forms.
template <class T>
Tensor2T<T> gt_rate_factor(SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci, ElementParams const& el)
{
  using std::cbrt;
  SymTensor2T<T> const Ci_inv = inverse(Ci);
  SymTensor2T<T> const A =
      (T(el.mu) * cbrt(det(Ci))) * (sandwich(Ci_inv, Cbar) - (ddot(Cbar, Ci_inv) / T(3.0)) * Ci_inv);
  SymTensor2T<T> const rate = (T(1.0) / T(el.eta)) * (sandwich(Ci, A) - (ddot(A, Ci) / T(3.0)) * Ci);
  return rate * Ci_inv;
}

class GroundTruthModel : public ConstitutiveModel
{
 public:
  explicit GroundTruthModel(GroundTruthParams params);

  GroundTruthParams const& params() const { return params_; }

  int num_elements() const override { return static_cast<int>(params_.elements.size()); }
  double free_energy(SymTensor2 const& C, std::span<SymTensor2 const> Ci) const override;
  SymTensor2 stress_eq(SymTensor2 const& C) const override;
  SymTensor2 stress_neq(int e, SymTensor2 const& C, SymTensor2 const& Ci) const override;
  SymTensor2 force(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const override;
  double dual_dissipation(int e, SymTensor2 const& A, SymTensor2 const& Ci, SymTensor2 const& Cbar) const override;
  SymTensor2 dissipation_gradient(int e, SymTensor2 const& A, SymTensor2 const& Ci,
                                  SymTensor2 const& Cbar) const override;
  LinearParams linear_params() const override;
  Tensor2T<ad::Var> rate_factor_ad(int e, SymTensor2 const& Cbar, SymTensor2T<ad::Var> const& Ci) const override;

 private:
  GroundTruthParams params_;
};

}  // namespace viscopann
