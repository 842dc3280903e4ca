#include "viscopann/constitutive.hpp"

namespace viscopann {

SymTensor2 ConstitutiveModel::rate(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const
{
  return 2.0 * dissipation_gradient(e, force(e, Cbar, Ci), Ci, Cbar);
}

Tensor2 ConstitutiveModel::rate_factor(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const
{
  return rate(e, Cbar, Ci).full() * inverse(Ci).full();
}

Tensor2T<ad::Var> ConstitutiveModel::rate_factor_ad(int, SymTensor2 const&, SymTensor2T<ad::Var> const&) const
{
  throw std::runtime_error("this model has no differentiable rate factor");
}

StressResult stress(Tensor2 const& F, std::span<SymTensor2 const> Ci, double p, ConstitutiveModel const& model)
{
  SymTensor2 const C = right_cauchy_green(F);
  StressResult r;
  r.p = p;
  r.P_eq = F * model.stress_eq(C).full();
  r.P = r.P_eq;
  r.P_neq.assign(model.num_elements(), Tensor2::zero());
  for (int e = 0; e < model.num_elements(); ++e) {
    if (!model.is_active(e)) continue;
    r.P_neq[e] = F * model.stress_neq(e, C, Ci[e]).full();
    r.P += r.P_neq[e];
  }
  r.P += p * cofactor(F);
  return r;
}

double plane_stress_multiplier(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model)
{
  StressResult const r = stress(F, Ci, 0.0, model);
  return -r.P(2, 2) / cofactor(F)(2, 2);
}

std::vector<SymTensor2> forces(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model)
{
  DeformationState const s = isochoric_split(F);
  std::vector<SymTensor2> A(model.num_elements(), SymTensor2::zero());
  for (int e = 0; e < model.num_elements(); ++e)
    if (model.is_active(e)) A[e] = model.force(e, s.Cbar, Ci[e]);
  return A;
}

std::vector<EvolutionRate> evolution_rate(Tensor2 const& F, std::span<SymTensor2 const> Ci,
                                          ConstitutiveModel const& model)
{
  DeformationState const s = isochoric_split(F);
  std::vector<EvolutionRate> out(model.num_elements(), EvolutionRate{SymTensor2::zero(), Tensor2::zero()});
  for (int e = 0; e < model.num_elements(); ++e) {
    if (!model.is_active(e)) continue;
    out[e].rate = model.rate(e, s.Cbar, Ci[e]);
    out[e].H = out[e].rate.full() * inverse(Ci[e]).full();
  }
  return out;
}

double dissipation_rate(Tensor2 const& F, std::span<SymTensor2 const> Ci, ConstitutiveModel const& model)
{
  DeformationState const s = isochoric_split(F);
  double d = 0.0;
  for (int e = 0; e < model.num_elements(); ++e) {
    if (!model.is_active(e)) continue;
    SymTensor2 const A = model.force(e, s.Cbar, Ci[e]);
    d += ddot(A, model.dissipation_gradient(e, A, Ci[e], s.Cbar));
  }
  return d;
}

}  // namespace viscopann
