#include "viscopann/groundtruth.hpp"

#include <fmt/format.h>

namespace viscopann {

GroundTruthParams GroundTruthParams::reference()
{
  return GroundTruthParams{0.3, {{0.1, 0.5}, {0.2, 4.0}, {0.3, 24.0}}};
}

void GroundTruthParams::validate() const
{
  if (!(mu > 0.0)) throw std::runtime_error("ground truth: mu must be positive");
  if (elements.empty()) throw std::runtime_error("ground truth: at least one element required");
  for (std::size_t e = 0; e < elements.size(); ++e)
    if (!(elements[e].mu > 0.0) || !(elements[e].eta > 0.0))
      throw std::runtime_error(fmt::format("ground truth: element {} needs positive mu and eta", e));
}

void to_json(nlohmann::json& j, GroundTruthParams const& p)
{
  j = nlohmann::json{{"mu", p.mu}, {"elements", nlohmann::json::array()}};
  for (auto const& el : p.elements) j["elements"].push_back({{"mu", el.mu}, {"eta", el.eta}});
}

void from_json(nlohmann::json const& j, GroundTruthParams& p)
{
  p.mu = j.at("mu").get<double>();
  p.elements.clear();
  for (auto const& el : j.at("elements")) p.elements.push_back({el.at("mu").get<double>(), el.at("eta").get<double>()});
  p.validate();
}

double gt_energy(SymTensor2 const& Cbar, std::span<SymTensor2 const> Cbar_i, GroundTruthParams const& p)
{
  double psi = 0.5 * p.mu * (trace(Cbar) - 3.0);
  for (std::size_t e = 0; e < p.elements.size(); ++e)
    psi += 0.5 * p.elements[e].mu * (neq_invariants(Cbar, Cbar_i[e])[0] - 3.0);
  return psi;
}

SymTensor2 gt_force(SymTensor2 const& Cbar, SymTensor2 const& Ci, double mu_e)
{
  SymTensor2 const Ci_inv = inv_spd(Ci);
  double const d13 = std::cbrt(det(Ci));
  return (mu_e * d13) * (sandwich(Ci_inv, Cbar) - (ddot(Cbar, Ci_inv) / 3.0) * Ci_inv);
}

double gt_dual_dissipation(SymTensor2 const& A, SymTensor2 const& Ci, double eta)
{
  Tensor2 At = A.full() * Ci.full();
  double const tr = ddot(A, Ci) / 3.0;
  for (int k = 0; k < 9; k += 4) At.a[k] -= tr;
  double const i2 = 0.5 * trace(At * At);
  return i2 / (2.0 * eta);
}

SymTensor2 gt_evolution_rate(SymTensor2 const& C, SymTensor2 const& Ci, ElementParams const& el)
{
  return (el.mu / el.eta) * (C - (ddot(inv_spd(Ci), C) / 3.0) * Ci);
}

GroundTruthModel::GroundTruthModel(GroundTruthParams params) : params_(std::move(params)) { params_.validate(); }

double GroundTruthModel::free_energy(SymTensor2 const& C, std::span<SymTensor2 const> Ci) const
{
  return gt_energy(unimodular(C), Ci, params_);
}

SymTensor2 GroundTruthModel::stress_eq(SymTensor2 const& C) const
{
  return params_.mu * eq_invariants_grad_C(C)[0];
}

SymTensor2 GroundTruthModel::stress_neq(int e, SymTensor2 const& C, SymTensor2 const& Ci) const
{
  return params_.elements[e].mu * neq_invariants_grad_C(C, Ci)[0];
}

SymTensor2 GroundTruthModel::force(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const
{
  return gt_force(Cbar, Ci, params_.elements[e].mu);
}

double GroundTruthModel::dual_dissipation(int e, SymTensor2 const& A, SymTensor2 const& Ci, SymTensor2 const&) const
{
  return gt_dual_dissipation(A, Ci, params_.elements[e].eta);
}

SymTensor2 GroundTruthModel::dissipation_gradient(int e, SymTensor2 const& A, SymTensor2 const& Ci,
                                                  SymTensor2 const&) const
{
  double const eta = params_.elements[e].eta;
  return (1.0 / (2.0 * eta)) * (sandwich(Ci, A) - (ddot(A, Ci) / 3.0) * Ci);
}

Tensor2T<ad::Var> GroundTruthModel::rate_factor_ad(int e, SymTensor2 const& Cbar,
                                                   SymTensor2T<ad::Var> const& Ci) const
{
  return gt_rate_factor<ad::Var>(cast<ad::Var>(Cbar), Ci, params_.elements[e]);
}

LinearParams GroundTruthModel::linear_params() const
{
  // Derivatives of the potentials with respect to their invariants at the
  // reference state: d(psi)/d(Ibar_1) = mu/2, d(psi)/d(Ibar_2) = 0 and
  // d(phi*)/d(Itilde_2) = 1/(2 eta).
  LinearParams lp;
  lp.mu = 2.0 * (0.5 * params_.mu + 0.0);
  for (auto const& el : params_.elements) {
    double const dphi = 1.0 / (2.0 * el.eta);
    lp.elements.push_back({2.0 * (0.5 * el.mu + 0.0), 1.0 / (2.0 * dphi)});
  }
  return lp;
}

}  // namespace viscopann
