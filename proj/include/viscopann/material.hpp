#pragma once

//! \file material.hpp
//! \brief Physics-augmented neural network model: one equilibrium energy
//! network and, per Maxwell element, an energy network, a dual dissipation
//! network and a gate shared by both.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "viscopann/constitutive.hpp"
#include "viscopann/ficnn.hpp"

namespace viscopann {

struct PannArch
{
  int elements = 5;
  FicnnArch eq{2, {8}};
  FicnnArch neq{2, {8}};
  FicnnArch diss{9, {16}};
  GateConfig gate;
  double gate_init = 0.75;  ///< initial gate variable, inside the unclipped range
};

void to_json(nlohmann::json& j, PannArch const& a);
void from_json(nlohmann::json const& j, PannArch& a);

template <class T>
class PannKernel;

class PannModel : public ConstitutiveModel
{
 public:
  explicit PannModel(PannArch arch);

  /// Random feasible parameters, gates at arch.gate_init.
  static PannModel random(PannArch arch, std::uint64_t seed);

  PannArch const& arch() const { return arch_; }
  FicnnLayout const& eq_layout() const { return eq_; }
  FicnnLayout const& neq_layout() const { return neq_; }
  FicnnLayout const& diss_layout() const { return diss_; }

  int num_params() const { return static_cast<int>(theta_.size()); }
  std::span<double> params() { return theta_; }
  std::span<double const> params() const { return theta_; }

  int eq_offset() const { return 0; }
  int neq_offset(int e) const { return eq_.size() + e * neq_.size(); }
  int diss_offset(int e) const { return eq_.size() + arch_.elements * neq_.size() + e * diss_.size(); }
  int gate_offset(int e) const { return eq_.size() + arch_.elements * (neq_.size() + diss_.size()) + e; }

  /// Box constraints of the feasible set; pruned gates are pinned to 0.
  std::vector<double> lower_bounds() const;
  std::vector<double> upper_bounds() const;
  /// Clamp parameters into the feasible set.
  void project();

  double gate(int e) const;
  int active_count() const;
  /// Switch off elements with gate value below threshold; returns the number pruned.
  int prune(double threshold);

  template <class T>
  PannKernel<T> kernel(std::span<T const> theta) const;

  int num_elements() const override { return arch_.elements; }
  bool is_active(int e) const override { return active_[e]; }
  double free_energy(SymTensor2 const& C, std::span<SymTensor2 const> Ci) const override;
  SymTensor2 stress_eq(SymTensor2 const& C) const override;
  SymTensor2 stress_neq(int e, SymTensor2 const& C, SymTensor2 const& Ci) const override;
  SymTensor2 force(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const override;
  double dual_dissipation(int e, SymTensor2 const& A, SymTensor2 const& Ci, SymTensor2 const& Cbar) const override;
  SymTensor2 dissipation_gradient(int e, SymTensor2 const& A, SymTensor2 const& Ci,
                                  SymTensor2 const& Cbar) const override;
  LinearParams linear_params() const override;

  Tensor2 rate_factor(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const override;
  Tensor2T<ad::Var> rate_factor_ad(int e, SymTensor2 const& Cbar, SymTensor2T<ad::Var> const& Ci) const override;

  nlohmann::json to_json() const;
  static PannModel from_json(nlohmann::json const& j);

 private:
  PannArch arch_;
  FicnnLayout eq_, neq_, diss_;
  std::vector<double> theta_;
  std::vector<bool> active_;
};

/// Constitutive kernels of a PannModel evaluated with parameters of scalar type T.
template <class T>
class PannKernel
{
 public:
  PannKernel(PannModel const& m, std::span<T const> theta) : m_(m), th_(theta) {}

  bool active(int e) const { return m_.is_active(e); }
  T gate(int e) const { return gate_eval<T>(th_[m_.gate_offset(e)], m_.arch().gate); }

  std::span<T const> eq_params() const { return th_.subspan(m_.eq_offset(), m_.eq_layout().size()); }
  std::span<T const> neq_params(int e) const { return th_.subspan(m_.neq_offset(e), m_.neq_layout().size()); }
  std::span<T const> diss_params(int e) const { return th_.subspan(m_.diss_offset(e), m_.diss_layout().size()); }

  T energy_eq(SymTensor2T<T> const& Cbar) const
  {
    return psi_eq<T>(m_.eq_layout(), eq_params(), eq_invariants(Cbar));
  }

  T energy_neq(int e, SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci) const
  {
    return psi_neq<T>(m_.neq_layout(), neq_params(e), gate(e), neq_invariants(Cbar, Ci));
  }

  /// 2 d(psi_eq)/dC.
  SymTensor2T<T> stress_eq(SymTensor2T<T> const& C) const
  {
    std::array<T, 2> g;
    psi_eq<T>(m_.eq_layout(), eq_params(), eq_invariants(unimodular(C)), &g);
    auto const dI = eq_invariants_grad_C(C);
    return T(2.0) * (g[0] * dI[0] + g[1] * dI[1]);
  }

  /// 2 d(psi_neq)/dC at fixed Ci.
  SymTensor2T<T> stress_neq(int e, SymTensor2T<T> const& C, SymTensor2T<T> const& Ci) const
  {
    std::array<T, 2> g;
    psi_neq<T>(m_.neq_layout(), neq_params(e), gate(e), neq_invariants(unimodular(C), Ci), &g);
    auto const dI = neq_invariants_grad_C(C, Ci);
    return T(2.0) * (g[0] * dI[0] + g[1] * dI[1]);
  }

  /// -2 d(psi_neq)/dCi.
  SymTensor2T<T> force(int e, SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci) const
  {
    std::array<T, 2> g;
    psi_neq<T>(m_.neq_layout(), neq_params(e), gate(e), neq_invariants(Cbar, Ci), &g);
    auto const dI = neq_invariants_grad_Ci(Cbar, Ci);
    return T(-2.0) * (g[0] * dI[0] + g[1] * dI[1]);
  }

  /// d(phi*)/dAp, the gradient before pulling back through the projection.
  SymTensor2T<T> diss_grad_Ap(int e, SymTensor2T<T> const& Ap, SymTensor2T<T> const& Cbar, T* value_out = nullptr) const
  {
    DissInvariantsT<T> g;
    T const v = phi_star<T>(m_.diss_layout(), diss_params(e), gate(e), diss_invariants(Ap, Cbar),
                            diss_invariants_at_rest(Cbar), &g);
    if (value_out) *value_out = v;
    auto const dI = diss_invariants_grad_Ap(Ap, Cbar);
    SymTensor2T<T> G = SymTensor2T<T>::zero();
    for (int k = 0; k < 9; ++k)
      if (k != 3 && k != 4) G += g[k] * dI[k];
    return G;
  }

  T dual_dissipation(int e, SymTensor2T<T> const& A, SymTensor2T<T> const& Ci, SymTensor2T<T> const& Cbar) const
  {
    return phi_star<T>(m_.diss_layout(), diss_params(e), gate(e), diss_invariants(project_force(A, Ci), Cbar),
                       diss_invariants_at_rest(Cbar));
  }

  SymTensor2T<T> dissipation_gradient(int e, SymTensor2T<T> const& A, SymTensor2T<T> const& Ci,
                                      SymTensor2T<T> const& Cbar) const
  {
    return project_gradient(diss_grad_Ap(e, project_force(A, Ci), Cbar), Ci);
  }

  /// H with rate = H Ci, H = 2 (G Ci^{-1} - (1/3) tr(G Ci^{-1}) I).
  Tensor2T<T> rate_factor(int e, SymTensor2T<T> const& Cbar, SymTensor2T<T> const& Ci) const
  {
    SymTensor2T<T> const Ci_inv = inverse(Ci);
    SymTensor2T<T> const A = force(e, Cbar, Ci);
    SymTensor2T<T> const Ap = A - (ddot(Ci, A) / T(3.0)) * Ci_inv;
    Tensor2T<T> M = diss_grad_Ap(e, Ap, Cbar) * Ci_inv;
    T const t = trace(M) / T(3.0);
    for (int k = 0; k < 9; k += 4) M.a[k] -= t;
    return T(2.0) * M;
  }

  /// Plane-stress first Piola-Kirchhoff stress for a plane-stress-shaped F.
  Tensor2T<T> plane_stress(Tensor2 const& F, std::span<SymTensor2T<T> const> Ci, T* p_out = nullptr) const
  {
    SymTensor2T<T> const C = cast<T>(right_cauchy_green(F));
    SymTensor2T<T> S = stress_eq(C);
    for (int e = 0; e < m_.num_elements(); ++e)
      if (active(e)) S += stress_neq(e, C, Ci[e]);
    Tensor2T<T> P = cast<T>(F) * S.full();
    Tensor2 const cof = cofactor(F);
    T const p = -P(2, 2) / T(cof(2, 2));
    for (int k = 0; k < 9; ++k) P.a[k] += p * T(cof.a[k]);
    if (p_out) *p_out = p;
    return P;
  }

 private:
  PannModel const& m_;
  std::span<T const> th_;
};

template <class T>
PannKernel<T> PannModel::kernel(std::span<T const> theta) const
{
  return PannKernel<T>(*this, theta);
}

/// Moduli and viscosities from the network derivatives at the reference state.
LinearParams extract_linear_params(ConstitutiveModel const& model);

/// Scales output weights and skip connections so that mu = mu_e = mu_target and
/// the element relaxation times equal tau_target.
void rescale_initialization(PannModel& model, double mu_target, std::span<double const> tau_target);

/// Loads either a ground-truth or a network model file.
std::unique_ptr<ConstitutiveModel> load_model(std::filesystem::path const& path);
std::unique_ptr<ConstitutiveModel> model_from_json(nlohmann::json const& j);
void save_model(PannModel const& model, std::filesystem::path const& path);

}  // namespace viscopann
