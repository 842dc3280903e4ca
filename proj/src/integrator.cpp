#include "viscopann/integrator.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include <fmt/format.h>

#include "viscopann/kinematics.hpp"

namespace viscopann {

namespace {

constexpr double sqrt2 = std::numbers::sqrt2;

bool finite(KelvinVec const& v) { return v.allFinite(); }

}  // namespace

StepContext::StepContext(SymTensor2 const& Ci_prev, double dt_) : S(sqrtm_spd(Ci_prev)), S_inv(inverse(S)), dt(dt_) {}

SymTensor2T<ad::Var> implicit_residual_ad(SymTensor2T<ad::Var> const& Ci, Tensor2T<ad::Var> const& H,
                                          SymTensor2T<ad::Var> const& S, SymTensor2T<ad::Var> const& S_inv, double dt)
{
  using V = ad::Var;
  SymTensor2T<V> const Hh = modified_rate_factor(H, S, S_inv);
  SymTensor2T<V> const E = SymTensor2T<V>::sym(expm(V(dt) * Hh.full()));
  return Ci - sandwich(S, E);
}

SymTensor2 implicit_residual(StepContext const& ctx, SymTensor2 const& Ci, Tensor2 const& H)
{
  SymTensor2 const Hh = modified_rate_factor(H, ctx.S, ctx.S_inv);
  return Ci - sandwich(ctx.S, expm_sym(ctx.dt * Hh));
}

SymTensor2 step_explicit(SymTensor2 const& Ci_prev, double dt, RateFactorFn const& H)
{
  if (dt == 0.0) return Ci_prev;
  return SymTensor2::sym(expm(dt * H(Ci_prev)) * Ci_prev.full());
}

KelvinMat newton_tangent_fd(StepContext const& ctx, SymTensor2 const& Ci, RateFactorFn const& H, double rel_step)
{
  KelvinVec const v = pack_kelvin(Ci);
  KelvinVec const r0 = pack_kelvin(implicit_residual(ctx, Ci, H(Ci)));
  KelvinMat K;
  for (int k = 0; k < 6; ++k) {
    double const h = rel_step * std::max(1.0, std::abs(v[k]));
    KelvinVec vp = v;
    vp[k] += h;
    SymTensor2 const Cp = unpack_kelvin(vp);
    K.col(k) = (pack_kelvin(implicit_residual(ctx, Cp, H(Cp))) - r0) / h;
  }
  return K;
}

KelvinMat newton_tangent_ad(StepContext const& ctx, SymTensor2 const& Ci, RateFactorAdFn const& H)
{
  using V = ad::Var;
  ad::Tape& tape = ad::tape();
  tape.clear();
  SymTensor2T<V> Cv;
  for (int k = 0; k < 6; ++k) Cv.v[k] = V::leaf(Ci.v[k]);
  SymTensor2T<V> const R = implicit_residual_ad(Cv, H(Cv), cast<V>(ctx.S), cast<V>(ctx.S_inv), ctx.dt);

  // Component Jacobian J(k, l) = dR_k/dc_l, then W J W^{-1} in Kelvin form.
  KelvinMat K;
  for (int k = 0; k < 6; ++k) {
    std::pair<int, double> const seed{R.v[k].index(), 1.0};
    tape.sweep(std::span(&seed, 1));
    for (int l = 0; l < 6; ++l) {
      double const wk = k < 3 ? 1.0 : sqrt2;
      double const wl = l < 3 ? 1.0 : sqrt2;
      K(k, l) = wk * tape.adjoint(Cv.v[l].index()) / wl;
    }
  }
  return K;
}

StepResult step_implicit(SymTensor2 const& Ci_prev, double dt, RateFactorFn const& H, IntegratorConfig const& cfg,
                         RateFactorAdFn const& H_ad)
{
  if (cfg.tangent == TangentMode::analytic && !H_ad)
    throw std::runtime_error("step_implicit: analytic tangent requested without a differentiable rate factor");
  StepContext const ctx(Ci_prev, dt);
  StepResult out;
  SymTensor2& Ci = out.Ci;
  Ci = step_explicit(Ci_prev, dt, H);

  for (int it = 0;; ++it) {
    SymTensor2 const R = implicit_residual(ctx, Ci, H(Ci));
    double const r = norm(R);
    out.diag.history.push_back(r);
    out.diag.residual = r;
    out.diag.iterations = it;
    if (!std::isfinite(r)) throw ConvergenceError("implicit step: residual is not finite", r, it);
    if (r <= cfg.tol) {
      // Image of the converged iterate under the update map: S exp(H dt) S keeps det Ci_prev exactly.
      Ci = Ci - R;
      return out;
    }
    if (it >= cfg.n_iter)
      throw ConvergenceError(fmt::format("implicit step: no convergence in {} iterations (|R| = {:.3e})", it, r), r,
                             it);

    KelvinMat const K = cfg.tangent == TangentMode::analytic ? newton_tangent_ad(ctx, Ci, H_ad)
                                                             : newton_tangent_fd(ctx, Ci, H, cfg.fd_step);
    Eigen::FullPivLU<KelvinMat> lu(K);
    if (!lu.isInvertible()) throw ConvergenceError("implicit step: singular Newton tangent", r, it);
    KelvinVec const dv = lu.solve(-pack_kelvin(R));
    if (!finite(dv)) throw ConvergenceError("implicit step: non-finite Newton update", r, it);
    Ci = unpack_kelvin(pack_kelvin(Ci) + dv);
    try {
      require_spd(Ci, "implicit step");
    } catch (NotSpdError const& e) {
      throw ConvergenceError(e.what(), r, it);
    }
  }
}

SymTensor2 step_explicit(ConstitutiveModel const& model, int e, SymTensor2 const& Ci_prev, Tensor2 const& F_new,
                         double dt)
{
  SymTensor2 const Cbar = isochoric_split(F_new).Cbar;
  return step_explicit(Ci_prev, dt, [&](SymTensor2 const& Ci) { return model.rate_factor(e, Cbar, Ci); });
}

StepResult step_implicit(ConstitutiveModel const& model, int e, SymTensor2 const& Ci_prev, Tensor2 const& F_new,
                         double dt, IntegratorConfig const& cfg)
{
  SymTensor2 const Cbar = isochoric_split(F_new).Cbar;
  RateFactorFn const H = [&](SymTensor2 const& Ci) { return model.rate_factor(e, Cbar, Ci); };
  RateFactorAdFn H_ad;
  if (cfg.tangent == TangentMode::analytic)
    H_ad = [&](SymTensor2T<ad::Var> const& Ci) { return model.rate_factor_ad(e, Cbar, Ci); };
  return step_implicit(Ci_prev, dt, H, cfg, H_ad);
}

Tensor2 complete_plane_stress(Tensor2 F)
{
  F(0, 2) = F(1, 2) = F(2, 0) = F(2, 1) = 0.0;
  double const a = F(0, 0) * F(1, 1) - F(0, 1) * F(1, 0);
  if (!(a > 0.0)) throw std::runtime_error("plane stress: in-plane deformation has non-positive determinant");
  F(2, 2) = 1.0 / a;
  return F;
}

PathResult simulate_path(LoadPath const& path, ConstitutiveModel const& model, SimulationOptions const& opts)
{
  int const N = model.num_elements();
  std::vector<SymTensor2> Ci(N, SymTensor2::identity());
  PathResult out;
  out.steps.reserve(path.size());
  for (std::size_t n = 0; n < path.size(); ++n) {
    try {
      Tensor2 const F = complete_plane_stress(path.F[n]);
      PathStep st;
      for (int e = 0; e < N; ++e) {
        if (!model.is_active(e)) continue;
        if (opts.scheme == Scheme::explicit_exp) {
          Ci[e] = step_explicit(model, e, Ci[e], F, path.dt[n]);
        } else {
          StepResult const r = step_implicit(model, e, Ci[e], F, path.dt[n], opts.integrator);
          Ci[e] = r.Ci;
          st.max_iterations = std::max(st.max_iterations, r.diag.iterations);
          st.max_residual = std::max(st.max_residual, r.diag.residual);
        }
      }
      st.p = opts.pressure ? opts.pressure(F, Ci, model) : plane_stress_multiplier(F, Ci, model);
      st.P = stress(F, Ci, st.p, model).P;
      st.dissipation = dissipation_rate(F, Ci, model);
      st.Ci = Ci;
      out.steps.push_back(std::move(st));
    } catch (ConvergenceError const& e) {
      throw ConvergenceError(fmt::format("step {}: {}", n, e.what()), e.residual, e.iterations, static_cast<int>(n));
    } catch (NotSpdError const& e) {
      throw ConvergenceError(fmt::format("step {}: {}", n, e.what()), 0.0, 0, static_cast<int>(n));
    }
  }
  return out;
}

}  // namespace viscopann
