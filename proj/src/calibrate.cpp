#include "viscopann/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <omp.h>

namespace viscopann {

namespace {

using V = ad::Var;
using Comp6 = std::array<double, 6>;

/// Runs body(k) for k in [0, n) in parallel and rethrows the first failure by task order.
template <class Body>
void parallel_tasks(int n, Body const& body)
{
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) {
    try {
      body(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto const& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<V> theta_vars(std::span<double const> theta, std::vector<std::pair<int, int>> const& leaf_ranges)
{
  std::vector<V> v(theta.begin(), theta.end());
  for (auto [begin, end] : leaf_ranges)
    for (int k = begin; k < end; ++k) v[k] = V::leaf(theta[k]);
  return v;
}

std::vector<std::pair<int, int>> element_ranges(PannModel const& m, int e)
{
  return {{m.neq_offset(e), m.neq_offset(e) + m.neq_layout().size()},
          {m.diss_offset(e), m.diss_offset(e) + m.diss_layout().size()},
          {m.gate_offset(e), m.gate_offset(e) + 1}};
}

void collect(std::vector<V> const& thv, std::vector<std::pair<int, int>> const& ranges, std::span<double> grad)
{
  ad::Tape const& tape = ad::tape();
  for (auto [begin, end] : ranges)
    for (int k = begin; k < end; ++k) grad[k] += tape.adjoint(thv[k].index());
}

SymTensor2T<V> sym_leaves(SymTensor2 const& s)
{
  SymTensor2T<V> r;
  for (int k = 0; k < 6; ++k) r.v[k] = V::leaf(s.v[k]);
  return r;
}

Comp6 sym_adjoint(SymTensor2T<V> const& s)
{
  Comp6 r;
  for (int k = 0; k < 6; ++k) r[k] = ad::tape().adjoint(s.v[k].index());
  return r;
}

/// Pulls a component gradient with respect to S = sqrt(C) back to C.
Comp6 sqrt_adjoint(SymTensor2 const& C, Comp6 const& s_bar)
{
  SymEigen const eig = eig_sym(C);
  Tensor2 const& Q = eig.vectors;
  std::array<double, 3> s;
  for (int i = 0; i < 3; ++i) s[i] = std::sqrt(eig.values[i]);
  Tensor2 G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = i == j ? s_bar[SymTensor2::index(i, i)] : 0.5 * s_bar[SymTensor2::index(i, j)];
  Tensor2 X = transpose(Q) * G * Q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) /= s[i] + s[j];
  Tensor2 const Gc = Q * X * transpose(Q);
  Comp6 c_bar;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) c_bar[SymTensor2::index(i, j)] = i == j ? Gc(i, i) : Gc(i, j) + Gc(j, i);
  return c_bar;
}

/// Adjoint of one converged implicit step: adds dL/dtheta and returns dL/dCi_prev.
Comp6 implicit_step_adjoint(PannModel const& m, std::span<double const> theta, int e, SymTensor2 const& c_prev,
                            SymTensor2 const& c_new, SymTensor2 const& Cbar, double dt, Comp6 const& lam,
                            std::span<double> grad, bool need_prev)
{
  ad::Tape& tape = ad::tape();
  tape.clear();
  auto const ranges = element_ranges(m, e);
  std::vector<V> const thv = theta_vars(theta, ranges);
  SymTensor2T<V> const Cv = sym_leaves(c_new);
  SymTensor2T<V> const Sv = sym_leaves(sqrtm_spd(c_prev));
  SymTensor2T<V> const Sinv = inverse(Sv);
  Tensor2T<V> const H = m.kernel<V>(thv).rate_factor(e, cast<V>(Cbar), Cv);
  SymTensor2T<V> const R = implicit_residual_ad(Cv, H, Sv, Sinv, dt);

  Eigen::Matrix<double, 6, 6> J;
  for (int k = 0; k < 6; ++k) {
    std::pair<int, double> const seed{R.v[k].index(), 1.0};
    tape.sweep(std::span(&seed, 1));
    for (int l = 0; l < 6; ++l) J(k, l) = tape.adjoint(Cv.v[l].index());
  }
  Eigen::Matrix<double, 6, 1> rhs;
  for (int k = 0; k < 6; ++k) rhs[k] = lam[k];
  Eigen::Matrix<double, 6, 1> const mu = J.transpose().fullPivLu().solve(rhs);
  if (!mu.allFinite()) throw ConvergenceError("adjoint: singular step Jacobian", 0.0, 0);

  std::vector<std::pair<int, double>> seeds;
  for (int k = 0; k < 6; ++k) seeds.emplace_back(R.v[k].index(), -mu[k]);
  tape.sweep(seeds);
  collect(thv, ranges, grad);
  if (!need_prev) return {};
  return sqrt_adjoint(c_prev, sym_adjoint(Sv));
}

/// Adjoint of one explicit step.
Comp6 explicit_step_adjoint(PannModel const& m, std::span<double const> theta, int e, SymTensor2 const& c_prev,
                            SymTensor2 const& Cbar, double dt, Comp6 const& lam, std::span<double> grad)
{
  ad::Tape& tape = ad::tape();
  tape.clear();
  auto const ranges = element_ranges(m, e);
  std::vector<V> const thv = theta_vars(theta, ranges);
  SymTensor2T<V> const Cp = sym_leaves(c_prev);
  Tensor2T<V> const H = m.kernel<V>(thv).rate_factor(e, cast<V>(Cbar), Cp);
  SymTensor2T<V> const Cn = SymTensor2T<V>::sym(expm(V(dt) * H) * Cp.full());
  std::vector<std::pair<int, double>> seeds;
  for (int k = 0; k < 6; ++k) seeds.emplace_back(Cn.v[k].index(), lam[k]);
  tape.sweep(seeds);
  collect(thv, ranges, grad);
  return sym_adjoint(Cp);
}

double squared_error(Tensor2 const& a, Tensor2 const& b)
{
  double s = 0.0;
  for (int k = 0; k < 9; ++k) s += (a.a[k] - b.a[k]) * (a.a[k] - b.a[k]);
  return s;
}

}  // namespace

void LossConfig::validate() const
{
  if (!(p > 0.0)) throw std::runtime_error("loss: p must be positive");
  if (!(delta > 0.0)) throw std::runtime_error("loss: delta must be positive");
  if (!(w_gate >= 0.0)) throw std::runtime_error("loss: gate weight must be non-negative");
  if (!(prune_threshold >= 0.0)) throw std::runtime_error("loss: prune threshold must be non-negative");
}

void to_json(nlohmann::json& j, LossConfig const& c)
{
  j = nlohmann::json{{"w_gate", c.w_gate}, {"p", c.p}, {"delta", c.delta}, {"prune_threshold", c.prune_threshold}};
}

void from_json(nlohmann::json const& j, LossConfig& c)
{
  LossConfig const d;
  c.w_gate = j.value("w_gate", d.w_gate);
  c.p = j.value("p", d.p);
  c.delta = j.value("delta", d.delta);
  c.prune_threshold = j.value("prune_threshold", d.prune_threshold);
  c.validate();
}

double stress_normalizer(std::span<LoadPath const> paths)
{
  double m = 0.0;
  for (auto const& p : paths) {
    if (!p.labeled()) throw std::runtime_error(fmt::format("path '{}' has no stress labels", p.name));
    for (auto const& P : p.P) m = std::max(m, squared_error(P, Tensor2::zero()));
  }
  if (!(m > 0.0)) throw std::runtime_error("stress normalizer: all stresses vanish");
  return m / 9.0;
}

double loss_gate(std::span<double const> gates, LossConfig const& cfg, std::span<double> dg)
{
  double const N = static_cast<double>(gates.size());
  double const n_gate = std::pow(N * std::pow(1.0 + cfg.delta, cfg.p), 1.0 / cfg.p);
  double sum = 0.0;
  for (double g : gates) sum += std::pow(g + cfg.delta, cfg.p);
  double const value = std::pow(sum, 1.0 / cfg.p) / n_gate;
  if (!dg.empty()) {
    double const outer = std::pow(sum, 1.0 / cfg.p - 1.0) / n_gate;
    for (std::size_t k = 0; k < gates.size(); ++k) dg[k] = outer * std::pow(gates[k] + cfg.delta, cfg.p - 1.0);
  }
  return value;
}

double gate_derivative(double theta, GateConfig const& cfg)
{
  double const t = std::tanh(cfg.epsilon * theta);
  if (cfg.gamma * t >= 1.0) return 0.0;
  return cfg.gamma * cfg.epsilon * (1.0 - t * t);
}

Objective::Objective(PannModel const& prototype, std::vector<LoadPath> paths, double normalizer, LossConfig loss,
                     Scheme scheme, IntegratorConfig integrator)
    : proto_(prototype),
      paths_(std::move(paths)),
      normalizer_(normalizer),
      loss_(loss),
      scheme_(scheme),
      integrator_(integrator)
{
  loss_.validate();
  if (!(normalizer_ > 0.0)) throw std::runtime_error("objective: normalizer must be positive");
  for (auto& p : paths_) {
    if (!p.labeled()) throw std::runtime_error(fmt::format("objective: path '{}' has no stress labels", p.name));
    for (auto& F : p.F) F = complete_plane_stress(F);
    samples_ += p.size();
  }
  if (samples_ == 0) throw std::runtime_error("objective: no samples");
}

Objective::Forward Objective::forward(PannModel const& model) const
{
  int const L = static_cast<int>(paths_.size());
  int const N = model.num_elements();
  Forward fw;
  fw.Ci.assign(L, std::vector<std::vector<SymTensor2>>(N));
  parallel_tasks(L * N, [&](int task) {
    int const l = task / N, e = task % N;
    auto const& path = paths_[l];
    auto& hist = fw.Ci[l][e];
    hist.assign(path.size(), SymTensor2::identity());
    if (!model.is_active(e)) return;
    SymTensor2 prev = SymTensor2::identity();
    for (std::size_t n = 0; n < path.size(); ++n) {
      try {
        prev = scheme_ == Scheme::explicit_exp ? step_explicit(model, e, prev, path.F[n], path.dt[n])
                                               : step_implicit(model, e, prev, path.F[n], path.dt[n], integrator_).Ci;
        require_spd(prev, "explicit step");
      } catch (ConvergenceError const& err) {
        throw ConvergenceError(fmt::format("path {} step {}: {}", path.name, n, err.what()), err.residual,
                               err.iterations, static_cast<int>(n));
      } catch (NotSpdError const& err) {
        throw ConvergenceError(fmt::format("path {} step {}: {}", path.name, n, err.what()), 0.0, 0,
                               static_cast<int>(n));
      }
      hist[n] = prev;
    }
  });
  return fw;
}

double Objective::prediction_term(PannModel const& model, Forward const& fw, std::vector<double>* per_path) const
{
  auto const k = model.kernel<double>(model.params());
  int const N = model.num_elements();
  double total = 0.0;
  if (per_path) per_path->assign(paths_.size(), 0.0);
  for (std::size_t l = 0; l < paths_.size(); ++l) {
    auto const& path = paths_[l];
    double s = 0.0;
    std::vector<SymTensor2> Ci(N);
    for (std::size_t n = 0; n < path.size(); ++n) {
      for (int e = 0; e < N; ++e) Ci[e] = fw.Ci[l][e][n];
      s += squared_error(k.plane_stress(path.F[n], std::span<SymTensor2 const>(Ci)), path.P[n]);
    }
    if (per_path) (*per_path)[l] = s / (9.0 * path.size() * normalizer_);
    total += s;
  }
  return total / (9.0 * samples_ * normalizer_);
}

Objective::Parts Objective::evaluate(std::span<double const> theta) const
{
  PannModel model = proto_;
  std::copy(theta.begin(), theta.end(), model.params().begin());
  Parts r;
  r.prediction = prediction_term(model, forward(model), nullptr);
  std::vector<double> gates(model.num_elements());
  for (int e = 0; e < model.num_elements(); ++e) gates[e] = model.gate(e);
  r.gate = loss_gate(gates, loss_);
  r.total = r.prediction + loss_.w_gate * r.gate;
  return r;
}

std::vector<double> Objective::path_errors(std::span<double const> theta) const
{
  PannModel model = proto_;
  std::copy(theta.begin(), theta.end(), model.params().begin());
  std::vector<double> out;
  prediction_term(model, forward(model), &out);
  return out;
}

Objective::Parts Objective::evaluate(std::span<double const> theta, std::span<double> grad) const
{
  PannModel model = proto_;
  std::copy(theta.begin(), theta.end(), model.params().begin());
  int const L = static_cast<int>(paths_.size());
  int const N = model.num_elements();
  int const P = model.num_params();
  Forward const fw = forward(model);
  double const scale = 1.0 / (9.0 * samples_ * normalizer_);

  // Stress pass: direct parameter gradient and dL/dCi for every step.
  std::vector<std::vector<double>> g_stress(L, std::vector<double>(P, 0.0));
  std::vector<std::vector<std::vector<Comp6>>> abar(L);
  std::vector<double> pred(L, 0.0);
  std::vector<std::pair<int, int>> stress_ranges{{0, model.diss_offset(0)}};
  for (int e = 0; e < N; ++e) stress_ranges.emplace_back(model.gate_offset(e), model.gate_offset(e) + 1);
  parallel_tasks(L, [&](int l) {
    auto const& path = paths_[l];
    abar[l].assign(N, std::vector<Comp6>(path.size(), Comp6{}));
    ad::Tape& tape = ad::tape();
    for (std::size_t n = 0; n < path.size(); ++n) {
      tape.clear();
      std::vector<V> const thv = theta_vars(theta, stress_ranges);
      std::vector<SymTensor2T<V>> Civ(N);
      for (int e = 0; e < N; ++e)
        Civ[e] = model.is_active(e) ? sym_leaves(fw.Ci[l][e][n]) : cast<V>(SymTensor2::identity());
      Tensor2T<V> const Pm = model.kernel<V>(thv).plane_stress(path.F[n], std::span<SymTensor2T<V> const>(Civ));
      V err = 0.0;
      for (int k = 0; k < 9; ++k) {
        V const d = Pm.a[k] - path.P[n].a[k];
        err += d * d;
      }
      pred[l] += err.value();
      std::pair<int, double> const seed{err.index(), scale};
      tape.sweep(std::span(&seed, 1));
      collect(thv, stress_ranges, g_stress[l]);
      for (int e = 0; e < N; ++e)
        if (model.is_active(e)) abar[l][e][n] = sym_adjoint(Civ[e]);
    }
  });

  // Backward pass through the time steps of every element.
  std::vector<std::vector<double>> g_evo(L * N);
  parallel_tasks(L * N, [&](int task) {
    int const l = task / N, e = task % N;
    g_evo[task].assign(P, 0.0);
    if (!model.is_active(e)) return;
    auto const& path = paths_[l];
    auto const& hist = fw.Ci[l][e];
    Comp6 lam = abar[l][e].back();
    for (std::size_t n = path.size(); n-- > 0;) {
      SymTensor2 const c_prev = n == 0 ? SymTensor2::identity() : hist[n - 1];
      SymTensor2 const Cbar = isochoric_split(path.F[n]).Cbar;
      Comp6 const lp =
          scheme_ == Scheme::explicit_exp
              ? explicit_step_adjoint(model, theta, e, c_prev, Cbar, path.dt[n], lam, g_evo[task])
              : implicit_step_adjoint(model, theta, e, c_prev, hist[n], Cbar, path.dt[n], lam, g_evo[task], n > 0);
      if (n > 0)
        for (int k = 0; k < 6; ++k) lam[k] = abar[l][e][n - 1][k] + lp[k];
    }
  });

  std::fill(grad.begin(), grad.end(), 0.0);
  for (auto const& g : g_stress)
    for (int k = 0; k < P; ++k) grad[k] += g[k];
  for (auto const& g : g_evo)
    for (int k = 0; k < P; ++k) grad[k] += g[k];

  Parts r;
  r.prediction = std::accumulate(pred.begin(), pred.end(), 0.0) * scale;
  std::vector<double> gates(N), dg(N);
  for (int e = 0; e < N; ++e) gates[e] = model.gate(e);
  r.gate = loss_gate(gates, loss_, dg);
  r.total = r.prediction + loss_.w_gate * r.gate;
  if (loss_.w_gate > 0.0)
    for (int e = 0; e < N; ++e)
      if (model.is_active(e))
        grad[model.gate_offset(e)] += loss_.w_gate * dg[e] * gate_derivative(theta[model.gate_offset(e)], model.arch().gate);
  return r;
}

std::vector<double> fd_gradient(Objective const& obj, std::span<double const> theta, double rel_step)
{
  std::vector<double> x(theta.begin(), theta.end()), g(theta.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    double const h = rel_step * (1.0 + std::abs(theta[k]));
    x[k] = theta[k] + h;
    double const fp = obj.evaluate(x).total;
    x[k] = theta[k] - h;
    double const fm = obj.evaluate(x).total;
    x[k] = theta[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

LbfgsResult minimize_projected_lbfgs(ObjectiveFn const& fun, std::vector<double> x, std::vector<double> const& lo,
                                     std::vector<double> const& hi, LbfgsOptions const& opts,
                                     IterationFn const& on_iteration)
{
  std::size_t const n = x.size();
  if (lo.size() != n || hi.size() != n) throw std::runtime_error("optimizer: bound size mismatch");
  auto project = [&](std::vector<double>& v) {
    for (std::size_t k = 0; k < n; ++k) v[k] = std::clamp(v[k], lo[k], hi[k]);
  };
  auto dot = [](std::vector<double> const& a, std::vector<double> const& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  };

  LbfgsResult res;
  project(x);
  std::vector<double> g(n);
  double f = fun(x, g);
  ++res.evaluations;
  if (!std::isfinite(f)) throw std::runtime_error("optimizer: initial loss is not finite");

  std::deque<std::vector<double>> S, Y;
  std::deque<double> rho;
  int flat = 0;
  res.reason = "iteration limit";

  for (int it = 1; it <= opts.max_iterations; ++it) {
    std::vector<double> free(n, 1.0);
    double pg = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if ((x[k] <= lo[k] && g[k] > 0.0) || (x[k] >= hi[k] && g[k] < 0.0)) free[k] = 0.0;
      pg = std::max(pg, std::abs(std::clamp(x[k] - g[k], lo[k], hi[k]) - x[k]));
    }
    if (pg < opts.pg_tol) {
      res.reason = "projected gradient below tolerance";
      break;
    }

    // Two-loop recursion on the free variables.
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k) q[k] = g[k] * free[k];
    std::vector<double> alpha(S.size());
    for (std::size_t m = S.size(); m-- > 0;) {
      alpha[m] = rho[m] * dot(S[m], q);
      for (std::size_t k = 0; k < n; ++k) q[k] -= alpha[m] * Y[m][k];
    }
    double const gamma = S.empty() ? 1.0 : dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
    for (auto& v : q) v *= gamma;
    for (std::size_t m = 0; m < S.size(); ++m) {
      double const beta = rho[m] * dot(Y[m], q);
      for (std::size_t k = 0; k < n; ++k) q[k] += (alpha[m] - beta) * S[m][k];
    }
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = -q[k] * free[k];
    double gd = dot(g, d);
    if (!(gd < 0.0) || !std::isfinite(gd)) {
      S.clear();
      Y.clear();
      rho.clear();
      for (std::size_t k = 0; k < n; ++k) d[k] = -g[k] * free[k];
      gd = dot(g, d);
    }

    double step = 1.0;
    if (S.empty()) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (dmax > 0.0) step = std::min(1.0, opts.max_step / dmax);
    }

    bool accepted = false;
    std::vector<double> xt(n), gt(n);
    double ft = 0.0;
    for (int b = 0; b <= opts.max_backtracks; ++b, step *= 0.5) {
      for (std::size_t k = 0; k < n; ++k) xt[k] = x[k] + step * d[k];
      project(xt);
      double decrease = 0.0;
      for (std::size_t k = 0; k < n; ++k) decrease += g[k] * (xt[k] - x[k]);
      if (decrease == 0.0) break;
      try {
        ft = fun(xt, gt);
        ++res.evaluations;
      } catch (ConvergenceError const&) {
        ++res.evaluations;
        ++res.failed_evaluations;
        continue;
      } catch (NotSpdError const&) {
        ++res.evaluations;
        ++res.failed_evaluations;
        continue;
      }
      if (std::isfinite(ft) && ft <= f + opts.armijo * decrease) {
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (!S.empty()) {
        S.clear();
        Y.clear();
        rho.clear();
        --it;
        continue;
      }
      res.stagnated = true;
      res.reason = "line search failed";
      break;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = xt[k] - x[k];
      y[k] = gt[k] - g[k];
    }
    double const sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    flat = (f - ft) <= opts.f_rel_tol * std::max(std::abs(ft), 1e-300) ? flat + 1 : 0;
    x = xt;
    g = gt;
    f = ft;
    res.iterations = it;
    if (on_iteration) on_iteration(it, f);
    if (flat >= 10) {
      res.reason = "relative decrease below tolerance";
      break;
    }
  }
  res.x = std::move(x);
  res.f = f;
  return res;
}

void TrainConfig::validate() const
{
  loss.validate();
  if (pre_iterations < 0 || post_iterations < 0) throw std::runtime_error("train: negative iteration budget");
  if (static_cast<int>(tau_init.size()) != arch.elements)
    throw std::runtime_error("train: one initial relaxation time per element required");
  if (!(mu_init >= 0.0)) throw std::runtime_error("train: initial modulus must be non-negative");
  if (!(integrator.tol > 0.0) || integrator.n_iter < 1) throw std::runtime_error("train: invalid integrator settings");
}

void to_json(nlohmann::json& j, TrainConfig const& c)
{
  j = nlohmann::json{{"arch", c.arch},
                     {"loss", c.loss},
                     {"integrator",
                      {{"tol", c.integrator.tol},
                       {"n_iter", c.integrator.n_iter},
                       {"tangent", c.integrator.tangent == TangentMode::analytic ? "analytic" : "forward_difference"},
                       {"fd_step", c.integrator.fd_step}}},
                     {"pre_iterations", c.pre_iterations},
                     {"post_iterations", c.post_iterations},
                     {"tau_init", c.tau_init},
                     {"mu_init", c.mu_init},
                     {"seed", c.seed},
                     {"optimizer",
                      {{"memory", c.optimizer.memory},
                       {"pg_tol", c.optimizer.pg_tol},
                       {"f_rel_tol", c.optimizer.f_rel_tol},
                       {"max_backtracks", c.optimizer.max_backtracks},
                       {"max_step", c.optimizer.max_step}}}};
}

void from_json(nlohmann::json const& j, TrainConfig& c)
{
  TrainConfig const d;
  c = d;
  if (j.contains("arch")) c.arch = j.at("arch").get<PannArch>();
  if (j.contains("loss")) c.loss = j.at("loss").get<LossConfig>();
  if (j.contains("integrator")) {
    auto const& i = j.at("integrator");
    c.integrator.tol = i.value("tol", d.integrator.tol);
    c.integrator.n_iter = i.value("n_iter", d.integrator.n_iter);
    c.integrator.fd_step = i.value("fd_step", d.integrator.fd_step);
    std::string const t = i.value("tangent", "forward_difference");
    if (t == "analytic")
      c.integrator.tangent = TangentMode::analytic;
    else if (t == "forward_difference")
      c.integrator.tangent = TangentMode::forward_difference;
    else
      throw std::runtime_error(fmt::format("config: unknown tangent mode '{}'", t));
  }
  c.pre_iterations = j.value("pre_iterations", d.pre_iterations);
  c.post_iterations = j.value("post_iterations", d.post_iterations);
  c.tau_init = j.value("tau_init", d.tau_init);
  c.mu_init = j.value("mu_init", d.mu_init);
  c.seed = j.value("seed", d.seed);
  if (j.contains("optimizer")) {
    auto const& o = j.at("optimizer");
    c.optimizer.memory = o.value("memory", d.optimizer.memory);
    c.optimizer.pg_tol = o.value("pg_tol", d.optimizer.pg_tol);
    c.optimizer.f_rel_tol = o.value("f_rel_tol", d.optimizer.f_rel_tol);
    c.optimizer.max_backtracks = o.value("max_backtracks", d.optimizer.max_backtracks);
    c.optimizer.max_step = o.value("max_step", d.optimizer.max_step);
  }
  c.validate();
}

nlohmann::json to_json(TrainReport const& r)
{
  nlohmann::json j;
  j["mu_data"] = r.mu_data;
  j["normalizer"] = r.normalizer;
  j["loss_pre"] = r.loss_pre;
  j["loss_post"] = r.loss_post;
  j["calibration_mse"] = r.calibration_mse;
  j["calibration_errors"] = r.calibration_errors;
  if (r.test_mse >= 0.0) {
    j["test_mse"] = r.test_mse;
    j["test_errors"] = r.test_errors;
  }
  j["gates"] = r.gates;
  j["active_gates"] = r.active_gates;
  j["pruned"] = r.pruned;
  j["linear"]["mu"] = r.linear.mu;
  j["linear"]["elements"] = nlohmann::json::array();
  for (auto const& el : r.linear.elements) {
    nlohmann::json e{{"mu", el.mu}};
    if (std::isfinite(el.eta)) {
      e["eta"] = el.eta;
      e["tau"] = el.tau();
    } else {
      e["eta"] = nullptr;
      e["tau"] = nullptr;
    }
    j["linear"]["elements"].push_back(e);
  }
  j["stagnated"] = r.stagnated;
  j["warnings"] = r.warnings;
  j["seconds"] = r.seconds;
  j["history"] = nlohmann::json::array();
  for (auto const& h : r.history) j["history"].push_back({{"phase", h.phase}, {"iteration", h.iteration}, {"loss", h.loss}});
  return j;
}

std::vector<double> evaluate_paths(ConstitutiveModel const& model, std::span<LoadPath const> paths, double normalizer,
                                   SimulationOptions const& opts)
{
  std::vector<double> out;
  for (auto const& p : paths) {
    if (!p.labeled()) throw std::runtime_error(fmt::format("path '{}' has no stress labels", p.name));
    PathResult const r = simulate_path(p, model, opts);
    double s = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) s += squared_error(r.steps[n].P, p.P[n]);
    out.push_back(s / (9.0 * p.size() * normalizer));
  }
  return out;
}

PannModel train(Dataset const& data, TrainConfig const& cfg, TrainReport& report,
                std::function<void(std::string const&)> const& log)
{
  cfg.validate();
  auto const t0 = std::chrono::steady_clock::now();
  auto say = [&](std::string const& s) {
    if (log) log(s);
  };
  if (data.calibration.empty()) throw std::runtime_error("train: dataset has no calibration paths");

  report = TrainReport{};
  report.normalizer = stress_normalizer(data.calibration);
  report.mu_data = initial_shear_modulus(data.calibration);
  double const mu_av = cfg.mu_init > 0.0 ? cfg.mu_init : report.mu_data / 6.0;
  say(fmt::format("initial modulus of the data {:.6g} MPa, start value {:.6g} MPa", report.mu_data, mu_av));

  PannModel model = PannModel::random(cfg.arch, cfg.seed);
  rescale_initialization(model, mu_av, cfg.tau_init);

  auto run_phase = [&](std::string const& phase, Scheme scheme, LossConfig const& loss, int iterations) {
    if (iterations == 0) return Objective(model, data.calibration, report.normalizer, loss, scheme, cfg.integrator)
                             .evaluate(model.params())
                             .total;
    Objective obj(model, data.calibration, report.normalizer, loss, scheme, cfg.integrator);
    LbfgsOptions opts = cfg.optimizer;
    opts.max_iterations = iterations;
    ObjectiveFn const f = [&](std::span<double const> x, std::span<double> g) { return obj.evaluate(x, g).total; };
    LbfgsResult const r = minimize_projected_lbfgs(
        f, std::vector<double>(model.params().begin(), model.params().end()), model.lower_bounds(),
        model.upper_bounds(), opts, [&](int it, double fv) {
          report.history.push_back({phase, it, fv});
          if (it % 25 == 0) say(fmt::format("{} {:5d}  loss {:.6e}", phase, it, fv));
        });
    std::copy(r.x.begin(), r.x.end(), model.params().begin());
    model.project();
    if (r.stagnated) {
      report.stagnated = true;
      report.warnings.push_back(fmt::format("{}: {} after {} iterations", phase, r.reason, r.iterations));
    }
    say(fmt::format("{} finished: {} iterations, loss {:.6e} ({})", phase, r.iterations, r.f, r.reason));
    return r.f;
  };

  report.loss_pre = run_phase("pre", Scheme::explicit_exp, cfg.loss, cfg.pre_iterations);
  report.pruned = model.prune(cfg.loss.prune_threshold);
  say(fmt::format("pruned {} element(s), {} active", report.pruned, model.active_count()));
  LossConfig post = cfg.loss;
  post.w_gate = 0.0;
  report.loss_post = run_phase("post", Scheme::implicit_exp, post, cfg.post_iterations);

  SimulationOptions sim;
  sim.integrator = cfg.integrator;
  report.calibration_errors = evaluate_paths(model, data.calibration, report.normalizer, sim);
  std::size_t total = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < data.calibration.size(); ++k) {
    acc += report.calibration_errors[k] * data.calibration[k].size();
    total += data.calibration[k].size();
  }
  report.calibration_mse = acc / total;
  if (!data.test.empty()) {
    report.test_errors = evaluate_paths(model, data.test, report.normalizer, sim);
    acc = 0.0;
    total = 0;
    for (std::size_t k = 0; k < data.test.size(); ++k) {
      acc += report.test_errors[k] * data.test[k].size();
      total += data.test[k].size();
    }
    report.test_mse = acc / total;
  }
  for (int e = 0; e < model.num_elements(); ++e) report.gates.push_back(model.gate(e));
  report.active_gates = model.active_count();
  report.linear = extract_linear_params(model);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return model;
}

}  // namespace viscopann
