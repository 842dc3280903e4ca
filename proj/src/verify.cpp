#include "viscopann/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <fmt/format.h>

#include "viscopann/calibrate.hpp"
#include "viscopann/datagen.hpp"
#include "viscopann/groundtruth.hpp"
#include "viscopann/material.hpp"

namespace viscopann::verify {

namespace {

SymTensor2 random_sym(Rng& rng, double scale)
{
  SymTensor2 s;
  for (auto& x : s.v) x = scale * rng.uniform(-1.0, 1.0);
  return s;
}

/// Q diag(e^a, e^b, e^-(a+b)) Q^T with a random orthogonal Q.
SymTensor2 random_unimodular(Rng& rng, double spread)
{
  Eigen::Matrix3d X;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
  Eigen::Matrix3d const Q = Eigen::HouseholderQR<Eigen::Matrix3d>(X).householderQ();
  double const a = rng.uniform(-spread, spread), b = rng.uniform(-spread, spread);
  Eigen::Matrix3d const M = Q * Eigen::Vector3d(std::exp(a), std::exp(b), std::exp(-a - b)).asDiagonal() * Q.transpose();
  SymTensor2 s;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) s(i, j) = 0.5 * (M(i, j) + M(j, i));
  return s;
}

Eigen::Matrix3d to_eigen(Tensor2 const& t)
{
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = t(i, j);
  return m;
}

double max_abs_diff(SymTensor2 const& a, Eigen::Matrix3d const& b)
{
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

template <class Body>
SuiteResult timed(std::string name, double tol, Body const& body)
{
  auto const t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  r.name = std::move(name);
  r.tolerance = tol;
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct ModelSet
{
  GroundTruthModel gt{GroundTruthParams::reference()};
  std::vector<PannModel> nets;

  explicit ModelSet(std::uint64_t seed)
  {
    for (int k = 0; k < 3; ++k) nets.push_back(PannModel::random(PannArch{}, seed + k));
  }

  std::vector<ConstitutiveModel const*> all() const
  {
    std::vector<ConstitutiveModel const*> r{&gt};
    for (auto const& n : nets) r.push_back(&n);
    return r;
  }
};

}  // namespace

SuiteResult unimodularity(int n_paths, int n_steps, double tol, std::uint64_t seed)
{
  return timed("unimodularity", tol, [&](SuiteResult& r) {
    GroundTruthModel const gt(GroundTruthParams::reference());
    for (int k = 0; k < n_paths; ++k) {
      RandomWalkSpec s;
      s.seed = seed + k;
      s.n_inc = n_steps;
      s.mode = static_cast<LoadMode>(k % 3);
      if (s.mode == LoadMode::multiaxial) {
        s.lambda_min = 0.5;
        s.lambda_max = 1.5;
        s.dt_min = 3.0;
        s.dt_max = 15.0;
      }
      PathResult const res = simulate_path(random_walk_path(s, "walk"), gt);
      for (auto const& step : res.steps)
        for (auto const& Ci : step.Ci) r.worst = std::max(r.worst, std::abs(det(Ci) - 1.0));
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} paths x {} steps x 3 elements", n_paths, n_steps);
  });
}

SuiteResult exactness(int n_cases, double tol, std::uint64_t seed)
{
  return timed("exactness", tol, [&](SuiteResult& r) {
    Rng rng(seed);
    IntegratorConfig const cfg;
    for (int n = 0; n < n_cases; ++n) {
      SymTensor2 const Ci_prev = random_unimodular(rng, 0.5);
      Tensor2 H = random_sym(rng, 0.5).full() * inverse(Ci_prev).full();
      double const t = trace(H) / 3.0;
      for (int k = 0; k < 9; k += 4) H.a[k] -= t;
      double const dt = rng.uniform(0.01, 1.0);
      Eigen::Matrix3d const exact = (to_eigen(H) * dt).exp() * to_eigen(Ci_prev.full());
      RateFactorFn const Hf = [&](SymTensor2 const&) { return H; };
      r.worst = std::max(r.worst, max_abs_diff(step_explicit(Ci_prev, dt, Hf), exact));
      r.worst = std::max(r.worst, max_abs_diff(step_implicit(Ci_prev, dt, Hf, cfg).Ci, exact));
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} frozen rate factors, explicit and implicit", n_cases);
  });
}

SuiteResult convexity(int n_states, double tol, std::uint64_t seed)
{
  return timed("convexity", tol, [&](SuiteResult& r) {
    ModelSet const models(seed);
    Rng rng(seed + 100);
    auto midpoint = [&](std::function<double(std::vector<double> const&)> const& f, int dim, double lo, double hi) {
      std::vector<double> x(dim), y(dim), m(dim);
      for (int j = 0; j < dim; ++j) {
        x[j] = rng.uniform(lo, hi);
        y[j] = rng.uniform(lo, hi);
        m[j] = 0.5 * (x[j] + y[j]);
      }
      double const fm = f(m), avg = 0.5 * (f(x) + f(y));
      r.worst = std::max(r.worst, (fm - avg) / std::max(1.0, std::abs(avg)));
    };
    for (int n = 0; n < n_states; ++n) {
      PannModel const& net = models.nets[n % models.nets.size()];
      auto const theta = net.params();
      int const e = n % net.num_elements();
      auto run = [&](FicnnLayout const& L, int off, double lo, double hi) {
        auto const p = theta.subspan(off, L.size());
        midpoint([&](std::vector<double> const& x) { return ficnn_eval<double>(L, p, x); }, L.inputs(), lo, hi);
      };
      run(net.eq_layout(), net.eq_offset(), 0.0, 10.0);
      run(net.neq_layout(), net.neq_offset(e), 0.0, 10.0);
      run(net.diss_layout(), net.diss_offset(e), -5.0, 5.0);

      SymTensor2 const Cbar = random_unimodular(rng, 0.5), Ci = random_unimodular(rng, 0.5);
      SymTensor2 const X = random_sym(rng, 2.0), Y = random_sym(rng, 2.0);
      for (ConstitutiveModel const* m : {static_cast<ConstitutiveModel const*>(&models.gt),
                                         static_cast<ConstitutiveModel const*>(&net)}) {
        int const k = n % m->num_elements();
        double const fm = m->dual_dissipation(k, 0.5 * X + 0.5 * Y, Ci, Cbar);
        double const avg = 0.5 * (m->dual_dissipation(k, X, Ci, Cbar) + m->dual_dissipation(k, Y, Ci, Cbar));
        r.worst = std::max(r.worst, (fm - avg) / std::max(1.0, std::abs(avg)));
      }
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} states, midpoint violation relative to max(1, |f|)", n_states);
  });
}

SuiteResult dissipation(int n_states, double tol, std::uint64_t seed)
{
  return timed("dissipation", tol, [&](SuiteResult& r) {
    ModelSet const models(seed);
    auto const all = models.all();
    Rng rng(seed + 200);
    double least = std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_states; ++n) {
      ConstitutiveModel const& m = *all[n % all.size()];
      int const e = n % m.num_elements();
      SymTensor2 const Cbar = random_unimodular(rng, 0.5), Ci = random_unimodular(rng, 0.5);
      SymTensor2 const A = n % 2 == 0 ? m.force(e, Cbar, Ci) : random_sym(rng, 2.0);
      double const D = ddot(A, m.dissipation_gradient(e, A, Ci, Cbar));
      least = std::min(least, D);
    }
    r.worst = std::max(0.0, -least);
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} states, smallest rate {:.3e}", n_states, least);
  });
}

SuiteResult deviatoric_flow(int n_states, double tol, std::uint64_t seed)
{
  return timed("deviatoric_flow", tol, [&](SuiteResult& r) {
    ModelSet const models(seed);
    auto const all = models.all();
    Rng rng(seed + 300);
    for (int n = 0; n < n_states; ++n) {
      ConstitutiveModel const& m = *all[n % all.size()];
      int const e = n % m.num_elements();
      SymTensor2 const Cbar = random_unimodular(rng, 0.5), Ci = random_unimodular(rng, 0.5);
      SymTensor2 const A = n % 2 == 0 ? m.force(e, Cbar, Ci) : random_sym(rng, 2.0);
      SymTensor2 const G = m.dissipation_gradient(e, A, Ci, Cbar);
      r.worst = std::max(r.worst, std::abs(ddot(G, inverse(Ci))));
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} states, ground truth and 3 random networks", n_states);
  });
}

SuiteResult extraction(double tol)
{
  return timed("extraction", tol, [&](SuiteResult& r) {
    GroundTruthParams const p = GroundTruthParams::reference();
    LinearParams const lp = extract_linear_params(GroundTruthModel(p));
    r.worst = std::abs(lp.mu - 0.3);
    double const mu_ref[3] = {0.1, 0.2, 0.3}, eta_ref[3] = {0.5, 4.0, 24.0};
    if (lp.elements.size() != 3) throw std::runtime_error("extraction: expected three elements");
    for (int e = 0; e < 3; ++e) {
      r.worst = std::max(r.worst, std::abs(lp.elements[e].mu - mu_ref[e]));
      r.worst = std::max(r.worst, std::abs(lp.elements[e].eta - eta_ref[e]));
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("mu {} ; elements ({}, {}) ({}, {}) ({}, {})", lp.mu, lp.elements[0].mu, lp.elements[0].eta,
                           lp.elements[1].mu, lp.elements[1].eta, lp.elements[2].mu, lp.elements[2].eta);
  });
}

SuiteResult initialization(double tau_tol, double mu_tol, std::uint64_t seed)
{
  return timed("initialization", tau_tol, [&](SuiteResult& r) {
    std::vector<double> const tau{5.0, 10.0, 20.0, 40.0, 80.0};
    double const mu = 0.15;
    PannModel m = PannModel::random(PannArch{}, seed);
    rescale_initialization(m, mu, tau);
    LinearParams const lp = extract_linear_params(m);
    double tau_err = 0.0, mu_err = std::abs(lp.mu - mu);
    for (int e = 0; e < 5; ++e) {
      tau_err = std::max(tau_err, std::abs(lp.elements[e].tau() - tau[e]));
      mu_err = std::max(mu_err, std::abs(lp.elements[e].mu - mu));
    }
    r.worst = tau_err;
    r.passed = tau_err <= tau_tol && mu_err <= mu_tol;
    r.detail = fmt::format("tau error {:.3e} (tol {:g}), modulus error {:.3e} (tol {:g})", tau_err, tau_tol, mu_err,
                           mu_tol);
  });
}

SuiteResult gradient(int n_directions, int n_steps, double tol, std::uint64_t seed)
{
  return timed("gradient", tol, [&](SuiteResult& r) {
    PannArch arch;
    arch.elements = 1;
    PannModel m = PannModel::random(arch, seed);
    rescale_initialization(m, 0.2, std::vector<double>{4.0});
    m.params()[m.gate_offset(0)] = 0.4;

    GroundTruthModel const gt(GroundTruthParams::reference());
    std::vector<double> t, l;
    for (int n = 1; n <= n_steps; ++n) {
      t.push_back(0.5 * n);
      l.push_back(1.0 + 0.25 * std::sin(0.5 * n));
    }
    LoadPath path = make_path(t, make_deformation(LoadMode::uniaxial, l), "toy");
    label_with_model(path, gt);
    std::vector<LoadPath> paths{path};
    IntegratorConfig ic;
    ic.tol = 1e-12;
    Objective const obj(m, paths, stress_normalizer(paths), LossConfig{}, Scheme::implicit_exp, ic);

    std::vector<double> const theta(m.params().begin(), m.params().end());
    std::vector<double> g(theta.size());
    obj.evaluate(theta, g);
    Rng rng(seed + 400);
    for (int d = 0; d < n_directions; ++d) {
      std::vector<double> v(theta.size()), xp = theta, xm = theta;
      double gv = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = rng.normal() * 1e-6 * (1.0 + std::abs(theta[k]));
        xp[k] += v[k];
        xm[k] -= v[k];
        gv += g[k] * v[k];
      }
      double const fd = 0.5 * (obj.evaluate(xp).total - obj.evaluate(xm).total);
      r.worst = std::max(r.worst, std::abs(gv - fd) / std::abs(fd));
    }
    r.passed = r.worst <= tol;
    r.detail = fmt::format("{} directions, {} parameters, {} steps", n_directions, theta.size(), n_steps);
  });
}

SuiteResult gate_loss(double tol)
{
  return timed("gate_loss", tol, [&](SuiteResult& r) {
    LossConfig const cfg;
    std::vector<double> const ones(5, 1.0), zeros(5, 0.0);
    double const l1 = loss_gate(ones, cfg), l0 = loss_gate(zeros, cfg);
    double const closed = cfg.delta / (1.0 + cfg.delta);
    r.worst = std::abs(l0 - closed);
    r.passed = l1 == 1.0 && r.worst <= tol;
    r.detail = fmt::format("ones -> {:.17g}, zeros -> {:.6e} (closed form {:.6e})", l1, l0, closed);
  });
}

std::vector<std::string> suite_names()
{
  return {"unimodularity", "exactness",      "convexity", "dissipation", "deviatoric_flow",
          "extraction",    "initialization", "gradient",  "gate_loss"};
}

SuiteResult run(std::string const& name, std::uint64_t seed)
{
  if (name == "unimodularity") return unimodularity(6, 300, 1e-9, seed);
  if (name == "exactness") return exactness(100, 1e-12, seed);
  if (name == "convexity") return convexity(2000, 1e-12, seed);
  if (name == "dissipation") return dissipation(2000, 1e-12, seed);
  if (name == "deviatoric_flow") return deviatoric_flow(2000, 1e-10, seed);
  if (name == "extraction") return extraction(1e-12);
  if (name == "initialization") return initialization(1e-6, 1e-10, seed);
  if (name == "gradient") return gradient(10, 10, 1e-4, seed);
  if (name == "gate_loss") return gate_loss(1e-9);
  throw std::runtime_error(fmt::format("unknown suite '{}'", name));
}

}  // namespace viscopann::verify
