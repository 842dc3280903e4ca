#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "viscopann/ficnn.hpp"

using namespace viscopann;
using namespace testing;

namespace {

std::vector<double> random_params(FicnnLayout const& L, Rng& rng)
{
  std::vector<double> p(L.size());
  L.initialize(p, rng);
  return p;
}

/// Zeroes everything except the skip weights.
std::vector<double> skip_only(FicnnLayout const& L, std::vector<double> const& s)
{
  std::vector<double> p(L.size(), 0.0);
  for (int j = 0; j < L.inputs(); ++j) p[L.out_s() + j] = s[j];
  return p;
}

double eval(FicnnLayout const& L, std::vector<double> const& p, std::vector<double> const& x)
{
  return ficnn_eval<double>(L, p, x);
}

}  // namespace

TEST_CASE("layout sizes")
{
  FicnnLayout const a(FicnnArch{2, {8}});
  CHECK(a.size() == 8 * 2 + 8 + 8 + 2 + 1);
  FicnnLayout const b(FicnnArch{9, {16, 4}});
  CHECK(b.size() == (16 * 9 + 16) + (4 * 9 + 4 * 16 + 4) + 4 + 9 + 1);
  auto const mask = b.nonneg_mask();
  CHECK(!mask[b.out_b()]);
  CHECK(mask[b.out_s()]);
  CHECK_THROWS(FicnnLayout(FicnnArch{2, {}}));
  CHECK_THROWS(FicnnLayout(FicnnArch{2, {0}}));
}

TEST_CASE("initialization is feasible")
{
  FicnnLayout const L(FicnnArch{9, {16, 8}});
  Rng rng(31);
  auto const p = random_params(L, rng);
  auto const mask = L.nonneg_mask();
  for (int k = 0; k < L.size(); ++k)
    if (mask[k]) CHECK(p[k] >= 0.0);
  CHECK(p[L.out_b()] == 0.0);
}

TEST_CASE("pure skip network")
{
  FicnnLayout const L(FicnnArch{2, {8}});
  auto const p = skip_only(L, {0.1, 0.2});
  CHECK(eval(L, p, {3.0, 3.0}) == doctest::Approx(0.9).epsilon(1e-15));
  auto const g = ficnn_grad<double>(L, p, std::vector<double>{4.0, 7.0});
  CHECK(g[0] == 0.1);
  CHECK(g[1] == 0.2);

  // Hidden units still produce softplus(0) = log 2 when their weights are zero;
  // their output weights are zero as well, so only the skip path remains.
  std::array<double, 2> const I{5.0, 4.25};
  CHECK(psi_eq<double>(L, p, I) == doctest::Approx(0.1 * 2.0 + 0.2 * 1.25).epsilon(1e-15));
}

TEST_CASE("convexity and monotonicity")
{
  for (FicnnArch arch : {FicnnArch{2, {8}}, FicnnArch{9, {16}}, FicnnArch{3, {6, 5, 4}}}) {
    FicnnLayout const L(arch);
    Rng rng(32);
    int const n = L.inputs();
    for (int trial = 0; trial < 1000; ++trial) {
      auto const p = random_params(L, rng);
      std::vector<double> x(n), y(n), m(n);
      for (int j = 0; j < n; ++j) {
        x[j] = rng.uniform(-5, 5);
        y[j] = rng.uniform(-5, 5);
        m[j] = 0.5 * (x[j] + y[j]);
      }
      double const fx = eval(L, p, x), fy = eval(L, p, y), fm = eval(L, p, m);
      CHECK(fm <= 0.5 * (fx + fy) + 1e-12 * std::max(1.0, std::abs(fm)));

      int const i = trial % n;
      std::vector<double> xt = x;
      xt[i] += rng.uniform(0.0, 2.0);
      CHECK(eval(L, p, xt) >= fx - 1e-12);

      for (double g : ficnn_grad<double>(L, p, x)) CHECK(g >= 0.0);
    }
  }
}

TEST_CASE("input gradient matches finite differences")
{
  FicnnLayout const L(FicnnArch{9, {16, 8}});
  Rng rng(33);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto const p = random_params(L, rng);
    std::vector<double> x(9);
    for (auto& v : x) v = rng.uniform(-3, 3);
    auto const g = ficnn_grad<double>(L, p, x);
    for (int j = 0; j < 9; ++j) {
      double const h = 1e-5;
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      double const fd = (eval(L, p, xp) - eval(L, p, xm)) / (2 * h);
      worst = std::max(worst, rel_err(g[j], fd, 1e-3));
    }
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("parameter gradient on the tape matches finite differences")
{
  FicnnLayout const L(FicnnArch{2, {8}});
  Rng rng(34);
  auto const p = random_params(L, rng);
  std::vector<double> const x{4.0, 3.5};
  ad::tape().clear();
  std::vector<ad::Var> pv;
  for (double v : p) pv.push_back(ad::Var::leaf(v));
  std::vector<ad::Var> const xv{ad::Var(x[0]), ad::Var(x[1])};
  std::vector<ad::Var> gv(2);
  ad::Var const out = ficnn_eval<ad::Var>(L, pv, xv, gv);
  ad::Var const target = out + 3.0 * gv[0] + gv[1];
  std::pair<int, double> const seed{target.index(), 1.0};
  ad::tape().sweep(std::span(&seed, 1));

  auto objective = [&](std::vector<double> const& q) {
    std::vector<double> g(2);
    double const o = ficnn_eval<double>(L, q, x, g);
    return o + 3.0 * g[0] + g[1];
  };
  for (int k = 0; k < L.size(); ++k) {
    double const h = 1e-6;
    auto qp = p, qm = p;
    qp[k] += h;
    qm[k] -= h;
    double const fd = (objective(qp) - objective(qm)) / (2 * h);
    CHECK(rel_err(ad::tape().adjoint(pv[k].index()), fd, 1e-6) < 1e-6);
  }
}

TEST_CASE("gate values")
{
  CHECK(gate_eval(0.0) == 0.0);
  CHECK(gate_eval(1.0) == 1.0);
  CHECK(gate_eval(0.2) == doctest::Approx(0.473670).epsilon(1e-6));
  CHECK(1.025 * std::tanh(2.5) > 1.0);
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    double const g = gate_eval(t);
    CHECK(g >= 0.0);
    CHECK(g <= 1.0);
  }
}

TEST_CASE("energy potentials are normalized and gated")
{
  FicnnLayout const L(FicnnArch{2, {8}});
  Rng rng(35);
  for (int trial = 0; trial < 100; ++trial) {
    auto const p = random_params(L, rng);
    std::array<double, 2> const ref{3.0, 3.0};
    CHECK(psi_eq<double>(L, p, ref) == 0.0);
    CHECK(psi_neq<double>(L, p, 0.7, ref) == 0.0);

    std::array<double, 2> const I{rng.uniform(3, 8), rng.uniform(3, 8)};
    double const full = psi_neq<double>(L, p, 1.0, I);
    CHECK(psi_neq<double>(L, p, 0.0, I) == 0.0);
    CHECK(psi_neq<double>(L, p, 0.5, I) == doctest::Approx(0.5 * full));
    CHECK(psi_eq<double>(L, p, I) >= 0.0);
  }
}

TEST_CASE("corrected dual dissipation potential")
{
  FicnnLayout const L(FicnnArch{9, {16}});
  Rng rng(36);
  for (int trial = 0; trial < 100; ++trial) {
    auto const p = random_params(L, rng);
    double const g = rng.uniform(0.1, 1.0);
    SymTensor2 const Cbar = random_unimodular_spd(rng);
    SymTensor2 const Ci = random_unimodular_spd(rng);
    auto const I0 = diss_invariants_at_rest(Cbar);
    auto phi = [&](SymTensor2 const& A) {
      return phi_star<double>(L, p, g, diss_invariants(project_force(A, Ci), Cbar), I0);
    };

    CHECK(std::abs(phi(SymTensor2::zero())) < 1e-15);
    SymTensor2 const E = random_sym(rng);
    CHECK(std::abs(fd_directional(phi, SymTensor2::zero(), E)) < 1e-8);

    SymTensor2 const X = random_sym(rng, 2.0), Y = random_sym(rng, 2.0);
    CHECK(phi(0.5 * X + 0.5 * Y) <= 0.5 * (phi(X) + phi(Y)) + 1e-12);
    CHECK(phi(X) >= -1e-12);

    DissInvariants grad;
    auto const Ix = diss_invariants(project_force(X, Ci), Cbar);
    phi_star<double>(L, p, g, Ix, I0, &grad);
    DissInvariants grad0;
    phi_star<double>(L, p, g, I0, I0, &grad0);
    for (int a : linear_diss_invariants) CHECK(std::abs(grad0[a]) < 1e-15);
  }
}
