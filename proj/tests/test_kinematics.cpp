#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "viscopann/kinematics.hpp"

using namespace viscopann;
using namespace testing;

namespace {

/// |G:E - fd| relative to |G| |E|.
double grad_err(SymTensor2 const& G, std::function<double(SymTensor2 const&)> const& f, SymTensor2 const& X,
                SymTensor2 const& E)
{
  double const fd = fd_directional(f, X, E);
  return std::abs(ddot(G, E) - fd) / std::max(norm(G) * norm(E), 1e-12);
}

}  // namespace

TEST_CASE("isochoric split")
{
  DeformationState const s0 = isochoric_split(Tensor2::identity());
  CHECK(s0.J == 1.0);
  CHECK(norm(s0.Cbar - SymTensor2::identity()) == 0.0);

  DeformationState const s1 = isochoric_split(Tensor2::diag(2.0, 2.0, 2.0));
  CHECK(s1.J == doctest::Approx(8.0));
  CHECK(norm(s1.Cbar - SymTensor2::identity()) < 1e-15);

  double const r = 1.0 / std::sqrt(2.0);
  DeformationState const s2 = isochoric_split(Tensor2::diag(2.0, r, r));
  CHECK(s2.J == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(norm(s2.Cbar - SymTensor2::diag(4.0, 0.5, 0.5)) < 1e-14);

  Rng rng(1);
  for (int n = 0; n < 100; ++n) {
    Tensor2 F = Tensor2::identity() + random_tensor(rng, 0.3);
    CHECK(std::abs(det(isochoric_split(F).Cbar) - 1.0) < 1e-12);
  }
  CHECK_THROWS(isochoric_split(Tensor2::diag(1.0, 1.0, -1.0)));
}

TEST_CASE("equilibrium invariants")
{
  auto const a = eq_invariants(SymTensor2::identity());
  CHECK(a[0] == 3.0);
  CHECK(a[1] == 3.0);
  auto const b = eq_invariants(SymTensor2::diag(4.0, 0.5, 0.5));
  CHECK(b[0] == doctest::Approx(5.0));
  CHECK(b[1] == doctest::Approx(4.25));

  Rng rng(2);
  for (int n = 0; n < 100; ++n) {
    SymTensor2 const C = random_unimodular_spd(rng);
    Tensor2 const Q = random_rotation(rng);
    auto const x = eq_invariants(C);
    auto const y = eq_invariants(rotate(Q, C));
    CHECK(std::abs(x[0] - y[0]) < 1e-12);
    CHECK(std::abs(x[1] - y[1]) < 1e-12);
  }
}

TEST_CASE("non-equilibrium invariants")
{
  Rng rng(3);
  SymTensor2 const C = random_unimodular_spd(rng);
  auto const relaxed = neq_invariants(C, C);
  CHECK(relaxed[0] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(relaxed[1] == doctest::Approx(3.0).epsilon(1e-13));

  auto const fresh = neq_invariants(C, SymTensor2::identity());
  auto const eq = eq_invariants(C);
  CHECK(fresh[0] == doctest::Approx(eq[0]).epsilon(1e-13));
  CHECK(fresh[1] == doctest::Approx(trace(inverse(C))).epsilon(1e-13));

  double const r = std::pow(2.0, -0.5);
  auto const ex = neq_invariants(SymTensor2::diag(4.0, 0.5, 0.5), SymTensor2::diag(2.0, r, r));
  CHECK(ex[0] == doctest::Approx(3.414214).epsilon(1e-6));
  CHECK(ex[1] == doctest::Approx(3.328427).epsilon(1e-6));
}

TEST_CASE("force projection")
{
  SymTensor2 const a = project_force(SymTensor2::diag(1.0, 2.0, 3.0), SymTensor2::identity());
  CHECK(norm(a - SymTensor2::diag(-1.0, 0.0, 1.0)) < 1e-15);

  SymTensor2 const b = project_force(SymTensor2::diag(1.0, 0.0, 0.0), SymTensor2::diag(2.0, 1.0, 0.5));
  CHECK(norm(b - SymTensor2::diag(2.0 / 3.0, -2.0 / 3.0, -4.0 / 3.0)) < 1e-15);

  Rng rng(4);
  for (int n = 0; n < 100; ++n) {
    SymTensor2 const Ci = random_spd(rng);
    SymTensor2 A = random_sym(rng);
    A -= (ddot(Ci, A) / ddot(Ci, inverse(Ci))) * inverse(Ci);  // now Ci : A = 0
    CHECK(norm(project_force(A, Ci) - A) < 1e-13);
    // The projection is idempotent and orthogonal to Ci.
    SymTensor2 const P = project_force(random_sym(rng), Ci);
    CHECK(std::abs(ddot(P, Ci)) < 1e-13);
    CHECK(norm(project_force(P, Ci) - P) < 1e-13);
  }
}

TEST_CASE("dissipation invariants")
{
  auto const z = diss_invariants(SymTensor2::zero(), SymTensor2::identity());
  DissInvariants const z_exp{0, 0, 0, 3, 1.5, 0, 0, 0, 0};
  for (int k = 0; k < 9; ++k) CHECK(z[k] == doctest::Approx(z_exp[k]));

  auto const d = diss_invariants(SymTensor2::diag(-1.0, 0.0, 1.0), SymTensor2::identity());
  DissInvariants const d_exp{0, 1, 0.5, 3, 1.5, 0, 1, 0, 1};
  for (int k = 0; k < 9; ++k) CHECK(d[k] == doctest::Approx(d_exp[k]));

  auto const r = diss_invariants_at_rest(SymTensor2::diag(4.0, 0.5, 0.5));
  auto const r2 = diss_invariants(SymTensor2::zero(), SymTensor2::diag(4.0, 0.5, 0.5));
  for (int k = 0; k < 9; ++k) CHECK(r[k] == r2[k]);

  Rng rng(5);
  for (int n = 0; n < 200; ++n) {
    SymTensor2 const A = random_sym(rng, 2.0), C = random_unimodular_spd(rng);
    Tensor2 const Q = random_rotation(rng);
    auto const x = diss_invariants(A, C);
    auto const y = diss_invariants(rotate(Q, A), rotate(Q, C));
    for (int k = 0; k < 9; ++k) CHECK(std::abs(x[k] - y[k]) <= 1e-12 * std::max(1.0, std::abs(x[k])));
    for (int k : {1, 2, 4, 6, 8}) CHECK(x[k] >= 0.0);
  }
}

TEST_CASE("convexity of the dissipation invariants in the projected force")
{
  Rng rng(6);
  for (int n = 0; n < 1000; ++n) {
    SymTensor2 const C = random_unimodular_spd(rng);
    SymTensor2 const X = random_sym(rng, 2.0), Y = random_sym(rng, 2.0);
    auto const fx = diss_invariants(X, C), fy = diss_invariants(Y, C);
    for (double l : {0.25, 0.5, 0.75}) {
      auto const fm = diss_invariants(l * X + (1 - l) * Y, C);
      for (int k : {1, 2, 6, 8}) CHECK(fm[k] <= l * fx[k] + (1 - l) * fy[k] + 1e-12);
      for (int k : {0, 5, 7})
        CHECK(std::abs(fm[k] - (l * fx[k] + (1 - l) * fy[k])) <= 1e-12 * std::max(1.0, std::abs(fm[k])));
    }
  }
}

TEST_CASE("convexity survives composition with the projection")
{
  Rng rng(7);
  for (int n = 0; n < 1000; ++n) {
    SymTensor2 const C = random_unimodular_spd(rng), Ci = random_unimodular_spd(rng);
    SymTensor2 const X = random_sym(rng, 2.0), Y = random_sym(rng, 2.0);
    auto const fx = diss_invariants(project_force(X, Ci), C);
    auto const fy = diss_invariants(project_force(Y, Ci), C);
    auto const fm = diss_invariants(project_force(0.5 * X + 0.5 * Y, Ci), C);
    for (int k : {1, 2, 6, 8}) CHECK(fm[k] <= 0.5 * fx[k] + 0.5 * fy[k] + 1e-12);
  }
}

TEST_CASE("isochoric invariants are stationary at the identity")
{
  auto const g = eq_invariants_grad_C(SymTensor2::identity());
  CHECK(norm(g[0]) < 1e-15);
  CHECK(norm(g[1]) < 1e-15);
}

TEST_CASE("analytic invariant gradients match finite differences")
{
  Rng rng(8);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    SymTensor2 const C = random_spd(rng, 0.6, 1.8);  // not unimodular
    SymTensor2 const Ci = random_spd(rng, 0.6, 1.8);
    SymTensor2 const Cbar = unimodular(C);
    SymTensor2 const E = random_sym(rng);

    auto const geq = eq_invariants_grad_C(C);
    for (int k = 0; k < 2; ++k)
      worst = std::max(worst, grad_err(geq[k], [&](SymTensor2 const& X) { return eq_invariants(unimodular(X))[k]; }, C, E));

    auto const gc = neq_invariants_grad_C(C, Ci);
    for (int k = 0; k < 2; ++k)
      worst = std::max(worst,
                       grad_err(gc[k], [&](SymTensor2 const& X) { return neq_invariants(unimodular(X), Ci)[k]; }, C, E));

    auto const gi = neq_invariants_grad_Ci(Cbar, Ci);
    for (int k = 0; k < 2; ++k)
      worst = std::max(worst, grad_err(gi[k], [&](SymTensor2 const& X) { return neq_invariants(Cbar, X)[k]; }, Ci, E));

    SymTensor2 const A = random_sym(rng);
    SymTensor2 const Ap = project_force(A, Ci);
    auto const ga = diss_invariants_grad_Ap(Ap, Cbar);
    for (int k = 0; k < 9; ++k) {
      worst = std::max(worst, grad_err(ga[k], [&](SymTensor2 const& X) { return diss_invariants(X, Cbar)[k]; }, Ap, E));
      SymTensor2 const gA = project_gradient(ga[k], Ci);
      worst = std::max(
          worst, grad_err(gA, [&](SymTensor2 const& X) { return diss_invariants(project_force(X, Ci), Cbar)[k]; }, A, E));
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("trace of the projected force has zero gradient at the identity")
{
  SymTensor2 const g = project_gradient(SymTensor2::identity(), SymTensor2::identity());
  CHECK(norm(g) < 1e-15);
}
