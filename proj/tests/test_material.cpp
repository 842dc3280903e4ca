#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "viscopann/groundtruth.hpp"
#include "viscopann/material.hpp"

using namespace viscopann;
using namespace testing;

namespace {

double max_abs(Tensor2 const& a)
{
  double m = 0.0;
  for (double x : a.a) m = std::max(m, std::abs(x));
  return m;
}

std::vector<SymTensor2> random_states(Rng& rng, int n)
{
  std::vector<SymTensor2> Ci;
  for (int e = 0; e < n; ++e) Ci.push_back(random_unimodular_spd(rng, 0.6, 1.6));
  return Ci;
}

Tensor2 random_deformation(Rng& rng, double scale = 0.3)
{
  for (;;) {
    Tensor2 F = Tensor2::identity() + random_tensor(rng, scale);
    if (det(F) > 0.3) return F;
  }
}

PannModel small_model(std::uint64_t seed, int elements = 2)
{
  PannArch arch;
  arch.elements = elements;
  return PannModel::random(arch, seed);
}

}  // namespace

TEST_CASE("undeformed state is stress free")
{
  GroundTruthModel const gt(GroundTruthParams::reference());
  PannModel const pann = small_model(41, 5);
  for (ConstitutiveModel const* m : {static_cast<ConstitutiveModel const*>(&gt), static_cast<ConstitutiveModel const*>(&pann)}) {
    std::vector<SymTensor2> const Ci(m->num_elements(), SymTensor2::identity());
    Tensor2 const I = Tensor2::identity();
    double const p = plane_stress_multiplier(I, Ci, *m);
    CHECK(max_abs(stress(I, Ci, p, *m).P) < 1e-14);
    CHECK(std::abs(m->free_energy(SymTensor2::identity(), Ci)) < 1e-14);
    for (auto const& A : forces(I, Ci, *m)) CHECK(norm(A) < 1e-14);
    for (auto const& r : evolution_rate(I, Ci, *m)) CHECK(norm(r.rate) < 1e-14);
  }
}

TEST_CASE("fully relaxed uniaxial neo-Hookean stress")
{
  GroundTruthModel const gt(GroundTruthParams::reference());
  double const l = 2.0, t = 1.0 / std::sqrt(l);
  Tensor2 const F = Tensor2::diag(l, t, t);
  SymTensor2 const C = right_cauchy_green(F);
  std::vector<SymTensor2> const Ci(3, C);
  double const p = plane_stress_multiplier(F, Ci, gt);
  StressResult const r = stress(F, Ci, p, gt);
  CHECK(r.P(0, 0) == doctest::Approx(0.525).epsilon(1e-13));
  CHECK(std::abs(r.P(2, 2)) < 1e-14);
}

TEST_CASE("stress is the derivative of the free energy")
{
  GroundTruthModel const gt(GroundTruthParams::reference());
  PannModel const pann = small_model(42, 3);
  Rng rng(43);
  for (ConstitutiveModel const* m : {static_cast<ConstitutiveModel const*>(&gt), static_cast<ConstitutiveModel const*>(&pann)}) {
    for (int n = 0; n < 50; ++n) {
      Tensor2 const F = random_deformation(rng);
      auto const Ci = random_states(rng, m->num_elements());
      double const p = rng.uniform(-1, 1);
      Tensor2 const P = stress(F, Ci, p, *m).P;
      Tensor2 const E = random_tensor(rng);
      double const h = 1e-6;
      auto W = [&](Tensor2 const& G) { return m->free_energy(right_cauchy_green(G), Ci); };
      double const fd = (W(F + h * E) - W(F - h * E)) / (2 * h) + p * ddot(cofactor(F), E);
      CHECK(std::abs(ddot(P, E) - fd) <= 1e-6 * norm(P) * norm(E) + 1e-10);
    }
  }
}

TEST_CASE("forces are minus twice the energy derivative in Ci")
{
  PannModel const pann = small_model(44, 3);
  Rng rng(45);
  for (int n = 0; n < 100; ++n) {
    SymTensor2 const Cbar = random_unimodular_spd(rng);
    auto Ci = random_states(rng, 3);
    int const e = n % 3;
    SymTensor2 const A = pann.force(e, Cbar, Ci[e]);
    SymTensor2 const E = random_sym(rng);
    auto energy = [&](SymTensor2 const& X) {
      auto state = Ci;
      state[e] = X;
      return pann.free_energy(Cbar, state);
    };
    double const fd = -2.0 * fd_directional(energy, Ci[e], E);
    CHECK(std::abs(ddot(A, E) - fd) <= 1e-6 * norm(A) * norm(E) + 1e-12);
  }
  SymTensor2 const C = random_unimodular_spd(rng);
  CHECK(norm(pann.force(0, C, C)) < 1e-13);
}

TEST_CASE("objectivity")
{
  GroundTruthModel const gt(GroundTruthParams::reference());
  PannModel const pann = small_model(46, 3);
  Rng rng(47);
  for (ConstitutiveModel const* m : {static_cast<ConstitutiveModel const*>(&gt), static_cast<ConstitutiveModel const*>(&pann)}) {
    for (int n = 0; n < 100; ++n) {
      Tensor2 const F = random_deformation(rng);
      Tensor2 const Q = random_rotation(rng);
      auto const Ci = random_states(rng, m->num_elements());
      double const p = rng.uniform(-1, 1);
      Tensor2 const P = stress(F, Ci, p, *m).P;
      Tensor2 const PQ = stress(Q * F, Ci, p, *m).P;
      CHECK(max_abs(PQ - Q * P) <= 1e-10 * std::max(1.0, max_abs(P)));
    }
  }
}

TEST_CASE("rate factor is deviatoric and the rate preserves volume")
{
  GroundTruthModel const gt(GroundTruthParams::reference());
  PannModel const pann = small_model(48, 3);
  Rng rng(49);
  for (ConstitutiveModel const* m : {static_cast<ConstitutiveModel const*>(&gt), static_cast<ConstitutiveModel const*>(&pann)}) {
    for (int n = 0; n < 1000; ++n) {
      Tensor2 const F = random_deformation(rng);
      auto const Ci = random_states(rng, m->num_elements());
      auto const rates = evolution_rate(F, Ci, *m);
      for (int e = 0; e < m->num_elements(); ++e) {
        double const scale = std::max(1.0, norm(rates[e].H));
        CHECK(std::abs(trace(rates[e].H)) <= 1e-12 * scale);
        // d(phi*)/dA : Ci^{-1} vanishes for any force, not only the current one.
        SymTensor2 const A = random_sym(rng, 2.0);
        SymTensor2 const G = m->dissipation_gradient(e, A, Ci[e], unimodular(right_cauchy_green(F)));
        CHECK(std::abs(ddot(G, inverse(Ci[e]))) <= 1e-10 * std::max(1.0, norm(G)));
      }
    }
  }
}

TEST_CASE("network rate factor matches its explicit construction")
{
  PannModel const pann = small_model(50, 2);
  Rng rng(51);
  for (int n = 0; n < 50; ++n) {
    SymTensor2 const Cbar = random_unimodular_spd(rng), Ci = random_unimodular_spd(rng);
    Tensor2 const H = pann.rate_factor(0, Cbar, Ci);
    Tensor2 const ref = pann.rate(0, Cbar, Ci).full() * inverse(Ci).full();
    CHECK(max_abs(H - ref) <= 1e-12 * std::max(1.0, max_abs(ref)));

    ad::tape().clear();
    SymTensor2T<ad::Var> Cv;
    for (int k = 0; k < 6; ++k) Cv.v[k] = ad::Var::leaf(Ci.v[k]);
    Tensor2 const Hv = values(pann.rate_factor_ad(0, Cbar, Cv));
    CHECK(max_abs(Hv - H) <= 1e-14 * std::max(1.0, max_abs(H)));
  }
}

TEST_CASE("rate is twice the dissipation gradient")
{
  PannModel const pann = small_model(52, 2);
  Rng rng(53);
  for (int n = 0; n < 50; ++n) {
    SymTensor2 const Cbar = random_unimodular_spd(rng), Ci = random_unimodular_spd(rng);
    SymTensor2 const A = random_sym(rng);
    SymTensor2 const G = pann.dissipation_gradient(1, A, Ci, Cbar);
    SymTensor2 const E = random_sym(rng);
    auto phi = [&](SymTensor2 const& X) { return pann.dual_dissipation(1, X, Ci, Cbar); };
    CHECK(std::abs(ddot(G, E) - fd_directional(phi, A, E)) <= 1e-6 * norm(G) * norm(E) + 1e-12);
  }
}

TEST_CASE("dissipation is non-negative for network potentials")
{
  Rng rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    PannModel const pann = small_model(100 + trial, 3);
    for (int n = 0; n < 500; ++n) {
      Tensor2 const F = random_deformation(rng, 0.5);
      auto const Ci = random_states(rng, 3);
      CHECK(dissipation_rate(F, Ci, pann) >= -1e-12);
    }
  }
}

TEST_CASE("linear parameters of the ground truth")
{
  LinearParams const lp = extract_linear_params(GroundTruthModel(GroundTruthParams::reference()));
  CHECK(lp.mu == 0.3);
  double const mu[] = {0.1, 0.2, 0.3}, eta[] = {0.5, 4.0, 24.0};
  for (int e = 0; e < 3; ++e) {
    CHECK(std::abs(lp.elements[e].mu - mu[e]) <= 1e-12);
    CHECK(std::abs(lp.elements[e].eta - eta[e]) <= 1e-12);
  }
}

TEST_CASE("linear parameters of network potentials")
{
  PannModel pann = small_model(55, 2);
  auto th = pann.params();
  FicnnLayout const& L = pann.eq_layout();
  for (int k = 0; k < L.size(); ++k) th[pann.eq_offset() + k] = 0.0;
  th[pann.eq_offset() + L.out_s()] = 0.07;
  th[pann.eq_offset() + L.out_s() + 1] = 0.02;
  CHECK(extract_linear_params(pann).mu == doctest::Approx(2 * (0.07 + 0.02)).epsilon(1e-15));

  PannModel fresh = small_model(56, 2);
  LinearParams const before = extract_linear_params(fresh);
  auto tf = fresh.params();
  FicnnLayout const& E = fresh.eq_layout();
  for (int k = 0; k < E.layers().back().width; ++k) tf[fresh.eq_offset() + E.out_w() + k] *= 3.0;
  for (int k = 0; k < E.inputs(); ++k) tf[fresh.eq_offset() + E.out_s() + k] *= 3.0;
  CHECK(extract_linear_params(fresh).mu == doctest::Approx(3.0 * before.mu).epsilon(1e-13));
  for (auto const& el : before.elements) {
    CHECK(el.mu > 0.0);
    CHECK(el.eta > 0.0);
  }
}

TEST_CASE("rescaled initialization hits the targets")
{
  std::vector<double> const tau{5, 10, 20, 40, 80};
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    PannModel m = PannModel::random(PannArch{}, seed);
    rescale_initialization(m, 0.2, tau);
    LinearParams const lp = extract_linear_params(m);
    CHECK(std::abs(lp.mu - 0.2) <= 1e-10);
    for (int e = 0; e < 5; ++e) {
      CHECK(std::abs(lp.elements[e].mu - 0.2) <= 1e-10);
      CHECK(std::abs(lp.elements[e].tau() - tau[e]) <= 1e-8);
    }
    rescale_initialization(m, 0.2, tau);
    LinearParams const again = extract_linear_params(m);
    CHECK(again.mu == doctest::Approx(lp.mu).epsilon(1e-14));
    CHECK(again.elements[3].eta == doctest::Approx(lp.elements[3].eta).epsilon(1e-14));
  }
  PannModel m = PannModel::random(PannArch{}, 9);
  CHECK_THROWS(rescale_initialization(m, 0.2, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(rescale_initialization(m, 0.0, tau));
}

TEST_CASE("pruning removes an element with a bounded change in output")
{
  PannModel m = small_model(57, 3);
  m.params()[m.gate_offset(1)] = 0.003;
  double const g = m.gate(1);
  REQUIRE(g < 1e-2);
  Rng rng(58);
  std::vector<Tensor2> F;
  std::vector<std::vector<SymTensor2>> Ci;
  std::vector<Tensor2> before;
  for (int n = 0; n < 100; ++n) {
    F.push_back(random_deformation(rng));
    Ci.push_back(random_states(rng, 3));
    before.push_back(stress(F.back(), Ci.back(), 0.0, m).P);
  }
  PannModel full = m;
  full.params()[full.gate_offset(1)] = 1.0;

  CHECK(m.prune(1e-2) == 1);
  CHECK(m.active_count() == 2);
  CHECK(m.upper_bounds()[m.gate_offset(1)] == 0.0);
  CHECK(m.gate(1) == 0.0);
  CHECK(extract_linear_params(m).elements[1].mu == 0.0);
  for (int n = 0; n < 100; ++n) {
    Tensor2 const after = stress(F[n], Ci[n], 0.0, m).P;
    double const branch = max_abs(stress(F[n], Ci[n], 0.0, full).P_neq[1]);
    CHECK(max_abs(after - before[n]) <= g * branch * (1 + 1e-9) + 1e-15);
  }
}

TEST_CASE("projection enforces the feasible set")
{
  PannModel m = small_model(59, 2);
  auto th = m.params();
  for (auto& x : th) x = -1.0;
  th[m.gate_offset(0)] = 3.0;
  m.project();
  auto const lo = m.lower_bounds();
  for (int k = 0; k < m.num_params(); ++k) CHECK(m.params()[k] >= lo[k]);
  CHECK(m.params()[m.gate_offset(0)] == 1.0);
  CHECK(m.params()[m.gate_offset(1)] == 0.0);
  auto const mask = m.eq_layout().nonneg_mask();
  for (int k = 0; k < m.eq_layout().size(); ++k) CHECK(m.params()[k] == (mask[k] ? 0.0 : -1.0));
}

TEST_CASE("model file round trip")
{
  PannModel m = small_model(60, 3);
  m.params()[m.gate_offset(2)] = 0.001;
  m.prune(1e-2);
  nlohmann::json const j = m.to_json();
  PannModel const back = PannModel::from_json(j);
  CHECK(back.num_params() == m.num_params());
  for (int k = 0; k < m.num_params(); ++k) CHECK(back.params()[k] == m.params()[k]);
  CHECK(!back.is_active(2));
  CHECK(back.arch().gate.gamma == 1.025);

  auto const any = model_from_json(j);
  CHECK(any->num_elements() == 3);
  nlohmann::json gt{{"type", "groundtruth"}, {"params", GroundTruthParams::reference()}};
  CHECK(model_from_json(gt)->linear_params().elements[2].eta == 24.0);

  nlohmann::json bad = j;
  bad["params"]["eq"].erase(0);
  CHECK_THROWS(PannModel::from_json(bad));
  bad = j;
  bad["schema_version"] = 99;
  CHECK_THROWS(PannModel::from_json(bad));
  CHECK_THROWS(model_from_json(nlohmann::json{{"type", "ogden"}}));
}
