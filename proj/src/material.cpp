#include "viscopann/material.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "viscopann/groundtruth.hpp"

namespace viscopann {

namespace {

constexpr int model_schema_version = 1;

void scale_output(FicnnLayout const& L, std::span<double> p, double k)
{
  int const width = L.layers().back().width;
  for (int i = 0; i < width; ++i) p[L.out_w() + i] *= k;
  for (int j = 0; j < L.inputs(); ++j) p[L.out_s() + j] *= k;
}

}  // namespace

void to_json(nlohmann::json& j, FicnnArch const& a) { j = nlohmann::json{{"inputs", a.inputs}, {"hidden", a.hidden}}; }

void from_json(nlohmann::json const& j, FicnnArch& a)
{
  a.inputs = j.at("inputs").get<int>();
  a.hidden = j.at("hidden").get<std::vector<int>>();
}

void to_json(nlohmann::json& j, PannArch const& a)
{
  j = nlohmann::json{{"elements", a.elements},
                     {"eq", a.eq},
                     {"neq", a.neq},
                     {"diss", a.diss},
                     {"gamma", a.gate.gamma},
                     {"epsilon", a.gate.epsilon},
                     {"gate_init", a.gate_init}};
}

void from_json(nlohmann::json const& j, PannArch& a)
{
  PannArch def;
  a.elements = j.value("elements", def.elements);
  a.eq = j.contains("eq") ? j.at("eq").get<FicnnArch>() : def.eq;
  a.neq = j.contains("neq") ? j.at("neq").get<FicnnArch>() : def.neq;
  a.diss = j.contains("diss") ? j.at("diss").get<FicnnArch>() : def.diss;
  a.gate.gamma = j.value("gamma", def.gate.gamma);
  a.gate.epsilon = j.value("epsilon", def.gate.epsilon);
  a.gate_init = j.value("gate_init", def.gate_init);
}

PannModel::PannModel(PannArch arch)
    : arch_(std::move(arch)), eq_(arch_.eq), neq_(arch_.neq), diss_(arch_.diss), active_(arch_.elements, true)
{
  if (arch_.elements < 1) throw std::runtime_error("pann: at least one Maxwell element required");
  if (eq_.inputs() != 2 || neq_.inputs() != 2 || diss_.inputs() != 9)
    throw std::runtime_error("pann: networks need 2, 2 and 9 inputs");
  theta_.assign(gate_offset(arch_.elements - 1) + 1, 0.0);
}

PannModel PannModel::random(PannArch arch, std::uint64_t seed)
{
  PannModel m(std::move(arch));
  Rng rng(seed);
  std::span<double> th = m.theta_;
  m.eq_.initialize(th.subspan(m.eq_offset(), m.eq_.size()), rng);
  for (int e = 0; e < m.arch_.elements; ++e) m.neq_.initialize(th.subspan(m.neq_offset(e), m.neq_.size()), rng);
  for (int e = 0; e < m.arch_.elements; ++e) m.diss_.initialize(th.subspan(m.diss_offset(e), m.diss_.size()), rng);
  for (int e = 0; e < m.arch_.elements; ++e) th[m.gate_offset(e)] = m.arch_.gate_init;
  return m;
}

std::vector<double> PannModel::lower_bounds() const
{
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(theta_.size(), -inf);
  auto fill = [&](FicnnLayout const& L, int off) {
    auto const mask = L.nonneg_mask();
    for (int k = 0; k < L.size(); ++k)
      if (mask[k]) lo[off + k] = 0.0;
  };
  fill(eq_, eq_offset());
  for (int e = 0; e < arch_.elements; ++e) {
    fill(neq_, neq_offset(e));
    fill(diss_, diss_offset(e));
    lo[gate_offset(e)] = 0.0;
  }
  return lo;
}

std::vector<double> PannModel::upper_bounds() const
{
  std::vector<double> hi(theta_.size(), std::numeric_limits<double>::infinity());
  for (int e = 0; e < arch_.elements; ++e) hi[gate_offset(e)] = active_[e] ? 1.0 : 0.0;
  return hi;
}

void PannModel::project()
{
  auto const lo = lower_bounds();
  auto const hi = upper_bounds();
  for (std::size_t k = 0; k < theta_.size(); ++k) theta_[k] = std::clamp(theta_[k], lo[k], hi[k]);
}

double PannModel::gate(int e) const { return active_[e] ? gate_eval(theta_[gate_offset(e)], arch_.gate) : 0.0; }

int PannModel::active_count() const { return static_cast<int>(std::count(active_.begin(), active_.end(), true)); }

int PannModel::prune(double threshold)
{
  int pruned = 0;
  for (int e = 0; e < arch_.elements; ++e) {
    if (active_[e] && gate(e) < threshold) {
      active_[e] = false;
      theta_[gate_offset(e)] = 0.0;
      ++pruned;
    }
  }
  return pruned;
}

double PannModel::free_energy(SymTensor2 const& C, std::span<SymTensor2 const> Ci) const
{
  auto const k = kernel<double>(theta_);
  SymTensor2 const Cbar = unimodular(C);
  double psi = k.energy_eq(Cbar);
  for (int e = 0; e < arch_.elements; ++e)
    if (active_[e]) psi += k.energy_neq(e, Cbar, Ci[e]);
  return psi;
}

SymTensor2 PannModel::stress_eq(SymTensor2 const& C) const { return kernel<double>(theta_).stress_eq(C); }

SymTensor2 PannModel::stress_neq(int e, SymTensor2 const& C, SymTensor2 const& Ci) const
{
  return kernel<double>(theta_).stress_neq(e, C, Ci);
}

SymTensor2 PannModel::force(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const
{
  return kernel<double>(theta_).force(e, Cbar, Ci);
}

double PannModel::dual_dissipation(int e, SymTensor2 const& A, SymTensor2 const& Ci, SymTensor2 const& Cbar) const
{
  return kernel<double>(theta_).dual_dissipation(e, A, Ci, Cbar);
}

SymTensor2 PannModel::dissipation_gradient(int e, SymTensor2 const& A, SymTensor2 const& Ci,
                                           SymTensor2 const& Cbar) const
{
  return kernel<double>(theta_).dissipation_gradient(e, A, Ci, Cbar);
}

Tensor2 PannModel::rate_factor(int e, SymTensor2 const& Cbar, SymTensor2 const& Ci) const
{
  return kernel<double>(theta_).rate_factor(e, Cbar, Ci);
}

Tensor2T<ad::Var> PannModel::rate_factor_ad(int e, SymTensor2 const& Cbar, SymTensor2T<ad::Var> const& Ci) const
{
  std::vector<ad::Var> const th(theta_.begin(), theta_.end());
  return kernel<ad::Var>(th).rate_factor(e, cast<ad::Var>(Cbar), Ci);
}

LinearParams PannModel::linear_params() const
{
  auto const k = kernel<double>(theta_);
  std::array<double, 2> const ref{3.0, 3.0};
  LinearParams lp;
  auto const geq = ficnn_grad<double>(eq_, k.eq_params(), ref);
  lp.mu = 2.0 * (geq[0] + geq[1]);

  DissInvariants const I0 = diss_invariants_at_rest(SymTensor2::identity());
  for (int e = 0; e < arch_.elements; ++e) {
    ElementParams el{0.0, std::numeric_limits<double>::infinity()};
    if (active_[e]) {
      double const g = gate(e);
      auto const gn = ficnn_grad<double>(neq_, k.neq_params(e), ref);
      el.mu = 2.0 * g * (gn[0] + gn[1]);
      auto const gd = ficnn_grad<double>(diss_, k.diss_params(e), I0);
      double s = 0.0;
      for (int a : quadratic_diss_invariants) s += gd[a];
      s *= g;
      if (s > 0.0) el.eta = 1.0 / (2.0 * s);
    }
    lp.elements.push_back(el);
  }
  return lp;
}

LinearParams extract_linear_params(ConstitutiveModel const& model) { return model.linear_params(); }

void rescale_initialization(PannModel& model, double mu_target, std::span<double const> tau_target)
{
  if (static_cast<int>(tau_target.size()) != model.num_elements())
    throw std::runtime_error("rescale: one target relaxation time per element required");
  if (!(mu_target > 0.0)) throw std::runtime_error("rescale: target modulus must be positive");
  LinearParams const lp = model.linear_params();
  std::span<double> th = model.params();
  if (!(lp.mu > 0.0)) throw std::runtime_error("rescale: equilibrium modulus vanishes");
  scale_output(model.eq_layout(), th.subspan(model.eq_offset(), model.eq_layout().size()), mu_target / lp.mu);
  for (int e = 0; e < model.num_elements(); ++e) {
    if (!model.is_active(e)) continue;
    auto const& el = lp.elements[e];
    if (!(el.mu > 0.0)) throw std::runtime_error(fmt::format("rescale: element {} modulus vanishes", e));
    if (!(el.eta > 0.0) || !std::isfinite(el.eta))
      throw std::runtime_error(fmt::format("rescale: element {} viscosity is not finite", e));
    scale_output(model.neq_layout(), th.subspan(model.neq_offset(e), model.neq_layout().size()), mu_target / el.mu);
    double const eta_target = tau_target[e] * mu_target;
    scale_output(model.diss_layout(), th.subspan(model.diss_offset(e), model.diss_layout().size()),
                 el.eta / eta_target);
  }
}

nlohmann::json PannModel::to_json() const
{
  using nlohmann::json;
  auto const k = kernel<double>(theta_);
  json j;
  j["type"] = "pann";
  j["schema_version"] = model_schema_version;
  j["arch"] = arch_;
  j["params"]["eq"] = std::vector<double>(k.eq_params().begin(), k.eq_params().end());
  j["params"]["neq"] = json::array();
  j["params"]["diss"] = json::array();
  j["gates"] = json::array();
  for (int e = 0; e < arch_.elements; ++e) {
    j["params"]["neq"].push_back(std::vector<double>(k.neq_params(e).begin(), k.neq_params(e).end()));
    j["params"]["diss"].push_back(std::vector<double>(k.diss_params(e).begin(), k.diss_params(e).end()));
    j["gates"].push_back({{"theta", theta_[gate_offset(e)]}, {"value", gate(e)}, {"active", bool(active_[e])}});
  }
  return j;
}

PannModel PannModel::from_json(nlohmann::json const& j)
{
  if (j.value("type", "") != "pann") throw std::runtime_error("model file: not a network model");
  if (j.value("schema_version", 0) != model_schema_version)
    throw std::runtime_error("model file: unsupported schema version");
  PannModel m(j.at("arch").get<PannArch>());
  auto copy = [&](nlohmann::json const& arr, int off, int size, char const* what) {
    auto const v = arr.get<std::vector<double>>();
    if (static_cast<int>(v.size()) != size) throw std::runtime_error(fmt::format("model file: bad size of {}", what));
    std::copy(v.begin(), v.end(), m.theta_.begin() + off);
  };
  auto const& p = j.at("params");
  copy(p.at("eq"), m.eq_offset(), m.eq_.size(), "eq");
  auto const& gates = j.at("gates");
  if (static_cast<int>(p.at("neq").size()) != m.arch_.elements || static_cast<int>(p.at("diss").size()) != m.arch_.elements ||
      static_cast<int>(gates.size()) != m.arch_.elements)
    throw std::runtime_error("model file: element count mismatch");
  for (int e = 0; e < m.arch_.elements; ++e) {
    copy(p.at("neq")[e], m.neq_offset(e), m.neq_.size(), "neq");
    copy(p.at("diss")[e], m.diss_offset(e), m.diss_.size(), "diss");
    m.theta_[m.gate_offset(e)] = gates[e].at("theta").get<double>();
    m.active_[e] = gates[e].value("active", true);
  }
  return m;
}

std::unique_ptr<ConstitutiveModel> model_from_json(nlohmann::json const& j)
{
  std::string const type = j.value("type", "");
  if (type == "pann") return std::make_unique<PannModel>(PannModel::from_json(j));
  if (type == "groundtruth") return std::make_unique<GroundTruthModel>(j.at("params").get<GroundTruthParams>());
  throw std::runtime_error(fmt::format("model file: unknown type '{}'", type));
}

std::unique_ptr<ConstitutiveModel> load_model(std::filesystem::path const& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open model file {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (nlohmann::json::exception const& e) {
    throw std::runtime_error(fmt::format("model file {}: {}", path.string(), e.what()));
  }
  return model_from_json(j);
}

void save_model(PannModel const& model, std::filesystem::path const& path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write model file {}", path.string()));
  out << model.to_json().dump(2) << '\n';
}

}  // namespace viscopann
