#pragma once

//! \file calibrate.hpp
//! \brief Stress loss with gate regularization, its gradient through the time
//! integration, a projected L-BFGS optimizer and the two-phase training driver.

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscopann/datagen.hpp"
#include "viscopann/integrator.hpp"
#include "viscopann/material.hpp"

namespace viscopann {

struct LossConfig
{
  double w_gate = 5e-3;
  double p = 0.25;
  double delta = 1e-6;
  double prune_threshold = 1e-2;

  void validate() const;
};

void to_json(nlohmann::json& j, LossConfig const& c);
void from_json(nlohmann::json const& j, LossConfig& c);

/// n^P = max ||P||^2 / 9 over all samples.
double stress_normalizer(std::span<LoadPath const> paths);

/// [sum (g + delta)^p]^(1/p) / [N (1 + delta)^p]^(1/p); writes d/dg into dg when non-empty.
double loss_gate(std::span<double const> gates, LossConfig const& cfg, std::span<double> dg = {});

/// d(gate)/d(theta) of the clipped gate layer.
double gate_derivative(double theta, GateConfig const& cfg);

/// Prediction loss and gate loss of a parameter vector on a set of paths.
/// The prediction term is sum ||P_model - P||^2 / (9 n_samples n^P).
class Objective
{
 public:
  Objective(PannModel const& prototype, std::vector<LoadPath> paths, double normalizer, LossConfig loss,
            Scheme scheme, IntegratorConfig integrator);

  struct Parts
  {
    double total = 0.0;
    double prediction = 0.0;
    double gate = 0.0;
  };

  /// Loss at theta; throws ConvergenceError if a path fails.
  Parts evaluate(std::span<double const> theta) const;
  /// Loss and its gradient at theta.
  Parts evaluate(std::span<double const> theta, std::span<double> grad) const;

  /// Normalized mean squared stress error of each path.
  std::vector<double> path_errors(std::span<double const> theta) const;

  PannModel const& prototype() const { return proto_; }
  LossConfig& loss() { return loss_; }
  Scheme& scheme() { return scheme_; }
  void set_prototype(PannModel const& m) { proto_ = m; }

 private:
  struct Forward
  {
    std::vector<std::vector<std::vector<SymTensor2>>> Ci;  ///< [path][element][step]
  };

  Forward forward(PannModel const& model) const;
  double prediction_term(PannModel const& model, Forward const& fw, std::vector<double>* per_path) const;

  PannModel proto_;
  std::vector<LoadPath> paths_;  ///< F completed to plane stress
  double normalizer_;
  LossConfig loss_;
  Scheme scheme_;
  IntegratorConfig integrator_;
  std::size_t samples_ = 0;
};

/// Central-difference gradient, used to cross-check the adjoint.
std::vector<double> fd_gradient(Objective const& obj, std::span<double const> theta, double rel_step = 1e-6);

struct LbfgsOptions
{
  int max_iterations = 500;
  int memory = 10;
  double pg_tol = 1e-10;     ///< stop when the projected gradient inf-norm falls below this
  double f_rel_tol = 1e-14;  ///< stop after several iterations without relative decrease above this
  int max_backtracks = 30;
  double armijo = 1e-4;
  double max_step = 0.1;  ///< inf-norm cap of the first trial step after a reset
};

struct LbfgsResult
{
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  int failed_evaluations = 0;
  bool stagnated = false;
  std::string reason;
};

/// Loss and gradient; a thrown ConvergenceError marks the point as infeasible.
using ObjectiveFn = std::function<double(std::span<double const> x, std::span<double> g)>;
/// Called after each accepted iteration with (iteration, f).
using IterationFn = std::function<void(int, double)>;

/// L-BFGS on the box [lo, hi] with projection of every trial point.
LbfgsResult minimize_projected_lbfgs(ObjectiveFn const& f, std::vector<double> x, std::vector<double> const& lo,
                                     std::vector<double> const& hi, LbfgsOptions const& opts,
                                     IterationFn const& on_iteration = {});

struct TrainConfig
{
  PannArch arch;
  LossConfig loss;
  IntegratorConfig integrator;
  int pre_iterations = 500;
  int post_iterations = 2000;
  std::vector<double> tau_init{5.0, 10.0, 20.0, 40.0, 80.0};
  double mu_init = 0.0;  ///< 0 selects one sixth of the initial modulus of the data
  std::uint64_t seed = 0;
  LbfgsOptions optimizer;

  void validate() const;
};

void to_json(nlohmann::json& j, TrainConfig const& c);
void from_json(nlohmann::json const& j, TrainConfig& c);

struct TrainReport
{
  struct Entry
  {
    std::string phase;
    int iteration;
    double loss;
  };
  std::vector<Entry> history;
  double mu_data = 0.0;
  double normalizer = 0.0;
  double loss_pre = 0.0, loss_post = 0.0;
  double calibration_mse = 0.0;
  double test_mse = -1.0;
  std::vector<double> calibration_errors, test_errors;
  std::vector<double> gates;
  int active_gates = 0;
  int pruned = 0;
  LinearParams linear;
  bool stagnated = false;
  std::vector<std::string> warnings;
  double seconds = 0.0;
};

nlohmann::json to_json(TrainReport const& r);

/// Pre-training with the explicit scheme and gate penalty, pruning, then
/// post-training with the implicit scheme and no gate penalty.
PannModel train(Dataset const& data, TrainConfig const& cfg, TrainReport& report,
                std::function<void(std::string const&)> const& log = {});

/// Normalized mean squared stress error of a model on paths, using normalizer n^P.
std::vector<double> evaluate_paths(ConstitutiveModel const& model, std::span<LoadPath const> paths, double normalizer,
                                   SimulationOptions const& opts = {});

}  // namespace viscopann
