#pragma once

//! \file datagen.hpp
//! \brief Synthetic load paths (smooth random walks, relaxation and
//! loading-unloading tests), labeling with a constitutive model and the
//! CSV/manifest dataset format.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "viscopann/integrator.hpp"
#include "viscopann/rng.hpp"

namespace viscopann {

enum class LoadMode
{
  uniaxial,
  equibiaxial,
  multiaxial,
};

LoadMode parse_load_mode(std::string_view s);
std::string_view to_string(LoadMode m);

struct RandomWalkSpec
{
  int n_knots = 20;          ///< knots after the initial one at (0 s, 1)
  double dlambda_av = 0.1;   ///< mean absolute knot increment
  double lambda_min = 1.075;
  double lambda_max = 2.0;
  double dt_min = 10.0;      ///< s
  double dt_max = 50.0;      ///< s
  int n_inc = 100;
  LoadMode mode = LoadMode::uniaxial;
  double dphi_av = 0.5;      ///< rad, multiaxial angle walk
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, RandomWalkSpec const& s);
void from_json(nlohmann::json const& j, RandomWalkSpec& s);

/// Knot values and the spline samples at the step end times t[1..n_inc].
struct RandomWalk
{
  std::vector<double> knot_t;
  std::vector<double> knot_lambda, knot_lambda2, knot_phi;
  std::vector<double> t;
  std::vector<double> lambda, lambda2, phi;
};

/// Knot times 0 = t_0 < t_1 < ... with U(dt_min, dt_max) spacing.
std::vector<double> sample_knot_times(Rng& rng, int n_knots, double dt_min, double dt_max);

/// Bounded Gaussian walk starting at start; out-of-range increments are redrawn.
std::vector<double> sample_knot_values(Rng& rng, int n_knots, double start, double step_av, double lo, double hi);

/// Natural cubic spline through (x, y) evaluated at x_out.
std::vector<double> spline_sample(std::span<double const> x, std::span<double const> y, std::span<double const> x_out);

/// Monotone piecewise cubic Hermite interpolation, used to resample measured series.
std::vector<double> pchip_resample(std::span<double const> x, std::span<double const> y, std::span<double const> x_out);

RandomWalk random_walk(RandomWalkSpec const& spec);

/// Plane-stress deformation gradients with det F = 1.
std::vector<Tensor2> make_deformation(LoadMode mode, std::span<double const> lambda,
                                      std::span<double const> lambda2 = {}, std::span<double const> phi = {});

/// Path with dt from consecutive sample times (t_0 = 0 implied).
LoadPath make_path(std::span<double const> t, std::vector<Tensor2> F, std::string name);

LoadPath random_walk_path(RandomWalkSpec const& spec, std::string name);

/// Linear ramp to lambda_max at the given rate, then hold for t_hold; uniform steps.
LoadPath relaxation_path(double lambda_max, double rate, double t_hold, int n_inc);

/// Uniaxial triangle 1 -> lambda_max -> 1 at constant |rate|; uniform steps.
LoadPath ramp_cycle_path(double lambda_max, double rate, int n_inc);

/// Attaches stresses simulated with the given model.
void label_with_model(LoadPath& path, ConstitutiveModel const& model, SimulationOptions const& opts = {});

/// Initial shear modulus estimated from the first step of each path,
/// mu = P11 / (2 (2 eps11 + eps22)) for small in-plane strains eps = F - I.
double initial_shear_modulus(std::span<LoadPath const> paths);

void write_path_csv(LoadPath const& path, std::filesystem::path const& file);
LoadPath read_path_csv(std::filesystem::path const& file);

struct Dataset
{
  std::vector<LoadPath> calibration;
  std::vector<LoadPath> test;
};

/// Writes one CSV per path and manifest.json into dir.
void write_dataset(Dataset const& data, std::filesystem::path const& dir, nlohmann::json const& meta = {});
/// Reads a manifest file or a directory containing manifest.json.
Dataset load_dataset(std::filesystem::path const& manifest);

/// Builds and labels the paths of a generation spec {"paths": [{name, split, walk | relaxation | cycle}]}.
/// seed_offset is added to every walk seed.
Dataset generate_dataset(nlohmann::json const& spec, ConstitutiveModel const& model, SimulationOptions const& opts = {},
                         std::uint64_t seed_offset = 0);

}  // namespace viscopann
