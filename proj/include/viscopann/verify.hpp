#pragma once

//! \file verify.hpp
//! \brief Randomized property suites shared by the command line and the acceptance checks.

#include <cstdint>
#include <string>
#include <vector>

namespace viscopann::verify {

struct SuiteResult
{
  std::string name;
  bool passed = false;
  double worst = 0.0;      ///< largest violation or error seen
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// max |det Ci - 1| over ground-truth random walks integrated with the implicit scheme.
SuiteResult unimodularity(int n_paths, int n_steps, double tol, std::uint64_t seed);

/// Both schemes against the matrix exponential for frozen rate factors compatible with Ci_prev.
SuiteResult exactness(int n_cases, double tol, std::uint64_t seed);

/// Midpoint convexity of all network potentials in their invariants and of the dual
/// dissipation potentials in the force.
SuiteResult convexity(int n_states, double tol, std::uint64_t seed);

/// A : d(phi*)/dA >= 0 for the ground truth and random networks.
SuiteResult dissipation(int n_states, double tol, std::uint64_t seed);

/// d(phi*)/dA : Ci^{-1} = 0 for the ground truth and random networks.
SuiteResult deviatoric_flow(int n_states, double tol, std::uint64_t seed);

/// Linear parameters of the reference ground truth.
SuiteResult extraction(double tol);

/// Relaxation times and moduli after rescaling a random network.
SuiteResult initialization(double tau_tol, double mu_tol, std::uint64_t seed);

/// Adjoint loss gradient against central differences on a one-element toy calibration.
SuiteResult gradient(int n_directions, int n_steps, double tol, std::uint64_t seed);

/// Gate loss at all-one and all-zero gates.
SuiteResult gate_loss(double tol);

std::vector<std::string> suite_names();

/// Runs the named suite at its default size.
SuiteResult run(std::string const& name, std::uint64_t seed);

}  // namespace viscopann::verify
