#include "viscopann/rng.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace viscopann {

double Rng::normal()
{
  // u in (0, 1); Phi^{-1}(u) = -sqrt(2) erfc^{-1}(2u).
  double u = uniform();
  while (u == 0.0) u = uniform();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

}  // namespace viscopann
