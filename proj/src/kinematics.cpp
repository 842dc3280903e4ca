#include "viscopann/kinematics.hpp"

#include <fmt/format.h>

namespace viscopann {

DeformationState isochoric_split(Tensor2 const& F)
{
  double const J = det(F);
  if (!(J > 0.0)) throw std::runtime_error(fmt::format("isochoric_split: det F = {:.6e} is not positive", J));
  DeformationState s;
  s.F = F;
  s.J = J;
  s.C = right_cauchy_green(F);
  s.Cbar = std::pow(J, -2.0 / 3.0) * s.C;
  return s;
}

}  // namespace viscopann
