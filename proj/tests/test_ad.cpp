#include <doctest.h>

#include <cmath>
#include <vector>

#include "viscopann/ad.hpp"

using viscopann::ad::Var;
namespace ad = viscopann::ad;

namespace {

double grad_of(Var const& out, Var const& in)
{
  std::pair<int, double> const seed{out.index(), 1.0};
  ad::tape().sweep(std::span(&seed, 1));
  return ad::tape().adjoint(in.index());
}

}  // namespace

TEST_CASE("elementary derivatives")
{
  ad::tape().clear();
  Var const x = Var::leaf(0.7);
  CHECK(grad_of(x * x * x, x) == doctest::Approx(3 * 0.49));
  CHECK(grad_of(Var(2.0) / x, x) == doctest::Approx(-2.0 / 0.49));
  CHECK(grad_of(ad::exp(x), x) == doctest::Approx(std::exp(0.7)));
  CHECK(grad_of(ad::log(x), x) == doctest::Approx(1.0 / 0.7));
  CHECK(grad_of(ad::sqrt(x), x) == doctest::Approx(0.5 / std::sqrt(0.7)));
  CHECK(grad_of(ad::tanh(x), x) == doctest::Approx(1.0 - std::tanh(0.7) * std::tanh(0.7)));
  CHECK(grad_of(ad::cbrt(x), x) == doctest::Approx(std::pow(0.7, -2.0 / 3.0) / 3.0));
  CHECK(grad_of(ad::pow(x, 2.5), x) == doctest::Approx(2.5 * std::pow(0.7, 1.5)));
  CHECK(grad_of(ad::softplus(x), x) == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
  double const s = 1.0 / (1.0 + std::exp(-0.7));
  CHECK(grad_of(ad::sigmoid(x), x) == doctest::Approx(s * (1 - s)));
}

TEST_CASE("softplus is stable for large arguments")
{
  CHECK(ad::softplus(800.0) == doctest::Approx(800.0));
  CHECK(ad::softplus(-800.0) == 0.0);
  CHECK(ad::sigmoid(-800.0) == 0.0);
  CHECK(ad::sigmoid(800.0) == 1.0);
}

TEST_CASE("constants stay off the tape")
{
  ad::tape().clear();
  Var const a(2.0), b(3.0);
  Var const c = a * b + ad::exp(a);
  CHECK(c.is_constant());
  CHECK(ad::tape().size() == 0);
}

TEST_CASE("several reverse sweeps over one recording")
{
  ad::tape().clear();
  Var const x = Var::leaf(1.3), y = Var::leaf(-0.4);
  Var const f = x * y + ad::exp(x);
  Var const g = x - y * y;
  CHECK(grad_of(f, x) == doctest::Approx(-0.4 + std::exp(1.3)));
  CHECK(grad_of(g, y) == doctest::Approx(0.8));
  CHECK(grad_of(f, y) == doctest::Approx(1.3));

  std::vector<std::pair<int, double>> const seeds{{f.index(), 2.0}, {g.index(), -1.0}};
  ad::tape().sweep(seeds);
  CHECK(ad::tape().adjoint(x.index()) == doctest::Approx(2.0 * (-0.4 + std::exp(1.3)) - 1.0));
}
