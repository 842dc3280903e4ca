#include "viscopann/ficnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace viscopann {

FicnnLayout::FicnnLayout(FicnnArch arch) : arch_(std::move(arch))
{
  if (arch_.inputs < 1) throw std::runtime_error("ficnn: at least one input required");
  if (arch_.hidden.empty()) throw std::runtime_error("ficnn: at least one hidden layer required");
  int off = 0;
  int prev = 0;
  for (int w : arch_.hidden) {
    if (w < 1) throw std::runtime_error("ficnn: hidden widths must be positive");
    Layer ly{w, prev, off, -1, 0};
    off += w * arch_.inputs;
    if (prev > 0) {
      ly.wz = off;
      off += w * prev;
    }
    ly.b = off;
    off += w;
    layers_.push_back(ly);
    prev = w;
    max_width_ = std::max(max_width_, w);
  }
  out_w_ = off;
  off += prev;
  out_s_ = off;
  off += arch_.inputs;
  out_b_ = off;
  size_ = off + 1;
}

std::vector<bool> FicnnLayout::nonneg_mask() const
{
  std::vector<bool> m(size_, true);
  for (auto const& ly : layers_)
    for (int i = 0; i < ly.width; ++i) m[ly.b + i] = false;
  m[out_b_] = false;
  return m;
}

void FicnnLayout::initialize(std::span<double> params, Rng& rng) const
{
  if (static_cast<int>(params.size()) != size_) throw std::runtime_error("ficnn: parameter size mismatch");
  for (auto const& ly : layers_) {
    double const fan = arch_.inputs + ly.prev;
    for (int k = 0; k < ly.width * arch_.inputs; ++k) params[ly.wx + k] = rng.uniform(0.0, 1.0 / fan);
    if (ly.wz >= 0)
      for (int k = 0; k < ly.width * ly.prev; ++k) params[ly.wz + k] = rng.uniform(0.0, 1.0 / fan);
    for (int i = 0; i < ly.width; ++i) params[ly.b + i] = rng.uniform(-0.5, 0.5);
  }
  int const last = layers_.back().width;
  for (int i = 0; i < last; ++i) params[out_w_ + i] = rng.uniform(0.0, 1.0 / last);
  for (int j = 0; j < arch_.inputs; ++j) params[out_s_ + j] = rng.uniform(0.0, 1.0 / arch_.inputs);
  params[out_b_] = 0.0;
}

}  // namespace viscopann
