#pragma once

#include "spiritdiff/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace spiritdiff {

// Deterministic generator: mt19937_64 plus a hand-rolled Box-Muller so that
// streams are identical across standard libraries (std::normal_distribution
// is implementation-defined). Every stochastic operation in the toolkit
// takes one of these explicitly; same seed, same trajectory.
class Prng {
public:
  explicit Prng(uint64_t seed) : eng_(seed) {}

  // in [0, 1)
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // N(0,1); consumes two engine words.
  double gaussian()
  {
    const auto [c, s] = gaussian_pair();
    (void)s;
    return c;
  }

  // Re, Im ~ N(0,1) independent, i.e. unit variance per real component.
  Cx complex_gaussian()
  {
    const auto [c, s] = gaussian_pair();
    return Cx(c, s);
  }

  uint64_t raw() { return eng_(); }

private:
  std::pair<double, double> gaussian_pair()
  {
    const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  std::mt19937_64 eng_;
};

// Stack of i.i.d. complex Gaussians with unit variance per real component.
// Fill order is coil-major, column-major within each coil.
template <typename Tag = ImageDomainTag>
CoilStack<Tag> complex_noise(Index ncoils, Index ny, Index nx, Prng &rng)
{
  auto out = CoilStack<Tag>::zeros(ncoils, ny, nx);
  for (auto &coil : out.coils) {
    Cx *p = coil.data();
    for (Index i = 0; i < coil.size(); ++i) { p[i] = rng.complex_gaussian(); }
  }
  return out;
}

}  // namespace spiritdiff
