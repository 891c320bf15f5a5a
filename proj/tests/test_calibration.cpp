#include "doctest.h"

#include "spiritdiff/calibration.hpp"
#include "spiritdiff/fourier.hpp"
#include "spiritdiff/operators.hpp"
#include "spiritdiff/rng.hpp"
#include "spiritdiff/simdata.hpp"

using namespace spiritdiff;

namespace {

// fully sampled k-space of a broadband object seen through smooth coils; the
// white object excites every patch offset, so the fit is well conditioned
KSpaceGrid broadband_kspace(const SensitivityMaps &s, uint64_t seed)
{
  Prng rng(seed);
  CxArray w(s.ny(), s.nx());
  for (Index r = 0; r < s.ny(); ++r)
    for (Index c = 0; c < s.nx(); ++c) w(r, c) = rng.complex_gaussian();
  CoilImage img = CoilImage::zeros(s.ncoils(), s.ny(), s.nx());
  for (Index c = 0; c < s.ncoils(); ++c) img.coils[c] = s.maps[c] * w;
  return fft2c(img);
}

SamplingMask center_block_mask(Index n, Index rows, Index cols)
{
  SamplingMask m;
  m.keep = RealArray::Ones(n, n);
  const Index r0 = (n - rows) / 2, c0 = (n - cols) / 2;
  m.acs = {r0, r0 + rows, c0, c0 + cols};
  return m;
}

double kernel_norm(const SpiritKernel &k)
{
  double acc = 0.0;
  for (const auto &w : k.weights) acc += w.abs2().sum();
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("extract_acs crops exactly the declared block")
{
  Prng rng(1);
  const KSpaceGrid k = complex_noise<KSpaceDomainTag>(2, 32, 32, rng);
  SamplingMask m;
  m.keep = RealArray::Ones(32, 32);
  m.acs = {12, 20, 0, 32};
  const KSpaceGrid acs = extract_acs(k, m);
  CHECK(acs.ny() == 8);
  CHECK(acs.nx() == 32);
  for (Index r = 0; r < 8; ++r)
    for (Index c = 0; c < 32; ++c) CHECK(acs.coils[1](r, c) == k.coils[1](r + 12, c));
}

TEST_CASE("extracted block matches the fully sampled truth it came from")
{
  const SensitivityMaps s = make_sensitivities(3, 32, 32, 0.5);
  const KSpaceGrid k = broadband_kspace(s, 7);
  const SamplingMask m = center_block_mask(32, 12, 12);
  const KSpaceGrid acs = extract_acs(k, m);
  for (Index r = 0; r < 12; ++r)
    CHECK(acs.coils[0](r, 3) == k.coils[0](r + m.acs.row0, 3 + m.acs.col0));
}

TEST_CASE("calibration rejects a block smaller than the kernel")
{
  const SensitivityMaps s = make_sensitivities(2, 32, 32, 0.5);
  const KSpaceGrid k = broadband_kspace(s, 3);
  const SamplingMask m = center_block_mask(32, 4, 4);
  const KSpaceGrid acs = extract_acs(k, m);
  CHECK_THROWS((void)calibrate(acs, 5, 5, 0.01));
}

TEST_CASE("identical coils calibrate to a near-exact interpolator")
{
  // all coils equal: the center of coil i is literally present in the other
  // coils' patches, so the fit residual collapses
  Prng rng(5);
  const CxArray plane = [&] {
    CxArray p(24, 24);
    for (Index r = 0; r < 24; ++r)
      for (Index c = 0; c < 24; ++c) p(r, c) = rng.complex_gaussian();
    return p;
  }();
  KSpaceGrid acs = KSpaceGrid::zeros(3, 24, 24);
  for (Index c = 0; c < 3; ++c) acs.coils[c] = plane;
  const SpiritKernel ker = calibrate(acs, 5, 5, 1e-8);
  CHECK(calibration_residual(acs, ker) < 1e-6);
}

TEST_CASE("smooth four-coil block fits below the pinned residual")
{
  const RealArray ph = make_phantom(default_phantom_spec(32));
  const SensitivityMaps s = make_sensitivities(4, 32, 32, 0.5);
  CoilImage img = CoilImage::zeros(4, 32, 32);
  for (Index c = 0; c < 4; ++c) img.coils[c] = s.maps[c] * ph.cast<Cx>();
  const SamplingMask m = center_block_mask(32, 24, 24);
  const KSpaceGrid acs = extract_acs(fft2c(img), m);
  const SpiritKernel ker = calibrate_relative(acs, 5, 5, 0.01);
  CHECK(calibration_residual(acs, ker) < 0.05);
}

TEST_CASE("stronger regularization shrinks the weights monotonically")
{
  const SensitivityMaps s = make_sensitivities(3, 24, 24, 0.5);
  const KSpaceGrid acs = broadband_kspace(s, 9);
  double prev = std::numeric_limits<double>::infinity();
  for (double rel : {1e-3, 1e-1, 1.0, 10.0}) {
    const SpiritKernel ker = calibrate_relative(acs, 5, 5, rel);
    const double n = kernel_norm(ker);
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("rank-deficient system without regularization is reported")
{
  // constant k-space: every patch row is identical, so the system has rank 1
  KSpaceGrid acs = KSpaceGrid::zeros(2, 16, 16);
  for (auto &c : acs.coils) c.setConstant(Cx(1.0, 0.0));
  CHECK_THROWS_AS((void)calibrate(acs, 5, 5, 0.0), IllConditionedError);
}

TEST_CASE("self-center tap is exactly zero after calibration")
{
  const SensitivityMaps s = make_sensitivities(4, 24, 24, 0.5);
  const KSpaceGrid acs = broadband_kspace(s, 13);
  const SpiritKernel ker = calibrate_relative(acs, 5, 5, 0.01);
  for (Index i = 0; i < 4; ++i) CHECK(ker.w(i, i)(2, 2) == Cx(0.0, 0.0));
}

TEST_CASE("residual does not grow with more calibration data")
{
  const SensitivityMaps s = make_sensitivities(3, 32, 32, 0.5);
  const KSpaceGrid full = broadband_kspace(s, 21);
  double prev = std::numeric_limits<double>::infinity();
  for (Index block : {16, 22, 28}) {
    const SamplingMask m = center_block_mask(32, block, block);
    const KSpaceGrid acs = extract_acs(full, m);
    const SpiritKernel ker = calibrate_relative(acs, 5, 5, 0.01);
    const double res = calibration_residual(extract_acs(full, center_block_mask(32, 28, 28)), ker);
    CHECK(res <= prev * 1.05);
    prev = res;
  }
}

TEST_CASE("kernel adjoint is an involution and zero maps to zero")
{
  const SensitivityMaps s = make_sensitivities(3, 24, 24, 0.5);
  const SpiritKernel ker = calibrate_relative(broadband_kspace(s, 17), 5, 5, 0.01);
  const SpiritKernel back = kernel_adjoint(kernel_adjoint(ker));
  for (size_t i = 0; i < ker.weights.size(); ++i)
    CHECK((back.weights[i] - ker.weights[i]).abs().maxCoeff() == 0.0);

  const SpiritKernel z = SpiritKernel::zeros(2, 3, 3);
  const SpiritKernel za = kernel_adjoint(z);
  for (const auto &w : za.weights) CHECK(w.abs().maxCoeff() == 0.0);
}

TEST_CASE("interpolation operator and its adjoint agree in inner product")
{
  const SensitivityMaps s = make_sensitivities(3, 16, 16, 0.5);
  const SpiritKernel ker = calibrate_relative(broadband_kspace(s, 19), 5, 5, 0.01);
  const SpiritKernel adj = kernel_adjoint(ker);
  Prng rng(23);
  const KSpaceGrid a = complex_noise<KSpaceDomainTag>(3, 16, 16, rng);
  const KSpaceGrid b = complex_noise<KSpaceDomainTag>(3, 16, 16, rng);
  const Cx lhs = dot(phi_kspace(ker, a), b);
  const Cx rhs = dot(a, phi_kspace(adj, b));
  CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
}
