#pragma once

#include "spiritdiff/types.hpp"

namespace spiritdiff {

struct IllConditionedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-coil-pair interpolation weights. weights[i * ncoils + j] is the kh x kw
// stencil through which neighbors of coil j contribute to coil i; the
// self-center tap weights[i][i](kh/2, kw/2) is identically zero, so a sample
// is always predicted from its neighborhood, never from itself.
struct SpiritKernel {
  Index ncoils = 0, kh = 0, kw = 0;
  std::vector<CxArray> weights;

  static SpiritKernel zeros(Index ncoils, Index kh, Index kw);
  const CxArray &w(Index i, Index j) const { return weights[static_cast<size_t>(i * ncoils + j)]; }
  CxArray &w(Index i, Index j) { return weights[static_cast<size_t>(i * ncoils + j)]; }
};

// Crop the fully sampled calibration block out of k-space.
KSpaceGrid extract_acs(const KSpaceGrid &k, const SamplingMask &m);

// Fit the kernel on a fully sampled block: for each target coil, least
// squares over all stride-1 interior patches with Tikhonov term tik^2 |w|^2.
// tik = 0 demands full column rank and throws IllConditionedError otherwise.
SpiritKernel calibrate(const KSpaceGrid &acs, Index kh, Index kw, double tik);

// Same fit with tik expressed relative to the Frobenius norm of the
// calibration matrix.
SpiritKernel calibrate_relative(const KSpaceGrid &acs, Index kh, Index kw,
                                double lambda_rel = 0.01);

// Pooled relative fit residual |Aw - b| / |b| of a kernel on a block.
double calibration_residual(const KSpaceGrid &acs, const SpiritKernel &ker);

// Weights of the adjoint convolution:
// adj.w(j,i)(kh-1-dy, kw-1-dx) = conj(w(i,j)(dy,dx)).
SpiritKernel kernel_adjoint(const SpiritKernel &ker);

}  // namespace spiritdiff
