#pragma once

#include "spiritdiff/calibration.hpp"
#include "spiritdiff/fourier.hpp"
#include "spiritdiff/types.hpp"

namespace spiritdiff {

// Normalized coil sensitivity stack. maps hold unit per-pixel l2 norm over
// the support; norm keeps the pre-normalization magnitude. Pixels with zero
// norm have all coils zero and project to zero.
struct SensitivityMaps {
  std::vector<CxArray> maps;
  RealArray norm;

  Index ncoils() const { return static_cast<Index>(maps.size()); }
  Index ny() const { return maps.empty() ? 0 : maps.front().rows(); }
  Index nx() const { return maps.empty() ? 0 : maps.front().cols(); }
};

// Normalize a raw coil profile stack to unit per-pixel l2 norm.
SensitivityMaps normalize_maps(const CoilImage &raw);

// Coil-redundancy projection: combine with conjugate maps, spread back.
// Hermitian and idempotent for normalized maps.
CoilImage q_project(const SensitivityMaps &s, const CoilImage &x);

// Weighted coil combine sum_i conj(s_i) * x_i.
CxArray combine_coils(const SensitivityMaps &s, const CoilImage &x);

// Interpolation operator applied in k-space: coil i of the output is the sum
// over j of the circular cross-correlation of coil j with w(i,j), i.e. the
// kernel-sized patch around every location dotted with the weights.
KSpaceGrid phi_kspace(const SpiritKernel &ker, const KSpaceGrid &k);

// Per-pixel ncoils x ncoils image-domain factors of the same operator,
// g[i*ncoils+j] = sqrt(ny*nx) * ifft2c(center-padded reversed stencil).
struct PhiImageKernels {
  Index ncoils = 0, ny = 0, nx = 0;
  std::vector<CxArray> g;
};

PhiImageKernels make_phi_image_kernels(const SpiritKernel &ker, Index ny, Index nx);
CoilImage phi_image(const PhiImageKernels &pk, const CoilImage &x);

// Cached image-domain form of the self-consistency normal operator
// F^-1 (Phi - I)^H (Phi - I) F, stored as per-pixel coil matrices.
struct PsiOperator {
  Index ncoils = 0, ny = 0, nx = 0;
  std::vector<CxArray> m;

  CoilImage apply(const CoilImage &x) const;
};

PsiOperator make_psi(const SpiritKernel &ker, Index ny, Index nx);
CoilImage psi(const SpiritKernel &ker, const CoilImage &x);

// |(Phi - I) F q_project(z)| / |F q_project(z)|, the consistency error of
// coil-combined data under a calibrated kernel; 0 for zero projected input.
double self_consistency_residual(const SpiritKernel &ker, const SensitivityMaps &s,
                                 const CoilImage &z);

// Masked Fourier acquisition and its adjoint.
KSpaceGrid acquire(const CoilImage &x, const SamplingMask &m);
CoilImage acquire_adjoint(const KSpaceGrid &y, const SamplingMask &m);

// Hard data consistency: sampled entries from y, the rest from k_iter.
KSpaceGrid dc_replace(const KSpaceGrid &k_iter, const KSpaceGrid &y, const SamplingMask &m);

}  // namespace spiritdiff
