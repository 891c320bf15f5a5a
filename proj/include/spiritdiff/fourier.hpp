#pragma once

#include "spiritdiff/types.hpp"

namespace spiritdiff {

// Centered, orthonormal 2D transforms applied per coil. DC sits at
// (ny/2, nx/2); both directions carry 1/sqrt(ny*nx) so the pair is unitary
// and adjoints of sampling operators stay symmetric.
KSpaceGrid fft2c(const CoilImage &img);
CoilImage ifft2c(const KSpaceGrid &k);

// Zero out unsampled locations; sampled entries pass through unchanged.
KSpaceGrid apply_mask(const KSpaceGrid &k, const SamplingMask &m);

// Single-plane helpers shared with operator caches.
CxArray fft2c_plane(const CxArray &plane);
CxArray ifft2c_plane(const CxArray &plane);

// Circular shift with wrap-around; dr/dc may be negative.
CxArray circshift(const CxArray &a, Index dr, Index dc);

}  // namespace spiritdiff
