#pragma once

#include "spiritdiff/operators.hpp"
#include "spiritdiff/rng.hpp"

namespace spiritdiff {

struct Ellipse {
  double cy = 0, cx = 0, ay = 1, ax = 1, angle = 0, intensity = 0;
};

// Annulus with a thin wall so fine structure survives or breaks visibly
// under undersampling.
struct VesselRing {
  double cy = 0, cx = 0, r_inner = 0, r_outer = 0, intensity = 0;
};

struct PhantomSpec {
  Index size = 64;
  std::vector<Ellipse> ellipses;
  std::vector<VesselRing> rings;
};

PhantomSpec default_phantom_spec(Index size = 64);

// Deterministic additive rasterization of the shape list on a size x size grid.
RealArray make_phantom(const PhantomSpec &spec);

// Smooth complex lobes centered at equally spaced border positions, with a
// per-coil linear phase ramp, normalized to unit per-pixel l2 norm. decay
// scales the lobe width relative to the grid; angle0 rotates the lobe ring.
SensitivityMaps make_sensitivities(Index ncoils, Index ny, Index nx, double decay,
                                   double phase_scale = 0.5, double angle0 = 0.0);

enum class MaskScheme { Uniform, Random };

// Phase-encode line mask: a centered ACS block plus enough extra lines to
// reach round(ny / R) kept lines in total. rng is only used by the random
// scheme.
SamplingMask make_mask(Index ny, Index nx, Index R, Index acs_lines,
                       MaskScheme scheme = MaskScheme::Uniform, Prng *rng = nullptr);

Index mask_kept_lines(const SamplingMask &m);
double mask_acceleration(const SamplingMask &m);

struct Acquisition {
  KSpaceGrid y;
  CoilImage truth;
};

// truth_i = s_i * phantom; y = masked transform plus measurement noise of
// std noise_sigma per real component at sampled locations.
Acquisition simulate_acquisition(const RealArray &phantom, const SensitivityMaps &s,
                                 const SamplingMask &m, double noise_sigma, Prng &rng);

}  // namespace spiritdiff
