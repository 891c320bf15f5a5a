#pragma once

#include "spiritdiff/sde.hpp"

namespace spiritdiff {

struct ZfResult {
  CoilImage coils;
  CxArray combined;
};

// Adjoint of the masked acquisition plus conjugate-sensitivity combine.
ZfResult recon_zero_filled(const KSpaceGrid &y, const SamplingMask &m, const SensitivityMaps &s);

struct CgConfig {
  int n_iter = 50;
  double tol = 1e-8;
  double lambda_reg = 0.01;
};

struct CgSpiritResult {
  CoilImage image;
  // monitored objective |(Phi - I)x|^2 + lambda^2 |u|^2 per iteration,
  // entry 0 before the first update
  std::vector<double> objective;
  bool converged = false;
};

// Conjugate gradient on the unsampled k-space entries with sampled entries
// held at y: min |(Phi - I)x|^2 + lambda^2 |u|^2 over the mask complement.
CgSpiritResult recon_cg_spirit(const KSpaceGrid &y, const SamplingMask &m,
                               const SpiritKernel &ker, const CgConfig &cfg = {});

// Coil-independent annealed sampler: the shared reverse stepper with the
// drift schedule zeroed and no coil coupling, hard data consistency.
CoilImage recon_vesde(const KSpaceGrid &y, const SamplingMask &m, const ScoreFn &score,
                      const SdeSchedule &sch, int n_steps, Prng &rng,
                      const SampleObserver &observer = {});

struct SpiritDiffResult {
  CoilImage coils;
  CxArray combined;
};

SpiritDiffResult recon_spirit_diffusion(const KSpaceGrid &y, const SamplingMask &m,
                                        const SpiritKernel &ker, const SensitivityMaps &s,
                                        const ScoreFn &score, const SdeSchedule &sch,
                                        const SamplerConfig &cfg, Prng &rng,
                                        const SampleObserver &observer = {});

// Peak signal-to-noise ratio of complex images over the complex difference;
// peak < 0 means max |b|. Exact matches report the 200 dB cap.
double psnr(const CxArray &a, const CxArray &b, double peak = -1.0);

// |a - b| / |b|; throws on a zero-norm reference.
double nrmse(const CxArray &a, const CxArray &b);

// |a - b| scaled into [0, 1] by its own maximum.
RealArray error_map(const CxArray &a, const CxArray &b);

}  // namespace spiritdiff
