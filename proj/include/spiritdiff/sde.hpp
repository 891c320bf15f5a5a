#pragma once

#include "spiritdiff/operators.hpp"
#include "spiritdiff/rng.hpp"

#include <functional>

namespace spiritdiff {

// Linear noise and drift rate schedules on [0, T]. sigma2 is the variance of
// each real noise component accumulated along the projected subspace.
struct SdeSchedule {
  double beta_min = 0.1;
  double beta_max = 10.0;
  double eta_min = 1.0;
  double eta_max = 1.0;
  double T = 1.0;
  int n_steps = 500;

  double beta(double t) const { return beta_min + (t / T) * (beta_max - beta_min); }
  double eta(double t) const { return eta_min + (t / T) * (eta_max - eta_min); }
  bool eta_is_zero() const { return eta_min == 0.0 && eta_max == 0.0; }
  void validate() const;
};

// Accumulated noise variance 0.5 * int_0^t beta(tau) exp(int_tau^t eta) dtau.
// Closed form for constant eta, adaptive quadrature otherwise.
double sigma2(const SdeSchedule &sch, double t);
double sigma(const SdeSchedule &sch, double t);

struct DiffusionState {
  CoilImage x;
  double t = 0.0;
};

// One draw from the perturbation kernel: x0 + sigma(t) * projected noise.
// ker-free because the projected noise is already a fixed point of the
// consistency constraint the drift enforces. s == nullptr means no projection.
CoilImage perturb(const CoilImage &x0, double t, const SdeSchedule &sch,
                  const SensitivityMaps *s, Prng &rng);

// Euler-Maruyama integration of dx = (eta/2) Psi x dt + sqrt(beta) Q dw over
// [t0, t1]; rates evaluated at step midpoints. ker == nullptr is only valid
// for an identically zero eta schedule.
DiffusionState simulate_forward(const CoilImage &x0, const SdeSchedule &sch,
                                const SpiritKernel *ker, const SensitivityMaps *s,
                                int n_steps, Prng &rng, double t0 = 0.0, double t1 = -1.0);

using ScoreFn = std::function<CoilImage(const CoilImage &, double)>;

// One reverse-time step from state.t to state.t - dt:
// x <- x - [(eta/2) Psi x - (beta/2) Q Q score] dt + sqrt(beta dt / 2) Q z.
// The projection is applied twice literally; idempotence makes it one.
DiffusionState reverse_step(const DiffusionState &state, double dt, const ScoreFn &score,
                            const SdeSchedule &sch, const PsiOperator *psi_op,
                            const SensitivityMaps *s, Prng &rng, bool add_noise = true,
                            bool single_projection = false);

DiffusionState reverse_step(const DiffusionState &state, double dt, const ScoreFn &score,
                            const SdeSchedule &sch, const SpiritKernel *ker,
                            const SensitivityMaps *s, Prng &rng, bool add_noise = true);

struct CorrectorConfig {
  bool enabled = false;
  int n_inner = 1;
  double snr = 0.16;
};

enum class DcMode { Hard, Gradient, None };

struct DcConfig {
  DcMode mode = DcMode::Hard;
  double lambda = 1.0;
};

struct SamplerConfig {
  int n_steps = 500;
  CorrectorConfig corrector;
  DcConfig dc;
};

using SampleObserver = std::function<void(int step, double t, const CoilImage &x)>;

// Annealed reverse sampler: init from the adjoint image plus matched noise at
// t = T, then per iteration predictor, optional Langevin corrector, data
// consistency. The last predictor step is taken without noise injection.
CoilImage sample_reverse(const KSpaceGrid &y, const SamplingMask &m, const ScoreFn &score,
                         const SdeSchedule &sch, const SpiritKernel *ker,
                         const SensitivityMaps *s, const SamplerConfig &cfg, Prng &rng,
                         const SampleObserver &observer = {});

}  // namespace spiritdiff
