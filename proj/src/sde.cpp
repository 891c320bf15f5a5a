#include "spiritdiff/sde.hpp"

#include <cmath>

namespace spiritdiff {

namespace {

double integral_eta(const SdeSchedule &sch, double tau)
{
  return sch.eta_min * tau + (sch.eta_max - sch.eta_min) * tau * tau / (2.0 * sch.T);
}

double adaptive_simpson(const std::function<double(double)> &f, double a, double m, double b,
                        double fa, double fm, double fb, double whole, double tol, int depth)
{
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, lm, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, m, rm, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)> &f, double a, double b, double tol)
{
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, m, b, fa, fm, fb, whole, tol, 40);
}

CoilImage project_or_pass(const SensitivityMaps *s, const CoilImage &z)
{
  return s ? q_project(*s, z) : z;
}

}  // namespace

void SdeSchedule::validate() const
{
  if (T <= 0.0) { throw std::invalid_argument("SdeSchedule: T must be > 0"); }
  if (beta_min <= 0.0 || beta_max <= 0.0) {
    throw std::invalid_argument("SdeSchedule: beta must stay positive");
  }
  if (eta_min < 0.0 || eta_max < 0.0) {
    throw std::invalid_argument("SdeSchedule: eta must stay nonnegative");
  }
  if (n_steps < 1) { throw std::invalid_argument("SdeSchedule: n_steps must be >= 1"); }
}

double sigma2(const SdeSchedule &sch, double t)
{
  if (t < -1e-12 || t > sch.T + 1e-12) {
    throw std::domain_error("sigma2: t outside [0, T]");
  }
  t = std::min(std::max(t, 0.0), sch.T);
  if (t == 0.0) { return 0.0; }

  const double b0 = sch.beta_min;
  const double b1 = (sch.beta_max - sch.beta_min) / sch.T;
  if (sch.eta_min == sch.eta_max) {
    const double e = sch.eta_min;
    if (e == 0.0) { return 0.5 * (b0 * t + 0.5 * b1 * t * t); }
    const double em = std::expm1(e * t);
    return 0.5 * (b0 * em / e + b1 * (em - e * t) / (e * e));
  }
  const double ht = integral_eta(sch, t);
  auto f = [&](double tau) { return sch.beta(tau) * std::exp(ht - integral_eta(sch, tau)); };
  return 0.5 * integrate(f, 0.0, t, 1e-10);
}

double sigma(const SdeSchedule &sch, double t) { return std::sqrt(sigma2(sch, t)); }

CoilImage perturb(const CoilImage &x0, double t, const SdeSchedule &sch,
                  const SensitivityMaps *s, Prng &rng)
{
  check_finite(x0, "perturb");
  const double sd = sigma(sch, t);
  CoilImage noise = project_or_pass(s, complex_noise(x0.ncoils(), x0.ny(), x0.nx(), rng));
  CoilImage out = x0;
  axpy(Cx(sd, 0.0), noise, out);
  return out;
}

DiffusionState simulate_forward(const CoilImage &x0, const SdeSchedule &sch,
                                const SpiritKernel *ker, const SensitivityMaps *s,
                                int n_steps, Prng &rng, double t0, double t1)
{
  sch.validate();
  check_finite(x0, "simulate_forward");
  if (n_steps < 1) { throw std::invalid_argument("simulate_forward: n_steps must be >= 1"); }
  if (t1 < 0.0) { t1 = sch.T; }
  if (t0 < 0.0 || t1 > sch.T || t1 < t0) {
    throw std::domain_error("simulate_forward: bad time interval");
  }
  const bool with_drift = !sch.eta_is_zero();
  if (with_drift && ker == nullptr) {
    throw std::invalid_argument("simulate_forward: nonzero eta needs a kernel");
  }
  PsiOperator psi_op;
  if (with_drift) { psi_op = make_psi(*ker, x0.ny(), x0.nx()); }

  const double dt = (t1 - t0) / n_steps;
  CoilImage x = x0;
  for (int k = 0; k < n_steps; ++k) {
    const double tm = t0 + (k + 0.5) * dt;
    if (with_drift) {
      const CoilImage drift = psi_op.apply(x);
      axpy(Cx(0.5 * sch.eta(tm) * dt, 0.0), drift, x);
    }
    CoilImage noise = project_or_pass(s, complex_noise(x.ncoils(), x.ny(), x.nx(), rng));
    axpy(Cx(std::sqrt(0.5 * sch.beta(tm) * dt), 0.0), noise, x);
  }
  return {std::move(x), t1};
}

DiffusionState reverse_step(const DiffusionState &state, double dt, const ScoreFn &score,
                            const SdeSchedule &sch, const PsiOperator *psi_op,
                            const SensitivityMaps *s, Prng &rng, bool add_noise,
                            bool single_projection)
{
  if (dt <= 0.0) { throw std::invalid_argument("reverse_step: dt must be > 0"); }
  if (state.t - dt < -1e-9) { throw std::domain_error("reverse_step: step past t = 0"); }
  const double tm = state.t - 0.5 * dt;
  const double beta_m = sch.beta(tm);
  const bool with_drift = !sch.eta_is_zero();
  if (with_drift && psi_op == nullptr) {
    throw std::invalid_argument("reverse_step: nonzero eta needs the consistency operator");
  }

  CoilImage x = state.x;
  if (with_drift) {
    const CoilImage drift = psi_op->apply(x);
    axpy(Cx(-0.5 * sch.eta(tm) * dt, 0.0), drift, x);
  }
  CoilImage g = score(state.x, state.t);
  check_same_shape(g, x, "reverse_step score");
  if (s) {
    g = q_project(*s, g);
    if (!single_projection) { g = q_project(*s, g); }
  }
  axpy(Cx(0.5 * beta_m * dt, 0.0), g, x);
  if (add_noise) {
    CoilImage noise = project_or_pass(s, complex_noise(x.ncoils(), x.ny(), x.nx(), rng));
    axpy(Cx(std::sqrt(0.5 * beta_m * dt), 0.0), noise, x);
  }
  return {std::move(x), std::max(state.t - dt, 0.0)};
}

DiffusionState reverse_step(const DiffusionState &state, double dt, const ScoreFn &score,
                            const SdeSchedule &sch, const SpiritKernel *ker,
                            const SensitivityMaps *s, Prng &rng, bool add_noise)
{
  if (!sch.eta_is_zero()) {
    if (ker == nullptr) {
      throw std::invalid_argument("reverse_step: nonzero eta needs a kernel");
    }
    const PsiOperator psi_op = make_psi(*ker, state.x.ny(), state.x.nx());
    return reverse_step(state, dt, score, sch, &psi_op, s, rng, add_noise);
  }
  return reverse_step(state, dt, score, sch, static_cast<const PsiOperator *>(nullptr), s,
                      rng, add_noise);
}

CoilImage sample_reverse(const KSpaceGrid &y, const SamplingMask &m, const ScoreFn &score,
                         const SdeSchedule &sch, const SpiritKernel *ker,
                         const SensitivityMaps *s, const SamplerConfig &cfg, Prng &rng,
                         const SampleObserver &observer)
{
  sch.validate();
  check_mask_shape(y, m, "sample_reverse");
  check_finite(y, "sample_reverse");
  if (m.count() == 0) {
    throw std::invalid_argument("sample_reverse: mask has no sampled locations");
  }
  if (cfg.n_steps < 1) { throw std::invalid_argument("sample_reverse: n_steps must be >= 1"); }
  const bool with_drift = !sch.eta_is_zero();
  if (with_drift && ker == nullptr) {
    throw std::invalid_argument("sample_reverse: nonzero eta needs a kernel");
  }
  PsiOperator psi_op;
  if (with_drift) { psi_op = make_psi(*ker, y.ny(), y.nx()); }

  CoilImage x = acquire_adjoint(y, m);
  {
    CoilImage noise = project_or_pass(s, complex_noise(y.ncoils(), y.ny(), y.nx(), rng));
    axpy(Cx(sigma(sch, sch.T), 0.0), noise, x);
  }

  const double dt = sch.T / cfg.n_steps;
  for (int k = cfg.n_steps; k >= 1; --k) {
    const DiffusionState state{std::move(x), sch.T * k / cfg.n_steps};
    DiffusionState next = reverse_step(state, dt, score, sch, with_drift ? &psi_op : nullptr,
                                       s, rng, k > 1);
    x = std::move(next.x);
    const double t = next.t;

    if (cfg.corrector.enabled) {
      for (int inner = 0; inner < cfg.corrector.n_inner; ++inner) {
        CoilImage g = project_or_pass(s, score(x, t));
        CoilImage z = project_or_pass(s, complex_noise(x.ncoils(), x.ny(), x.nx(), rng));
        const double ng = norm2(g), nz = norm2(z);
        if (ng <= 1e-300) { continue; }
        const double eps = 2.0 * (cfg.corrector.snr * nz / ng) * (cfg.corrector.snr * nz / ng);
        axpy(Cx(eps, 0.0), g, x);
        axpy(Cx(std::sqrt(2.0 * eps), 0.0), z, x);
      }
    }

    switch (cfg.dc.mode) {
      case DcMode::Hard:
        x = ifft2c(dc_replace(fft2c(x), y, m));
        break;
      case DcMode::Gradient: {
        const CoilImage step = acquire_adjoint(acquire(x, m) - y, m);
        axpy(Cx(-cfg.dc.lambda, 0.0), step, x);
        break;
      }
      case DcMode::None:
        break;
    }
    if (observer) { observer(k - 1, t, x); }
  }
  return x;
}

}  // namespace spiritdiff
