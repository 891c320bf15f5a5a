#include "spiritdiff/recon.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "spiritdiff/fourier.hpp"

namespace spiritdiff {

ZfResult recon_zero_filled(const KSpaceGrid &y, const SamplingMask &m, const SensitivityMaps &s)
{
  ZfResult out;
  out.coils = acquire_adjoint(y, m);
  out.combined = combine_coils(s, out.coils);
  return out;
}

namespace {

// restrict to the mask complement, the free variables of the hard-DC problem
KSpaceGrid complement(const KSpaceGrid &k, const SamplingMask &m)
{
  KSpaceGrid out = k;
  for (auto &c : out.coils) c *= (1.0 - m.keep).cast<Cx>();
  return out;
}

}  // namespace

CgSpiritResult recon_cg_spirit(const KSpaceGrid &y, const SamplingMask &m,
                               const SpiritKernel &ker, const CgConfig &cfg)
{
  check_mask_shape(y, m, "recon_cg_spirit");
  if (cfg.n_iter < 0) throw std::invalid_argument("recon_cg_spirit: negative iteration cap");
  const KSpaceGrid ys = apply_mask(y, m);

  const PsiOperator psi_op = make_psi(ker, y.ny(), y.nx());
  const PhiImageKernels pk = make_phi_image_kernels(ker, y.ny(), y.nx());
  const auto consistency_sq = [&](const KSpaceGrid &k) {
    const CoilImage xi = ifft2c(k);
    return norm2_sq(phi_image(pk, xi) - xi);
  };

  CgSpiritResult res;
  res.objective.push_back(consistency_sq(ys));
  if (m.count() == m.keep.size()) {
    res.image = ifft2c(ys);
    res.converged = true;
    return res;
  }

  const double lam2 = cfg.lambda_reg * cfg.lambda_reg;
  const auto normal_op = [&](const KSpaceGrid &u) {
    KSpaceGrid out = complement(fft2c(psi_op.apply(ifft2c(u))), m);
    if (lam2 > 0.0) axpy(Cx(lam2, 0.0), u, out);
    return out;
  };

  auto u = KSpaceGrid::zeros(y.ncoils(), y.ny(), y.nx());
  KSpaceGrid r = (-1.0) * complement(fft2c(psi_op.apply(ifft2c(ys))), m);
  KSpaceGrid p = r;
  double rs = norm2_sq(r);
  const double rs0 = rs;
  if (rs0 == 0.0) {
    res.image = ifft2c(ys);
    res.converged = true;
    return res;
  }

  for (int it = 0; it < cfg.n_iter; ++it) {
    const KSpaceGrid bp = normal_op(p);
    const double pbp = dot(p, bp).real();
    if (pbp <= 0.0) break;  // search direction in the null space; nothing left to improve
    const double alpha = rs / pbp;
    axpy(Cx(alpha, 0.0), p, u);
    axpy(Cx(-alpha, 0.0), bp, r);
    const double rs_new = norm2_sq(r);
    res.objective.push_back(consistency_sq(ys + u) + lam2 * norm2_sq(u));
    if (std::sqrt(rs_new) <= cfg.tol * std::sqrt(rs0)) {
      res.converged = true;
      break;
    }
    KSpaceGrid pn = r;
    axpy(Cx(rs_new / rs, 0.0), p, pn);
    p = std::move(pn);
    rs = rs_new;
  }
  res.image = ifft2c(ys + u);
  return res;
}

CoilImage recon_vesde(const KSpaceGrid &y, const SamplingMask &m, const ScoreFn &score,
                      const SdeSchedule &sch, int n_steps, Prng &rng,
                      const SampleObserver &observer)
{
  SdeSchedule ve = sch;
  ve.eta_min = 0.0;
  ve.eta_max = 0.0;
  SamplerConfig cfg;
  cfg.n_steps = n_steps;
  return sample_reverse(y, m, score, ve, nullptr, nullptr, cfg, rng, observer);
}

SpiritDiffResult recon_spirit_diffusion(const KSpaceGrid &y, const SamplingMask &m,
                                        const SpiritKernel &ker, const SensitivityMaps &s,
                                        const ScoreFn &score, const SdeSchedule &sch,
                                        const SamplerConfig &cfg, Prng &rng,
                                        const SampleObserver &observer)
{
  SpiritDiffResult out;
  out.coils = sample_reverse(y, m, score, sch, &ker, &s, cfg, rng, observer);
  out.combined = combine_coils(s, out.coils);
  return out;
}

double psnr(const CxArray &a, const CxArray &b, double peak)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("psnr: shape mismatch");
  if (a.size() == 0) throw std::invalid_argument("psnr: empty image");
  if (peak < 0.0) peak = b.abs().maxCoeff();
  const double rmse = std::sqrt((a - b).abs2().mean());
  constexpr double cap = 200.0;
  if (rmse == 0.0) return cap;
  if (peak <= 0.0) throw std::invalid_argument("psnr: nonpositive peak");
  return std::min(cap, 20.0 * std::log10(peak / rmse));
}

double nrmse(const CxArray &a, const CxArray &b)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("nrmse: shape mismatch");
  const double nb = std::sqrt(b.abs2().sum());
  if (nb == 0.0) throw std::invalid_argument("nrmse: zero-norm reference");
  return std::sqrt((a - b).abs2().sum()) / nb;
}

RealArray error_map(const CxArray &a, const CxArray &b)
{
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("error_map: shape mismatch");
  RealArray e = (a - b).abs();
  const double mx = e.size() > 0 ? e.maxCoeff() : 0.0;
  if (mx > 0.0) e /= mx;
  return e;
}

}  // namespace spiritdiff
