#include "spiritdiff/simdata.hpp"

#include "spiritdiff/fourier.hpp"

#include <algorithm>
#include <cmath>

namespace spiritdiff {

PhantomSpec default_phantom_spec(Index size)
{
  const double u = static_cast<double>(size) / 64.0;
  PhantomSpec spec;
  spec.size = size;
  spec.ellipses = {
      {32 * u, 32 * u, 26 * u, 22 * u, 0.3, 0.8},
      {25 * u, 27 * u, 9 * u, 7 * u, -0.5, 0.25},
      {40 * u, 39 * u, 6 * u, 9 * u, 0.9, -0.2},
  };
  spec.rings = {
      {22 * u, 44 * u, 4.5 * u, 6.5 * u, 0.55},
      {44 * u, 22 * u, 3.0 * u, 5.5 * u, 0.6},
      {43 * u, 42 * u, 2.5 * u, 4.5 * u, -0.3},
  };
  return spec;
}

RealArray make_phantom(const PhantomSpec &spec)
{
  if (spec.size < 16) { throw std::invalid_argument("make_phantom: size must be >= 16"); }
  for (const auto &e : spec.ellipses) {
    if (!std::isfinite(e.intensity)) {
      throw std::invalid_argument("make_phantom: non-finite intensity");
    }
  }
  for (const auto &g : spec.rings) {
    if (!std::isfinite(g.intensity)) {
      throw std::invalid_argument("make_phantom: non-finite intensity");
    }
  }
  RealArray img = RealArray::Zero(spec.size, spec.size);
  for (Index r = 0; r < spec.size; ++r) {
    for (Index c = 0; c < spec.size; ++c) {
      double v = 0.0;
      for (const auto &e : spec.ellipses) {
        const double dy = r - e.cy, dx = c - e.cx;
        const double yr = std::cos(e.angle) * dy + std::sin(e.angle) * dx;
        const double xr = -std::sin(e.angle) * dy + std::cos(e.angle) * dx;
        const double q = (yr / e.ay) * (yr / e.ay) + (xr / e.ax) * (xr / e.ax);
        if (q <= 1.0) { v += e.intensity; }
      }
      for (const auto &g : spec.rings) {
        const double d = std::hypot(r - g.cy, c - g.cx);
        if (d >= g.r_inner && d <= g.r_outer) { v += g.intensity; }
      }
      img(r, c) = v;
    }
  }
  return img;
}

SensitivityMaps make_sensitivities(Index ncoils, Index ny, Index nx, double decay,
                                   double phase_scale, double angle0)
{
  if (ncoils < 1) { throw std::invalid_argument("make_sensitivities: ncoils must be >= 1"); }
  if (ny < 1 || nx < 1) { throw std::invalid_argument("make_sensitivities: empty grid"); }
  if (decay <= 0.0) { throw std::invalid_argument("make_sensitivities: decay must be > 0"); }
  const double cy0 = 0.5 * (ny - 1), cx0 = 0.5 * (nx - 1);
  const double ry = 0.5 * (ny - 1), rx = 0.5 * (nx - 1);
  const double w = 0.5 * decay * std::min(ny, nx);
  const double span = std::max(ny, nx);

  CoilImage raw;
  raw.coils.reserve(static_cast<size_t>(ncoils));
  for (Index c = 0; c < ncoils; ++c) {
    const double th = angle0 + 2.0 * M_PI * c / ncoils;
    const double ly = cy0 + ry * std::sin(th);
    const double lx = cx0 + rx * std::cos(th);
    const double ramp = ncoils > 1 ? (c - 0.5 * (ncoils - 1)) / ncoils : 0.0;
    CxArray plane(ny, nx);
    for (Index r = 0; r < ny; ++r) {
      for (Index q = 0; q < nx; ++q) {
        const double d2 = (r - ly) * (r - ly) + (q - lx) * (q - lx);
        const double mag = std::exp(-d2 / (2.0 * w * w));
        const double ph = 2.0 * M_PI * phase_scale * ramp * ((r - cy0) + (q - cx0)) / span;
        plane(r, q) = std::polar(mag, ph);
      }
    }
    raw.coils.push_back(std::move(plane));
  }
  return normalize_maps(raw);
}

SamplingMask make_mask(Index ny, Index nx, Index R, Index acs_lines, MaskScheme scheme,
                       Prng *rng)
{
  if (ny < 1 || nx < 1) { throw std::invalid_argument("make_mask: empty grid"); }
  if (R < 1) { throw std::invalid_argument("make_mask: R must be >= 1"); }
  if (acs_lines < 1) { throw std::invalid_argument("make_mask: acs_lines must be >= 1"); }
  if (acs_lines > ny) { throw std::invalid_argument("make_mask: ACS exceeds grid"); }

  Index budget = std::max<Index>(1, static_cast<Index>(std::llround(double(ny) / double(R))));
  if (acs_lines > budget) {
    throw std::invalid_argument("make_mask: ACS alone exceeds the line budget");
  }
  if (acs_lines == budget) { budget += 1; }

  const Index r0 = (ny - acs_lines) / 2;
  const Index extra = budget - acs_lines;
  const Index comp = ny - acs_lines;
  if (extra > comp) {
    throw std::invalid_argument("make_mask: line budget infeasible for this grid");
  }

  std::vector<Index> chosen;
  chosen.reserve(static_cast<size_t>(extra));
  if (scheme == MaskScheme::Uniform) {
    for (Index k = 0; k < extra; ++k) {
      chosen.push_back(static_cast<Index>((k + 0.5) * double(comp) / double(extra)));
    }
  } else {
    if (rng == nullptr) {
      throw std::invalid_argument("make_mask: random scheme needs a generator");
    }
    std::vector<Index> pool(static_cast<size_t>(comp));
    for (Index i = 0; i < comp; ++i) { pool[static_cast<size_t>(i)] = i; }
    for (Index k = 0; k < extra; ++k) {
      const Index pick = k + static_cast<Index>(rng->uniform01() * double(comp - k));
      std::swap(pool[static_cast<size_t>(k)], pool[static_cast<size_t>(pick)]);
      chosen.push_back(pool[static_cast<size_t>(k)]);
    }
  }

  SamplingMask m;
  m.keep = RealArray::Zero(ny, nx);
  m.acs = {r0, r0 + acs_lines, 0, nx};
  for (Index r = r0; r < r0 + acs_lines; ++r) { m.keep.row(r).setOnes(); }
  for (Index pos : chosen) {
    const Index row = pos < r0 ? pos : pos + acs_lines;
    m.keep.row(row).setOnes();
  }
  validate_mask(m);
  return m;
}

Index mask_kept_lines(const SamplingMask &m)
{
  Index n = 0;
  for (Index r = 0; r < m.ny(); ++r) {
    if (m.keep.row(r).sum() > 0.0) { ++n; }
  }
  return n;
}

double mask_acceleration(const SamplingMask &m)
{
  const Index kept = mask_kept_lines(m);
  return kept > 0 ? double(m.ny()) / double(kept) : 0.0;
}

Acquisition simulate_acquisition(const RealArray &phantom, const SensitivityMaps &s,
                                 const SamplingMask &m, double noise_sigma, Prng &rng)
{
  if (phantom.rows() != s.ny() || phantom.cols() != s.nx()) {
    throw ShapeError("simulate_acquisition: phantom and maps disagree");
  }
  if (!phantom.allFinite()) {
    throw NonFiniteError("simulate_acquisition: non-finite phantom");
  }
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("simulate_acquisition: negative noise level");
  }

  CoilImage truth;
  truth.coils.reserve(s.maps.size());
  for (const auto &map : s.maps) { truth.coils.push_back(map * phantom.cast<Cx>()); }

  Acquisition acq;
  acq.y = acquire(truth, m);
  acq.truth = std::move(truth);
  if (noise_sigma > 0.0) {
    KSpaceGrid noise = complex_noise<KSpaceDomainTag>(s.ncoils(), s.ny(), s.nx(), rng);
    axpy(Cx(noise_sigma, 0.0), apply_mask(noise, m), acq.y);
  }
  return acq;
}

}  // namespace spiritdiff
