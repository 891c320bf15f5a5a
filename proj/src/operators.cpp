#include "spiritdiff/operators.hpp"

namespace spiritdiff {

namespace {

void check_maps_shape(const SensitivityMaps &s, const CoilImage &x, const char *where)
{
  if (s.ncoils() != x.ncoils() || s.ny() != x.ny() || s.nx() != x.nx()) {
    throw ShapeError(std::string(where) + ": maps shape mismatch");
  }
}

void check_kernel_grid(const SpiritKernel &ker, Index ncoils, Index ny, Index nx,
                       const char *where)
{
  if (ker.ncoils != ncoils) { throw ShapeError(std::string(where) + ": coil count mismatch"); }
  if (ny < ker.kh || nx < ker.kw) {
    throw ShapeError(std::string(where) + ": grid smaller than kernel support");
  }
}

}  // namespace

SensitivityMaps normalize_maps(const CoilImage &raw)
{
  check_finite(raw, "normalize_maps");
  SensitivityMaps s;
  s.norm = RealArray::Zero(raw.ny(), raw.nx());
  for (const auto &coil : raw.coils) { s.norm += coil.abs2(); }
  s.norm = s.norm.sqrt();
  const RealArray inv = (s.norm > 0.0).select(1.0 / s.norm, RealArray::Zero(raw.ny(), raw.nx()));
  s.maps.reserve(raw.coils.size());
  for (const auto &coil : raw.coils) { s.maps.push_back(coil * inv.cast<Cx>()); }
  return s;
}

CxArray combine_coils(const SensitivityMaps &s, const CoilImage &x)
{
  check_maps_shape(s, x, "combine_coils");
  CxArray combined = CxArray::Zero(x.ny(), x.nx());
  for (Index i = 0; i < x.ncoils(); ++i) {
    combined += s.maps[static_cast<size_t>(i)].conjugate() * x.coils[static_cast<size_t>(i)];
  }
  return combined;
}

CoilImage q_project(const SensitivityMaps &s, const CoilImage &x)
{
  const CxArray combined = combine_coils(s, x);
  CoilImage out;
  out.coils.reserve(x.coils.size());
  for (Index i = 0; i < x.ncoils(); ++i) {
    out.coils.push_back(s.maps[static_cast<size_t>(i)] * combined);
  }
  return out;
}

KSpaceGrid phi_kspace(const SpiritKernel &ker, const KSpaceGrid &k)
{
  check_kernel_grid(ker, k.ncoils(), k.ny(), k.nx(), "phi_kspace");
  const Index nc = k.ncoils(), ny = k.ny(), nx = k.nx();
  const Index cy = ker.kh / 2, cx = ker.kw / 2;
  auto out = KSpaceGrid::zeros(nc, ny, nx);
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) {
      const CxArray &w = ker.w(i, j);
      const CxArray &in = k.coils[static_cast<size_t>(j)];
      CxArray &acc = out.coils[static_cast<size_t>(i)];
      for (Index dy = 0; dy < ker.kh; ++dy) {
        for (Index dx = 0; dx < ker.kw; ++dx) {
          const Cx wv = w(dy, dx);
          if (wv == Cx(0.0, 0.0)) { continue; }
          acc += wv * circshift(in, -(dy - cy), -(dx - cx));
        }
      }
    }
  }
  return out;
}

PhiImageKernels make_phi_image_kernels(const SpiritKernel &ker, Index ny, Index nx)
{
  check_kernel_grid(ker, ker.ncoils, ny, nx, "make_phi_image_kernels");
  const double scale = std::sqrt(static_cast<double>(ny * nx));
  const Index cy = ny / 2, cx = nx / 2;
  const Index ky = ker.kh / 2, kx = ker.kw / 2;
  PhiImageKernels pk;
  pk.ncoils = ker.ncoils;
  pk.ny = ny;
  pk.nx = nx;
  pk.g.reserve(ker.weights.size());
  for (const auto &w : ker.weights) {
    CxArray pad = CxArray::Zero(ny, nx);
    for (Index dy = 0; dy < ker.kh; ++dy) {
      for (Index dx = 0; dx < ker.kw; ++dx) {
        pad(((cy - (dy - ky)) % ny + ny) % ny, ((cx - (dx - kx)) % nx + nx) % nx) = w(dy, dx);
      }
    }
    pk.g.push_back(scale * ifft2c_plane(pad));
  }
  return pk;
}

CoilImage phi_image(const PhiImageKernels &pk, const CoilImage &x)
{
  if (pk.ncoils != x.ncoils() || pk.ny != x.ny() || pk.nx != x.nx()) {
    throw ShapeError("phi_image: cached kernels do not match input resolution");
  }
  auto out = CoilImage::zeros(pk.ncoils, pk.ny, pk.nx);
  for (Index i = 0; i < pk.ncoils; ++i) {
    for (Index j = 0; j < pk.ncoils; ++j) {
      out.coils[static_cast<size_t>(i)] +=
          pk.g[static_cast<size_t>(i * pk.ncoils + j)] * x.coils[static_cast<size_t>(j)];
    }
  }
  return out;
}

PsiOperator make_psi(const SpiritKernel &ker, Index ny, Index nx)
{
  const PhiImageKernels pk = make_phi_image_kernels(ker, ny, nx);
  const Index nc = pk.ncoils;
  PsiOperator op;
  op.ncoils = nc;
  op.ny = ny;
  op.nx = nx;
  op.m.assign(static_cast<size_t>(nc * nc), CxArray());
  for (Index i = 0; i < nc; ++i) {
    for (Index j = 0; j < nc; ++j) {
      CxArray acc = CxArray::Zero(ny, nx);
      for (Index l = 0; l < nc; ++l) {
        CxArray gi = pk.g[static_cast<size_t>(l * nc + i)];
        CxArray gj = pk.g[static_cast<size_t>(l * nc + j)];
        if (l == i) { gi -= 1.0; }
        if (l == j) { gj -= 1.0; }
        acc += gi.conjugate() * gj;
      }
      op.m[static_cast<size_t>(i * nc + j)] = acc;
    }
  }
  return op;
}

CoilImage PsiOperator::apply(const CoilImage &x) const
{
  if (ncoils != x.ncoils() || ny != x.ny() || nx != x.nx()) {
    throw ShapeError("PsiOperator: shape mismatch");
  }
  auto out = CoilImage::zeros(ncoils, ny, nx);
  for (Index i = 0; i < ncoils; ++i) {
    for (Index j = 0; j < ncoils; ++j) {
      out.coils[static_cast<size_t>(i)] +=
          m[static_cast<size_t>(i * ncoils + j)] * x.coils[static_cast<size_t>(j)];
    }
  }
  return out;
}

CoilImage psi(const SpiritKernel &ker, const CoilImage &x)
{
  return make_psi(ker, x.ny(), x.nx()).apply(x);
}

double self_consistency_residual(const SpiritKernel &ker, const SensitivityMaps &s,
                                 const CoilImage &z)
{
  const KSpaceGrid k = fft2c(q_project(s, z));
  const double den = norm2(k);
  if (den == 0.0) { return 0.0; }
  const KSpaceGrid num = phi_kspace(ker, k) - k;
  return norm2(num) / den;
}

KSpaceGrid acquire(const CoilImage &x, const SamplingMask &m)
{
  return apply_mask(fft2c(x), m);
}

CoilImage acquire_adjoint(const KSpaceGrid &y, const SamplingMask &m)
{
  return ifft2c(apply_mask(y, m));
}

KSpaceGrid dc_replace(const KSpaceGrid &k_iter, const KSpaceGrid &y, const SamplingMask &m)
{
  check_same_shape(k_iter, y, "dc_replace");
  check_mask_shape(k_iter, m, "dc_replace");
  KSpaceGrid out = k_iter;
  const CxArray keep = m.keep.cast<Cx>();
  for (Index i = 0; i < out.ncoils(); ++i) {
    out.coils[static_cast<size_t>(i)] =
        (1.0 - m.keep).cast<Cx>() * k_iter.coils[static_cast<size_t>(i)] +
        keep * y.coils[static_cast<size_t>(i)];
  }
  return out;
}

}  // namespace spiritdiff
