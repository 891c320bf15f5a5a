#include "spiritdiff/fourier.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace spiritdiff {

namespace {

// fftshift moves DC from index 0 to floor(n/2); ifftshift is its inverse.
// Both are circular shifts, exact for odd sizes too.
CxArray shift2(const CxArray &a, Index dr, Index dc)
{
  return circshift(a, dr, dc);
}

CxArray fftshift2(const CxArray &a) { return shift2(a, a.rows() / 2, a.cols() / 2); }
CxArray ifftshift2(const CxArray &a)
{
  return shift2(a, -(a.rows() / 2), -(a.cols() / 2));
}

enum class Dir { Forward, Inverse };

// Unscaled DFT along both axes; orthonormal scale applied by the caller.
CxArray dft2(const CxArray &a, Dir dir)
{
  const Index ny = a.rows(), nx = a.cols();
  Eigen::FFT<double> fft;
  CxArray work = a;

  Eigen::VectorXcd in(ny), out(ny);
  for (Index c = 0; c < nx; ++c) {
    in = work.col(c).matrix();
    if (dir == Dir::Forward) {
      fft.fwd(out, in);
    } else {
      fft.inv(out, in);          // Eigen scales inv by 1/ny
      out *= static_cast<double>(ny);
    }
    work.col(c) = out.array();
  }

  Eigen::VectorXcd rin(nx), rout(nx);
  for (Index r = 0; r < ny; ++r) {
    rin = work.row(r).matrix().transpose();
    if (dir == Dir::Forward) {
      fft.fwd(rout, rin);
    } else {
      fft.inv(rout, rin);
      rout *= static_cast<double>(nx);
    }
    work.row(r) = rout.array().transpose();
  }
  return work;
}

}  // namespace

CxArray circshift(const CxArray &a, Index dr, Index dc)
{
  const Index ny = a.rows(), nx = a.cols();
  CxArray out(ny, nx);
  const Index sr = ((dr % ny) + ny) % ny;
  const Index sc = ((dc % nx) + nx) % nx;
  for (Index c = 0; c < nx; ++c) {
    const Index src_c = (c - sc + nx) % nx;
    for (Index r = 0; r < ny; ++r) {
      out(r, c) = a((r - sr + ny) % ny, src_c);
    }
  }
  return out;
}

CxArray fft2c_plane(const CxArray &plane)
{
  const double scale = 1.0 / std::sqrt(static_cast<double>(plane.size()));
  return fftshift2(dft2(ifftshift2(plane), Dir::Forward)) * scale;
}

CxArray ifft2c_plane(const CxArray &plane)
{
  const double scale = 1.0 / std::sqrt(static_cast<double>(plane.size()));
  return fftshift2(dft2(ifftshift2(plane), Dir::Inverse)) * scale;
}

KSpaceGrid fft2c(const CoilImage &img)
{
  check_finite(img, "fft2c");
  KSpaceGrid out;
  out.coils.reserve(img.coils.size());
  for (const auto &c : img.coils) { out.coils.push_back(fft2c_plane(c)); }
  return out;
}

CoilImage ifft2c(const KSpaceGrid &k)
{
  check_finite(k, "ifft2c");
  CoilImage out;
  out.coils.reserve(k.coils.size());
  for (const auto &c : k.coils) { out.coils.push_back(ifft2c_plane(c)); }
  return out;
}

KSpaceGrid apply_mask(const KSpaceGrid &k, const SamplingMask &m)
{
  check_mask_shape(k, m, "apply_mask");
  KSpaceGrid out = k;
  for (auto &c : out.coils) { c *= m.keep.cast<Cx>(); }
  return out;
}

void validate_mask(const SamplingMask &m)
{
  const auto &a = m.acs;
  if (a.row0 < 0 || a.col0 < 0 || a.row1 > m.ny() || a.col1 > m.nx() || a.rows() <= 0 ||
      a.cols() <= 0) {
    throw ShapeError("validate_mask: ACS region out of bounds");
  }
  for (Index r = a.row0; r < a.row1; ++r) {
    for (Index c = a.col0; c < a.col1; ++c) {
      if (!m.sampled(r, c)) { throw ShapeError("validate_mask: ACS not fully sampled"); }
    }
  }
  bool outside = false;
  for (Index r = 0; r < m.ny() && !outside; ++r) {
    for (Index c = 0; c < m.nx() && !outside; ++c) {
      const bool in_acs = r >= a.row0 && r < a.row1 && c >= a.col0 && c < a.col1;
      if (!in_acs && m.sampled(r, c)) { outside = true; }
    }
  }
  if (!outside) {
    throw ShapeError("validate_mask: no sampled location outside the ACS");
  }
}

}  // namespace spiritdiff
