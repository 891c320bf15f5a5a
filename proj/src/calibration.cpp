#include "spiritdiff/calibration.hpp"

#include <Eigen/QR>

namespace spiritdiff {

namespace {

// Rows are vectorized kernel-sized patches around every interior point of the
// block, columns ordered (coil, dy, dx). The column at a coil's center tap is
// both that coil's regression target and the tap forced to zero.
Eigen::MatrixXcd patch_matrix(const KSpaceGrid &acs, Index kh, Index kw)
{
  const Index nc = acs.ncoils(), ay = acs.ny(), ax = acs.nx();
  const Index iy = ay - kh + 1, ix = ax - kw + 1;
  Eigen::MatrixXcd a(iy * ix, nc * kh * kw);
  for (Index j = 0; j < nc; ++j) {
    for (Index dy = 0; dy < kh; ++dy) {
      for (Index dx = 0; dx < kw; ++dx) {
        const Index col = (j * kh + dy) * kw + dx;
        for (Index r = 0; r < iy; ++r) {
          for (Index c = 0; c < ix; ++c) {
            a(r * ix + c, col) = acs.coils[static_cast<size_t>(j)](r + dy, c + dx);
          }
        }
      }
    }
  }
  return a;
}

Index center_col(Index i, Index kh, Index kw)
{
  return (i * kh + kh / 2) * kw + kw / 2;
}

void check_block(const KSpaceGrid &acs, Index kh, Index kw)
{
  if (kh < 1 || kw < 1 || kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("calibrate: kernel extents must be odd and positive");
  }
  if (acs.ncoils() < 1) { throw ShapeError("calibrate: empty calibration block"); }
  if (acs.ny() < kh + 1 || acs.nx() < kw + 1) {
    throw ShapeError("calibrate: calibration block smaller than kernel support");
  }
  const Index rows = (acs.ny() - kh + 1) * (acs.nx() - kw + 1);
  const Index unknowns = acs.ncoils() * kh * kw - 1;
  if (rows < unknowns) {
    throw ShapeError("calibrate: calibration block yields fewer equations than unknowns");
  }
}

}  // namespace

SpiritKernel SpiritKernel::zeros(Index ncoils, Index kh, Index kw)
{
  SpiritKernel ker;
  ker.ncoils = ncoils;
  ker.kh = kh;
  ker.kw = kw;
  ker.weights.assign(static_cast<size_t>(ncoils * ncoils), CxArray::Zero(kh, kw));
  return ker;
}

KSpaceGrid extract_acs(const KSpaceGrid &k, const SamplingMask &m)
{
  check_mask_shape(k, m, "extract_acs");
  const auto &a = m.acs;
  if (a.rows() <= 0 || a.cols() <= 0 || a.row0 < 0 || a.col0 < 0 || a.row1 > k.ny() ||
      a.col1 > k.nx()) {
    throw ShapeError("extract_acs: ACS region empty or out of bounds");
  }
  KSpaceGrid out;
  out.coils.reserve(k.coils.size());
  for (const auto &coil : k.coils) {
    out.coils.push_back(coil.block(a.row0, a.col0, a.rows(), a.cols()));
  }
  return out;
}

SpiritKernel calibrate(const KSpaceGrid &acs, Index kh, Index kw, double tik)
{
  check_block(acs, kh, kw);
  check_finite(acs, "calibrate");
  if (tik < 0.0) { throw std::invalid_argument("calibrate: tik must be >= 0"); }

  const Index nc = acs.ncoils();
  const Eigen::MatrixXcd full = patch_matrix(acs, kh, kw);
  const Index rows = full.rows(), cols = full.cols() - 1;

  SpiritKernel ker = SpiritKernel::zeros(nc, kh, kw);
  for (Index i = 0; i < nc; ++i) {
    const Index drop = center_col(i, kh, kw);
    Eigen::MatrixXcd a(tik > 0.0 ? rows + cols : rows, cols);
    a.setZero();
    a.block(0, 0, rows, drop) = full.leftCols(drop);
    a.block(0, drop, rows, cols - drop) = full.rightCols(cols - drop);
    if (tik > 0.0) {
      a.block(rows, 0, cols, cols) = tik * Eigen::MatrixXcd::Identity(cols, cols);
    }
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(a.rows());
    b.head(rows) = full.col(drop);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    if (tik == 0.0 && qr.rank() < cols) {
      throw IllConditionedError("calibrate: rank-deficient system at tik = 0");
    }
    const Eigen::VectorXcd w = qr.solve(b);

    for (Index j = 0; j < nc; ++j) {
      for (Index dy = 0; dy < kh; ++dy) {
        for (Index dx = 0; dx < kw; ++dx) {
          Index col = (j * kh + dy) * kw + dx;
          if (col == drop) { continue; }
          ker.w(i, j)(dy, dx) = w(col < drop ? col : col - 1);
        }
      }
    }
  }
  return ker;
}

SpiritKernel calibrate_relative(const KSpaceGrid &acs, Index kh, Index kw, double lambda_rel)
{
  check_block(acs, kh, kw);
  const double anorm = patch_matrix(acs, kh, kw).norm();
  return calibrate(acs, kh, kw, lambda_rel * anorm);
}

double calibration_residual(const KSpaceGrid &acs, const SpiritKernel &ker)
{
  check_block(acs, ker.kh, ker.kw);
  if (ker.ncoils != acs.ncoils()) {
    throw ShapeError("calibration_residual: coil count mismatch");
  }
  const Eigen::MatrixXcd full = patch_matrix(acs, ker.kh, ker.kw);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < ker.ncoils; ++i) {
    Eigen::VectorXcd w(full.cols());
    for (Index j = 0; j < ker.ncoils; ++j) {
      for (Index dy = 0; dy < ker.kh; ++dy) {
        for (Index dx = 0; dx < ker.kw; ++dx) {
          w((j * ker.kh + dy) * ker.kw + dx) = ker.w(i, j)(dy, dx);
        }
      }
    }
    const Eigen::VectorXcd b = full.col(center_col(i, ker.kh, ker.kw));
    num += (full * w - b).squaredNorm();
    den += b.squaredNorm();
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

SpiritKernel kernel_adjoint(const SpiritKernel &ker)
{
  SpiritKernel adj = SpiritKernel::zeros(ker.ncoils, ker.kh, ker.kw);
  for (Index i = 0; i < ker.ncoils; ++i) {
    for (Index j = 0; j < ker.ncoils; ++j) {
      adj.w(j, i) = ker.w(i, j).conjugate().reverse();
    }
  }
  return adj;
}

}  // namespace spiritdiff
