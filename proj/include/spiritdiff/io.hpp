#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spiritdiff/scores.hpp"

namespace spiritdiff {

// Malformed container contents (any subclass below).
struct ContainerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// wrong magic, unsupported version, unknown header field or dtype
struct ContainerVersionError : ContainerError {
  using ContainerError::ContainerError;
};
// missing or inconsistent header fields, payload length disagreement,
// role mismatch against the requested typed view
struct ContainerShapeError : ContainerError {
  using ContainerError::ContainerError;
};
// file ends before the declared payload does
struct ContainerTruncatedError : ContainerError {
  using ContainerError::ContainerError;
};

// A required input file that cannot be opened at all.
struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk unit: a short text header (version, role, dtype, shape, meta
// key/value echo lines) followed by little-endian complex-double payload,
// written coil by coil, rows by columns.
struct ContainerData {
  int version = 1;
  std::string role;
  std::vector<Index> shape;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<Cx> payload;

  const std::string *find_meta(const std::string &key) const;
};

ContainerData read_container(const std::string &path);
void write_container(const std::string &path, const ContainerData &c);

// Typed views. Readers check rank (and role where the tag is load-bearing)
// and throw ContainerShapeError on disagreement.
ContainerData to_container(const CoilImage &x, std::string role);
ContainerData to_container(const KSpaceGrid &k, std::string role);
ContainerData to_container(const CxArray &img, std::string role);
CoilImage coil_image_from(const ContainerData &c);
KSpaceGrid kspace_from(const ContainerData &c);
CxArray cxarray_from(const ContainerData &c);

ContainerData to_container(const SamplingMask &m);
SamplingMask mask_from(const ContainerData &c);

ContainerData to_container(const SpiritKernel &k);
SpiritKernel kernel_from(const ContainerData &c);

ContainerData to_container(const SensitivityMaps &s);
SensitivityMaps maps_from(const ContainerData &c);

// Coefficient tables and the mean image travel as two containers.
ContainerData to_container(const LinearScoreModel &m);
ContainerData mean_to_container(const LinearScoreModel &m);
LinearScoreModel score_model_from(const ContainerData &tables, const ContainerData &mean);

// FNV-1a, the checksum quoted in manifests.
uint64_t fnv1a64(const void *data, size_t n);
uint64_t fnv1a64_file(const std::string &path);
std::string hex64(uint64_t v);

// 8-bit binary portable graymap; values clamped to [0, 1].
void write_pgm(const std::string &path, const RealArray &img);

}  // namespace spiritdiff
