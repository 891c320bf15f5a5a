#include "spiritdiff/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace spiritdiff {

namespace {

void store_u64_le(uint64_t v, unsigned char *p)
{
  for (int i = 0; i < 8; ++i) {
    p[i] = static_cast<unsigned char>(v & 0xff);
    v >>= 8;
  }
}

uint64_t load_u64_le(const unsigned char *p)
{
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

uint64_t checked_product(const std::vector<Index> &shape, const std::string &path)
{
  if (shape.empty()) throw ContainerShapeError(path + ": empty shape");
  uint64_t n = 1;
  for (Index d : shape) {
    if (d <= 0) throw ContainerShapeError(path + ": nonpositive shape entry");
    const auto u = static_cast<uint64_t>(d);
    if (n > UINT64_MAX / 16 / u) throw ContainerShapeError(path + ": shape overflow");
    n *= u;
  }
  return n;
}

long long parse_ll(const std::string &s, const std::string &path, const char *what)
{
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception &) {
    throw ContainerShapeError(path + ": unreadable " + what + " '" + s + "'");
  }
  if (used != s.size()) throw ContainerShapeError(path + ": unreadable " + what + " '" + s + "'");
  return v;
}

double parse_double(const std::string &s, const std::string &path, const char *what)
{
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw ContainerShapeError(path + ": unreadable " + what + " '" + s + "'");
  }
  if (used != s.size()) throw ContainerShapeError(path + ": unreadable " + what + " '" + s + "'");
  return v;
}

std::string format_double(double v)
{
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

bool has_space(const std::string &s)
{
  return s.find_first_of(" \t\n\r") != std::string::npos;
}

}  // namespace

const std::string *ContainerData::find_meta(const std::string &key) const
{
  for (const auto &[k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

ContainerData read_container(const std::string &path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open container: " + path);

  std::string line;
  if (!std::getline(f, line)) throw ContainerTruncatedError(path + ": empty file");
  {
    std::istringstream ss(line);
    std::string magic, ver, extra;
    ss >> magic >> ver;
    if (magic != "spiritdiff-container" || (ss >> extra))
      throw ContainerVersionError(path + ": not a spiritdiff container");
    if (ver != "1")
      throw ContainerVersionError(path + ": unsupported container version '" + ver + "'");
  }

  ContainerData c;
  bool have_role = false, have_dtype = false, have_shape = false;
  long long payload_count = -1;
  while (std::getline(f, line)) {
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? std::string() : line.substr(sp + 1);
    if (key == "role") {
      c.role = rest;
      have_role = true;
    } else if (key == "dtype") {
      if (rest != "complex128")
        throw ContainerVersionError(path + ": unsupported dtype '" + rest + "'");
      have_dtype = true;
    } else if (key == "shape") {
      std::istringstream ss(rest);
      std::string tok;
      c.shape.clear();
      while (ss >> tok) c.shape.push_back(static_cast<Index>(parse_ll(tok, path, "shape entry")));
      have_shape = true;
    } else if (key == "meta") {
      const auto msp = rest.find(' ');
      const std::string mk = rest.substr(0, msp);
      const std::string mv = msp == std::string::npos ? std::string() : rest.substr(msp + 1);
      if (mk.empty()) throw ContainerShapeError(path + ": meta line without a key");
      c.meta.emplace_back(mk, mv);
    } else if (key == "payload") {
      payload_count = parse_ll(rest, path, "payload count");
      break;
    } else {
      throw ContainerVersionError(path + ": unknown header field '" + key + "'");
    }
  }
  if (payload_count < 0) throw ContainerTruncatedError(path + ": header ended before payload");
  if (!have_role || c.role.empty()) throw ContainerShapeError(path + ": header missing role");
  if (!have_dtype) throw ContainerShapeError(path + ": header missing dtype");
  if (!have_shape) throw ContainerShapeError(path + ": header missing shape");
  const uint64_t n = checked_product(c.shape, path);
  if (static_cast<uint64_t>(payload_count) != n)
    throw ContainerShapeError(path + ": payload count " + std::to_string(payload_count) +
                              " disagrees with shape product " + std::to_string(n));

  std::vector<unsigned char> buf(n * 16);
  f.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<uint64_t>(f.gcount()) != buf.size())
    throw ContainerTruncatedError(path + ": payload ends early (" + std::to_string(f.gcount()) +
                                  " of " + std::to_string(buf.size()) + " bytes)");
  if (f.get() != std::ifstream::traits_type::eof())
    throw ContainerShapeError(path + ": trailing bytes after payload");

  c.payload.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    const double re = std::bit_cast<double>(load_u64_le(buf.data() + 16 * i));
    const double im = std::bit_cast<double>(load_u64_le(buf.data() + 16 * i + 8));
    c.payload[i] = Cx(re, im);
  }
  return c;
}

void write_container(const std::string &path, const ContainerData &c)
{
  if (c.version != 1) throw std::invalid_argument("write_container: only version 1 is writable");
  if (c.role.empty() || has_space(c.role))
    throw std::invalid_argument("write_container: role must be one whitespace-free token");
  const uint64_t n = checked_product(c.shape, path);
  if (c.payload.size() != n)
    throw std::invalid_argument("write_container: payload size disagrees with shape");
  for (const auto &[k, v] : c.meta) {
    if (k.empty() || has_space(k))
      throw std::invalid_argument("write_container: meta key must be one whitespace-free token");
    if (v.find_first_of("\n\r") != std::string::npos)
      throw std::invalid_argument("write_container: meta value must be one line");
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write container: " + path);
  f << "spiritdiff-container 1\n";
  f << "role " << c.role << "\n";
  f << "dtype complex128\n";
  f << "shape";
  for (Index d : c.shape) f << ' ' << d;
  f << "\n";
  for (const auto &[k, v] : c.meta) {
    f << "meta " << k;
    if (!v.empty()) f << ' ' << v;
    f << "\n";
  }
  f << "payload " << n << "\n";

  std::vector<unsigned char> buf(n * 16);
  for (uint64_t i = 0; i < n; ++i) {
    store_u64_le(std::bit_cast<uint64_t>(c.payload[i].real()), buf.data() + 16 * i);
    store_u64_le(std::bit_cast<uint64_t>(c.payload[i].imag()), buf.data() + 16 * i + 8);
  }
  f.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

namespace {

template <typename Tag>
ContainerData stack_to_container(const CoilStack<Tag> &x, std::string role)
{
  ContainerData c;
  c.role = std::move(role);
  c.shape = {x.ncoils(), x.ny(), x.nx()};
  c.payload.reserve(static_cast<size_t>(x.ncoils()) * x.ny() * x.nx());
  for (const auto &coil : x.coils)
    for (Index r = 0; r < coil.rows(); ++r)
      for (Index q = 0; q < coil.cols(); ++q) c.payload.push_back(coil(r, q));
  return c;
}

template <typename Tag>
CoilStack<Tag> stack_from_container(const ContainerData &c)
{
  if (c.shape.size() != 3)
    throw ContainerShapeError("container role '" + c.role + "' is not a coil stack");
  auto out = CoilStack<Tag>::zeros(c.shape[0], c.shape[1], c.shape[2]);
  size_t i = 0;
  for (auto &coil : out.coils)
    for (Index r = 0; r < coil.rows(); ++r)
      for (Index q = 0; q < coil.cols(); ++q) coil(r, q) = c.payload[i++];
  return out;
}

}  // namespace

ContainerData to_container(const CoilImage &x, std::string role)
{
  return stack_to_container(x, std::move(role));
}

ContainerData to_container(const KSpaceGrid &k, std::string role)
{
  return stack_to_container(k, std::move(role));
}

ContainerData to_container(const CxArray &img, std::string role)
{
  ContainerData c;
  c.role = std::move(role);
  c.shape = {img.rows(), img.cols()};
  c.payload.reserve(static_cast<size_t>(img.size()));
  for (Index r = 0; r < img.rows(); ++r)
    for (Index q = 0; q < img.cols(); ++q) c.payload.push_back(img(r, q));
  return c;
}

CoilImage coil_image_from(const ContainerData &c) { return stack_from_container<ImageDomainTag>(c); }

KSpaceGrid kspace_from(const ContainerData &c) { return stack_from_container<KSpaceDomainTag>(c); }

CxArray cxarray_from(const ContainerData &c)
{
  if (c.shape.size() != 2)
    throw ContainerShapeError("container role '" + c.role + "' is not a single plane");
  CxArray out = CxArray::Zero(c.shape[0], c.shape[1]);
  size_t i = 0;
  for (Index r = 0; r < out.rows(); ++r)
    for (Index q = 0; q < out.cols(); ++q) out(r, q) = c.payload[i++];
  return out;
}

ContainerData to_container(const SamplingMask &m)
{
  ContainerData c;
  c.role = "mask";
  c.shape = {m.keep.rows(), m.keep.cols()};
  std::ostringstream acs;
  acs << m.acs.row0 << ' ' << m.acs.row1 << ' ' << m.acs.col0 << ' ' << m.acs.col1;
  c.meta.emplace_back("acs", acs.str());
  c.payload.reserve(static_cast<size_t>(m.keep.size()));
  for (Index r = 0; r < m.keep.rows(); ++r)
    for (Index q = 0; q < m.keep.cols(); ++q) c.payload.push_back(Cx(m.keep(r, q), 0.0));
  return c;
}

SamplingMask mask_from(const ContainerData &c)
{
  if (c.role != "mask")
    throw ContainerShapeError("container role '" + c.role + "' where 'mask' expected");
  if (c.shape.size() != 2) throw ContainerShapeError("mask container must be two-dimensional");
  SamplingMask m;
  m.keep = RealArray::Zero(c.shape[0], c.shape[1]);
  size_t i = 0;
  for (Index r = 0; r < m.keep.rows(); ++r)
    for (Index q = 0; q < m.keep.cols(); ++q) m.keep(r, q) = c.payload[i++].real() != 0.0 ? 1.0 : 0.0;
  const std::string *acs = c.find_meta("acs");
  if (!acs) throw ContainerShapeError("mask container lacks the acs meta entry");
  std::istringstream ss(*acs);
  if (!(ss >> m.acs.row0 >> m.acs.row1 >> m.acs.col0 >> m.acs.col1))
    throw ContainerShapeError("mask container has an unreadable acs meta entry");
  try {
    validate_mask(m);
  } catch (const std::exception &e) {
    throw ContainerShapeError(std::string("mask container fails validation: ") + e.what());
  }
  return m;
}

ContainerData to_container(const SpiritKernel &k)
{
  ContainerData c;
  c.role = "spirit_kernel";
  c.shape = {k.ncoils, k.ncoils, k.kh, k.kw};
  c.payload.reserve(static_cast<size_t>(k.ncoils) * k.ncoils * k.kh * k.kw);
  for (Index i = 0; i < k.ncoils; ++i)
    for (Index j = 0; j < k.ncoils; ++j) {
      const CxArray &w = k.w(i, j);
      for (Index dy = 0; dy < k.kh; ++dy)
        for (Index dx = 0; dx < k.kw; ++dx) c.payload.push_back(w(dy, dx));
    }
  return c;
}

SpiritKernel kernel_from(const ContainerData &c)
{
  if (c.role != "spirit_kernel")
    throw ContainerShapeError("container role '" + c.role + "' where 'spirit_kernel' expected");
  if (c.shape.size() != 4 || c.shape[0] != c.shape[1])
    throw ContainerShapeError("kernel container must have shape (ncoils, ncoils, kh, kw)");
  SpiritKernel k = SpiritKernel::zeros(c.shape[0], c.shape[2], c.shape[3]);
  size_t idx = 0;
  for (Index i = 0; i < k.ncoils; ++i)
    for (Index j = 0; j < k.ncoils; ++j) {
      CxArray &w = k.w(i, j);
      for (Index dy = 0; dy < k.kh; ++dy)
        for (Index dx = 0; dx < k.kw; ++dx) w(dy, dx) = c.payload[idx++];
    }
  return k;
}

ContainerData to_container(const SensitivityMaps &s)
{
  ContainerData c;
  c.role = "maps";
  c.shape = {s.ncoils(), s.ny(), s.nx()};
  c.payload.reserve(static_cast<size_t>(s.ncoils()) * s.ny() * s.nx());
  for (const auto &coil : s.maps)
    for (Index r = 0; r < coil.rows(); ++r)
      for (Index q = 0; q < coil.cols(); ++q) c.payload.push_back(coil(r, q));
  return c;
}

SensitivityMaps maps_from(const ContainerData &c)
{
  if (c.role != "maps")
    throw ContainerShapeError("container role '" + c.role + "' where 'maps' expected");
  if (c.shape.size() != 3) throw ContainerShapeError("maps container must be three-dimensional");
  SensitivityMaps s;
  s.maps.assign(static_cast<size_t>(c.shape[0]), CxArray::Zero(c.shape[1], c.shape[2]));
  size_t i = 0;
  for (auto &coil : s.maps)
    for (Index r = 0; r < coil.rows(); ++r)
      for (Index q = 0; q < coil.cols(); ++q) coil(r, q) = c.payload[i++];
  s.norm = RealArray::Zero(c.shape[1], c.shape[2]);
  for (const auto &coil : s.maps) s.norm += coil.abs2();
  s.norm = s.norm.sqrt();
  return s;
}

ContainerData to_container(const LinearScoreModel &m)
{
  if (m.a.size() != m.b.size() || m.a.empty())
    throw std::invalid_argument("score model container needs equal nonempty tables");
  ContainerData c;
  c.role = "score_model";
  c.shape = {2, static_cast<Index>(m.a.size())};
  c.meta.emplace_back("t_min", format_double(m.t_min));
  c.meta.emplace_back("T", format_double(m.T));
  for (double v : m.a) c.payload.push_back(Cx(v, 0.0));
  for (double v : m.b) c.payload.push_back(Cx(v, 0.0));
  return c;
}

ContainerData mean_to_container(const LinearScoreModel &m)
{
  return to_container(m.mean_est, "score_mean");
}

LinearScoreModel score_model_from(const ContainerData &tables, const ContainerData &mean)
{
  if (tables.role != "score_model")
    throw ContainerShapeError("container role '" + tables.role + "' where 'score_model' expected");
  if (tables.shape.size() != 2 || tables.shape[0] != 2)
    throw ContainerShapeError("score model container must have shape (2, n_bins)");
  LinearScoreModel m;
  const auto nb = static_cast<size_t>(tables.shape[1]);
  m.a.resize(nb);
  m.b.resize(nb);
  for (size_t k = 0; k < nb; ++k) m.a[k] = tables.payload[k].real();
  for (size_t k = 0; k < nb; ++k) m.b[k] = tables.payload[nb + k].real();
  const std::string *tmin = tables.find_meta("t_min");
  const std::string *tcap = tables.find_meta("T");
  if (!tmin || !tcap)
    throw ContainerShapeError("score model container lacks t_min/T meta entries");
  m.t_min = parse_double(*tmin, tables.role, "t_min");
  m.T = parse_double(*tcap, tables.role, "T");
  m.mean_est = coil_image_from(mean);
  return m;
}

uint64_t fnv1a64(const void *data, size_t n)
{
  const auto *p = static_cast<const unsigned char *>(data);
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t fnv1a64_file(const std::string &path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInputError("cannot open for checksum: " + path);
  uint64_t h = 14695981039346656037ULL;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof buf);
    const auto got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(uint64_t v)
{
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void write_pgm(const std::string &path, const RealArray &img)
{
  if (img.size() == 0) throw std::invalid_argument("write_pgm: empty image");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write image: " + path);
  f << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(img.cols()));
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index q = 0; q < img.cols(); ++q) {
      double v = img(r, q);
      if (!std::isfinite(v)) v = 0.0;
      v = std::clamp(v, 0.0, 1.0);
      row[static_cast<size_t>(q)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    f.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace spiritdiff
