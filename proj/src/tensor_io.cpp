#include "gsn/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "gsn/errors.hpp"

namespace gsn {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'N', 'T'};
constexpr std::uint32_t kVersion = 1;
// Caps the decoded payload at 2^31 elements so dims cannot drive allocation
// past addressable sizes.
constexpr std::uint64_t kMaxElements = 1ull << 31;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

[[noreturn]] void fail(std::uint64_t offset, const std::string& what) {
  throw FormatError("GSNT: " + what + " at byte offset " + std::to_string(offset));
}

void read_exact(std::istream& in, char* buf, std::size_t n, std::uint64_t offset) {
  in.read(buf, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail(offset, "truncated file");
}

std::uint32_t get_u32(std::istream& in, std::uint64_t offset) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, offset);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in, std::uint64_t offset) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8, offset);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (std::uint64_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

void tensor_write(std::ostream& out, const std::vector<std::uint64_t>& dims,
                  const std::vector<float>& data) {
  std::uint64_t n = dims.empty() ? 0 : 1;
  for (std::uint64_t d : dims) {
    if (d != 0 && n > kMaxElements / std::max<std::uint64_t>(d, 1))
      throw FormatError("GSNT: dimension product overflow on write");
    n *= d;
  }
  if (n != data.size()) {
    throw ShapeError("GSNT: data length " + std::to_string(data.size()) +
                     " does not match dimension product " + std::to_string(n));
  }
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (std::uint64_t d : dims) put_u64(out, d);
  for (float v : data) put_f32(out, v);
  if (!out) throw IoError("GSNT: write failed");
}

Tensor tensor_read(std::istream& in) {
  std::uint64_t offset = 0;
  char magic[4];
  read_exact(in, magic, 4, offset);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(0, "bad magic");
  offset = 4;

  std::uint32_t version = get_u32(in, offset);
  if (version != kVersion) fail(offset, "unsupported version " + std::to_string(version));
  offset += 4;

  std::uint32_t ndim = get_u32(in, offset);
  if (ndim > 64) fail(offset, "ndim " + std::to_string(ndim) + " exceeds limit 64");
  offset += 4;

  Tensor t;
  t.dims.resize(ndim);
  std::uint64_t n = ndim == 0 ? 0 : 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.dims[i] = get_u64(in, offset);
    if (t.dims[i] != 0 && n > kMaxElements / std::max<std::uint64_t>(t.dims[i], 1))
      fail(offset, "dimension product overflow");
    n *= t.dims[i];
    offset += 8;
  }

  t.data.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint32_t bits = get_u32(in, offset);
    float v;
    std::memcpy(&v, &bits, 4);
    t.data[i] = v;
    offset += 4;
  }
  return t;
}

void tensor_write_file(const std::string& path, const std::vector<std::uint64_t>& dims,
                       const std::vector<float>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  tensor_write(out, dims, data);
}

Tensor tensor_read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  Tensor t = tensor_read(in);
  std::uint64_t end = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::end);
  if (static_cast<std::uint64_t>(in.tellg()) != end)
    fail(end, "trailing bytes after payload");
  return t;
}

Tensor tensor_from_matrix(const Matrix& m) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) t.data.push_back(static_cast<float>(m(i, j)));
  return t;
}

Matrix matrix_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) {
    throw ShapeError("matrix_from_tensor: expected 2 dims, got " + std::to_string(t.dims.size()));
  }
  Matrix m(static_cast<Index>(t.dims[0]), static_cast<Index>(t.dims[1]));
  std::size_t k = 0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = static_cast<double>(t.data[k++]);
  return m;
}

std::uint64_t tensor_byte_size(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = dims.empty() ? 0 : 1;
  for (std::uint64_t d : dims) n *= d;
  return 4 + 4 + 4 + 8 * dims.size() + 4 * n;
}

}  // namespace gsn
