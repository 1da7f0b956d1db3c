#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gsn/types.hpp"

namespace gsn {

// GSNT v1 tensor container:
//   bytes 0-3   magic "GSNT"
//   u32 LE      version (= 1)
//   u32 LE      ndim
//   ndim u64 LE dimensions
//   payload     product(dims) f32 LE, row-major
// No padding, no trailing bytes.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t element_count() const;
};

// Stream forms read/write exactly one tensor record at the current position.
void tensor_write(std::ostream& out, const std::vector<std::uint64_t>& dims,
                  const std::vector<float>& data);
Tensor tensor_read(std::istream& in);

// File forms additionally reject trailing bytes on read.
void tensor_write_file(const std::string& path, const std::vector<std::uint64_t>& dims,
                       const std::vector<float>& data);
Tensor tensor_read_file(const std::string& path);

// Matrix bridging: f64 in memory, f32 on disk, row-major payload.
Tensor tensor_from_matrix(const Matrix& m);
Matrix matrix_from_tensor(const Tensor& t);

// Serialized size in bytes of a tensor record with these dims.
std::uint64_t tensor_byte_size(const std::vector<std::uint64_t>& dims);

}  // namespace gsn
