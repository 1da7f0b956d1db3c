#pragma once

#include <cstdint>
#include <vector>

#include "gsn/types.hpp"

namespace gsn {

// Eigenpairs of a symmetric matrix: eigenvalues ascending, eigenvector
// columns orthonormal.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

// Checked matrix product. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// Symmetric eigendecomposition. The input is symmetrized as (M + M^T)/2
// before factorization; non-square input throws ShapeError.
SpectralDecomposition eig_symmetric(const Matrix& m);

// Elementwise sign(x) * max(|x| - t, 0), the proximal operator of t*|.|_1.
// t < 0 throws DomainError.
Vector soft_threshold(const Vector& x, double t);

// u.v / (|u||v|) in [-1, 1]. Either vector all-zero returns 0. Length
// mismatch throws ShapeError.
double cosine_similarity(const Vector& u, const Vector& v);

// Deterministic SplitMix64 generator. Identical seeds yield identical
// sequences on every platform; not shareable between concurrent tasks,
// use derive() to fan out independent streams.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased draw from [0,n) by rejection. n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; deterministic in (seed, stream).
  SeededRng derive(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace gsn
