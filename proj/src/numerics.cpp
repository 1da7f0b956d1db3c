#include "gsn/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gsn/errors.hpp"

namespace gsn {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " * " + shape_str(b));
  }
  return a * b;
}

SpectralDecomposition eig_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw ShapeError("eig_symmetric: matrix must be square, got " + shape_str(m));
  }
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw DomainError("eig_symmetric: eigensolver failed to converge");
  }
  // SelfAdjointEigenSolver already returns eigenvalues in increasing order.
  return SpectralDecomposition{solver.eigenvalues(), solver.eigenvectors()};
}

Vector soft_threshold(const Vector& x, double t) {
  if (t < 0.0) {
    throw DomainError("soft_threshold: threshold must be nonnegative, got " + std::to_string(t));
  }
  return x.array().sign() * (x.array().abs() - t).max(0.0);
}

double cosine_similarity(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw ShapeError("cosine_similarity: length mismatch " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  }
  double nu = u.norm();
  double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double c = u.dot(v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw DomainError("uniform_index: n must be positive");
  std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r < threshold);
  return r % n;
}

SeededRng SeededRng::derive(std::uint64_t stream) const {
  // SplitMix64 finalizer over (seed, stream) decorrelates child streams.
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return SeededRng(z ^ (z >> 31));
}

}  // namespace gsn
