#include "gsn/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gsn/errors.hpp"
#include "gsn/numerics.hpp"

namespace gsn {
namespace {

// Largest eigenvalue of a symmetric PSD matrix by power iteration. The
// start vector is deterministically perturbed so it cannot sit exactly
// orthogonal to the leading eigenspace for the structured gram matrices we
// see here.
double power_iteration_lmax(const Matrix& gram, int steps = 50) {
  const Index n = gram.rows();
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = 1.0 + static_cast<double>(i) / (2.0 * n + 1.0);
  v.normalize();
  for (int s = 0; s < steps; ++s) {
    Vector w = gram * v;
    double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return v.dot(gram * v);
}

void renormalize_columns(Matrix& d, bool& zero_flag) {
  for (Index k = 0; k < d.cols(); ++k) {
    double n = d.col(k).norm();
    if (n == 0.0) {
      d.col(k).setZero();
      d(0, k) = 1.0;
      zero_flag = true;
    } else {
      d.col(k) /= n;
    }
  }
}

}  // namespace

Dictionary assemble_dictionary(const std::vector<Vector>& atoms) {
  if (atoms.empty()) throw ConfigError("assemble_dictionary: no atoms given");
  const Index n = atoms.front().size();
  for (const auto& a : atoms)
    if (a.size() != n)
      throw ShapeError("assemble_dictionary: atom length " + std::to_string(a.size()) +
                       " != " + std::to_string(n));
  Dictionary dict;
  dict.atoms = Matrix(n, static_cast<Index>(atoms.size()));
  for (std::size_t k = 0; k < atoms.size(); ++k) dict.atoms.col(static_cast<Index>(k)) = atoms[k];
  renormalize_columns(dict.atoms, dict.zero_atom_replaced);
  return dict;
}

double dictionary_objective(const Dictionary& dict, const Matrix& codes, const Matrix& signals,
                            double lambda) {
  if (codes.rows() != dict.atoms.cols() || codes.cols() != signals.cols() ||
      signals.rows() != dict.atoms.rows())
    throw ShapeError("dictionary_objective: D " + shape_str(dict.atoms) + ", X " +
                     shape_str(codes) + ", Y " + shape_str(signals) + " do not conform");
  double rec = (signals - dict.atoms * codes).squaredNorm();
  return rec + lambda * codes.array().abs().sum();
}

SparseCode sparse_code_from(const Dictionary& dict, const Vector& signal, double lambda,
                            const Vector& x0, int max_iters, double tol) {
  if (lambda < 0.0) throw DomainError("sparse_code: lambda must be nonnegative");
  if (signal.size() != dict.atoms.rows())
    throw ShapeError("sparse_code: signal length " + std::to_string(signal.size()) +
                     " != atom length " + std::to_string(dict.atoms.rows()));
  if (x0.size() != dict.atoms.cols())
    throw ShapeError("sparse_code: start length " + std::to_string(x0.size()) +
                     " != atom count " + std::to_string(dict.atoms.cols()));

  const Matrix gram = dict.atoms.transpose() * dict.atoms;
  double lmax = power_iteration_lmax(gram);
  double step = lmax > 0.0 ? 1.0 / lmax : 1.0;

  SparseCode code;
  code.lambda = lambda;
  Vector x = x0;
  const Vector dty = dict.atoms.transpose() * signal;
  auto half_objective = [&](const Vector& z) {
    return 0.5 * (signal - dict.atoms * z).squaredNorm() + lambda * z.array().abs().sum();
  };
  code.objective_trace.push_back(half_objective(x));

  for (int it = 0; it < max_iters; ++it) {
    Vector grad_step = x + step * (dty - gram * x);
    Vector next = soft_threshold(grad_step, step * lambda);
    double delta = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    code.objective_trace.push_back(half_objective(x));
    code.iterations = it + 1;
    if (delta < tol) break;
  }
  code.coefficients = std::move(x);
  return code;
}

SparseCode sparse_code(const Dictionary& dict, const Vector& signal, double lambda, int max_iters,
                       double tol) {
  return sparse_code_from(dict, signal, lambda, Vector::Zero(dict.atoms.cols()), max_iters, tol);
}

DictionaryLearnResult learn_dictionary(const Matrix& signals, int atom_count, double lambda,
                                       int rounds, std::uint64_t seed, int code_iters,
                                       double code_tol) {
  const Index n_signals = signals.cols();
  if (atom_count < 1) throw ConfigError("learn_dictionary: atom_count must be >= 1");
  if (n_signals < 1) throw ConfigError("learn_dictionary: need at least one signal");
  if (lambda < 0.0) throw DomainError("learn_dictionary: lambda must be nonnegative");

  DictionaryLearnResult result;
  result.underdetermined = atom_count > n_signals && lambda == 0.0;

  // Initialize from random signal columns, distinct while there are enough.
  SeededRng rng(seed);
  std::vector<Index> pool(static_cast<std::size_t>(n_signals));
  std::iota(pool.begin(), pool.end(), Index{0});
  rng.shuffle(pool);
  Matrix d(signals.rows(), atom_count);
  for (int k = 0; k < atom_count; ++k) {
    Index src = k < static_cast<int>(pool.size())
                    ? pool[static_cast<std::size_t>(k)]
                    : static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n_signals)));
    d.col(k) = signals.col(src);
  }
  result.dictionary.atoms = std::move(d);
  renormalize_columns(result.dictionary.atoms, result.dictionary.zero_atom_replaced);

  auto code_all = [&](const Matrix& warm, bool use_warm) {
    Matrix x(atom_count, n_signals);
    for (Index i = 0; i < n_signals; ++i) {
      Vector x0 = use_warm ? Vector(warm.col(i)) : Vector(Vector::Zero(atom_count));
      x.col(i) = sparse_code_from(result.dictionary, signals.col(i), lambda, x0, code_iters,
                                  code_tol)
                     .coefficients;
    }
    return x;
  };

  auto record_objectives = [&]() {
    double rec = (signals - result.dictionary.atoms * result.codes).squaredNorm();
    double l1 = result.codes.array().abs().sum();
    result.round_objectives.push_back(rec + lambda * l1);
    result.round_half_objectives.push_back(0.5 * rec + lambda * l1);
  };

  result.codes = code_all(Matrix(), false);
  record_objectives();

  for (int round = 0; round < rounds; ++round) {
    // Projected gradient on 0.5*|Y - DX|_F^2: step 1/sigma_max(X X^T),
    // halved until the unnormalized reconstruction does not get worse, then
    // columns renormalized.
    Matrix residual = signals - result.dictionary.atoms * result.codes;
    double rec_before = residual.squaredNorm();
    Matrix grad = -residual * result.codes.transpose();
    double lmax = power_iteration_lmax(result.codes * result.codes.transpose());
    if (lmax > 0.0 && grad.squaredNorm() > 0.0) {
      double step = 1.0 / lmax;
      Matrix base = result.dictionary.atoms;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Matrix trial = base - step * grad;
        bool zero_flag = result.dictionary.zero_atom_replaced;
        renormalize_columns(trial, zero_flag);
        double rec_after = (signals - trial * result.codes).squaredNorm();
        if (rec_after <= rec_before) {
          result.dictionary.atoms = std::move(trial);
          result.dictionary.zero_atom_replaced = zero_flag;
          break;
        }
        step *= 0.5;
      }
    }
    result.codes = code_all(result.codes, true);
    record_objectives();
  }
  return result;
}

Vector encode_image(const Dictionary& dict, const std::vector<Vector>& image_atoms,
                    double lambda) {
  const Index k = dict.atoms.cols();
  Vector out(static_cast<Index>(image_atoms.size()) * k);
  for (std::size_t i = 0; i < image_atoms.size(); ++i) {
    if (image_atoms[i].size() != dict.atoms.rows())
      throw ShapeError("encode_image: atom length " + std::to_string(image_atoms[i].size()) +
                       " != dictionary signal dim " + std::to_string(dict.atoms.rows()));
    out.segment(static_cast<Index>(i) * k, k) =
        sparse_code(dict, image_atoms[i], lambda).coefficients;
  }
  return out;
}

}  // namespace gsn
