#pragma once

#include <cstdint>
#include <vector>

#include "gsn/types.hpp"

namespace gsn {

// Column dictionary of unit-l2 atoms. Exactly-zero input atoms are replaced
// by the first basis vector and flagged.
struct Dictionary {
  Matrix atoms;  // n x K, every column unit norm
  bool zero_atom_replaced = false;

  int signal_dim() const { return static_cast<int>(atoms.rows()); }
  int atom_count() const { return static_cast<int>(atoms.cols()); }
};

// l1-sparse coefficients of one signal against a Dictionary, together with
// the lambda that produced them and the per-iteration trace of the
// internally minimized objective 0.5*|y - Dx|^2 + lambda*|x|_1.
struct SparseCode {
  Vector coefficients;
  double lambda = 0.0;
  std::vector<double> objective_trace;
  int iterations = 0;
};

struct DictionaryLearnResult {
  Dictionary dictionary;
  Matrix codes;  // K x N, column i codes signal i
  // Reported objective |Y-DX|_F^2 + lambda*sum|X| after init and each round.
  std::vector<double> round_objectives;
  // Internally minimized form 0.5*|Y-DX|_F^2 + lambda*sum|X|; this is the
  // sequence guaranteed non-increasing per round.
  std::vector<double> round_half_objectives;
  bool underdetermined = false;  // K > N with lambda == 0
};

Dictionary assemble_dictionary(const std::vector<Vector>& atoms);

// Reported objective |Y - D X|_F^2 + lambda * sum|X| (no 1/2 factor).
double dictionary_objective(const Dictionary& dict, const Matrix& codes, const Matrix& signals,
                            double lambda);

// ISTA proximal gradient for 0.5*|y - Dx|^2 + lambda*|x|_1 starting from
// x0 (zero when omitted). Step size 1/sigma_max(D^T D) estimated by 50
// power-iteration steps. Stops when the iterate moves less than tol in
// max-norm or after max_iters.
SparseCode sparse_code(const Dictionary& dict, const Vector& signal, double lambda,
                       int max_iters = 500, double tol = 1e-8);
SparseCode sparse_code_from(const Dictionary& dict, const Vector& signal, double lambda,
                            const Vector& x0, int max_iters = 500, double tol = 1e-8);

// Alternating minimization: ISTA coding sweep, then one projected gradient
// step on the reconstruction term (step 1/sigma_max(X X^T), backtracked so
// the step never increases it) with column renormalization. Initialized
// from random signal columns (without replacement while possible).
DictionaryLearnResult learn_dictionary(const Matrix& signals, int atom_count, double lambda,
                                       int rounds = 20, std::uint64_t seed = 0,
                                       int code_iters = 500, double code_tol = 1e-8);

// Codes each atom of one image against the dictionary and concatenates in
// the given (canonical) order; result length = atoms.size() * atom_count.
Vector encode_image(const Dictionary& dict, const std::vector<Vector>& image_atoms,
                    double lambda);

}  // namespace gsn
