#pragma once

#include <vector>

#include "gsn/clustering.hpp"
#include "gsn/imagegraph.hpp"
#include "gsn/numerics.hpp"
#include "gsn/types.hpp"

namespace gsn {

enum class Activation { kRelu, kIdentity };
enum class PropagationMode { kSpectral, kRenormalized };
enum class Readout { kMean, kSum, kMax };
enum class Aggregation { kSum, kMean, kMax };

// One graph convolution: H' = act(P H W + 1 b^T) where P is the propagation
// operator selected by mode.
struct GcnLayer {
  Matrix weight;  // F_in x F_out
  Vector bias;    // F_out
  Activation activation = Activation::kRelu;
  PropagationMode mode = PropagationMode::kRenormalized;
};

// Stack of GcnLayers plus a permutation-invariant readout producing one
// atom embedding per subgraph.
struct AtomEncoder {
  std::vector<GcnLayer> layers;
  Readout readout = Readout::kMean;

  int input_dim() const { return static_cast<int>(layers.front().weight.rows()); }
  int atom_dim() const { return static_cast<int>(layers.back().weight.cols()); }
};

// Gradients aligned with AtomEncoder parameters.
struct EncoderGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  void add(const EncoderGradients& other);
  void scale(double s);
};

// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases. widths is
// [F_in, hidden..., d_atom]; activation is relu between layers, identity on
// the last.
AtomEncoder make_atom_encoder(const std::vector<int>& widths, PropagationMode mode,
                              Readout readout, SeededRng& rng);

EncoderGradients zero_gradients(const AtomEncoder& enc);

// The operator a layer multiplies by: spectral mode reconstructs
// U diag(lambda) U^T from the stored Laplacian spectrum (StateError when the
// operators were built without it), renormalized mode returns the
// precomputed normalized adjacency.
Matrix propagation_matrix(const GraphOperators& ops, PropagationMode mode);

// Single layer forward. H rows must match the operator size and H cols the
// layer's input width.
Matrix gcn_forward(const GcnLayer& layer, const GraphOperators& ops, const Matrix& H);

// Generic neighborhood update: m_v aggregates A_{uv} * H_u over neighbors
// (zero vector for isolated nodes) and each node maps through
// act(concat(H_v, m_v) W + b). weight is (2 F_in) x F_out.
Matrix message_passing_step(const GraphOperators& ops, const Matrix& H, Aggregation aggregate,
                            const Matrix& weight, const Vector& bias, Activation activation);

// Forward pass record for one subgraph, consumed by atom_backward.
struct AtomTrace {
  Matrix propagation;
  std::vector<Matrix> inputs;           // H_{l-1} per layer
  std::vector<Matrix> pre_activations;  // Z_l per layer
  Matrix output;                        // H_L
  Vector atom;
  std::vector<int> max_rows;            // argmax row per column (max readout)
  bool recorded = false;
};

Vector encode_atom(const AtomEncoder& enc, const Subgraph& sg);
AtomTrace encode_atom_traced(const AtomEncoder& enc, const Subgraph& sg);

// Accumulates d(loss)/d(params) into grads given d(loss)/d(atom). Throws
// StateError when the trace was not produced by a forward pass.
void atom_backward(const AtomEncoder& enc, const AtomTrace& trace, const Vector& atom_grad,
                   EncoderGradients& grads);

}  // namespace gsn
