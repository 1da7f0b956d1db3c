#include "gsn/gcn.hpp"

#include <cmath>

#include "gsn/errors.hpp"

namespace gsn {
namespace {

Matrix apply_activation(Matrix z, Activation act) {
  if (act == Activation::kRelu) z = z.array().max(0.0).matrix();
  return z;
}

Matrix activation_mask(const Matrix& z, Activation act) {
  if (act == Activation::kIdentity) return Matrix::Ones(z.rows(), z.cols());
  return (z.array() > 0.0).cast<double>().matrix();
}

}  // namespace

void EncoderGradients::add(const EncoderGradients& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
}

void EncoderGradients::scale(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
}

AtomEncoder make_atom_encoder(const std::vector<int>& widths, PropagationMode mode,
                              Readout readout, SeededRng& rng) {
  if (widths.size() < 2) throw ConfigError("atom encoder needs at least [F_in, d_atom] widths");
  AtomEncoder enc;
  enc.readout = readout;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    int fin = widths[l], fout = widths[l + 1];
    if (fin < 1 || fout < 1) throw ConfigError("atom encoder widths must be positive");
    GcnLayer layer;
    layer.mode = mode;
    layer.activation = (l + 2 == widths.size()) ? Activation::kIdentity : Activation::kRelu;
    double a = std::sqrt(6.0 / (fin + fout));
    layer.weight = Matrix(fin, fout);
    for (int i = 0; i < fin; ++i)
      for (int j = 0; j < fout; ++j) layer.weight(i, j) = rng.uniform(-a, a);
    layer.bias = Vector::Zero(fout);
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

EncoderGradients zero_gradients(const AtomEncoder& enc) {
  EncoderGradients g;
  for (const auto& layer : enc.layers) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Matrix propagation_matrix(const GraphOperators& ops, PropagationMode mode) {
  if (mode == PropagationMode::kRenormalized) return ops.propagation;
  if (!ops.spectrum)
    throw StateError("spectral mode requires operators built with the Laplacian spectrum");
  const auto& s = *ops.spectrum;
  return s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
}

Matrix gcn_forward(const GcnLayer& layer, const GraphOperators& ops, const Matrix& H) {
  if (H.cols() != layer.weight.rows())
    throw ShapeError("gcn_forward: feature dim " + std::to_string(H.cols()) +
                     " != layer input dim " + std::to_string(layer.weight.rows()));
  if (H.rows() != ops.propagation.rows())
    throw ShapeError("gcn_forward: " + std::to_string(H.rows()) + " feature rows for " +
                     std::to_string(ops.propagation.rows()) + " nodes");
  Matrix p = propagation_matrix(ops, layer.mode);
  Matrix z = p * H * layer.weight;
  z.rowwise() += layer.bias.transpose();
  return apply_activation(std::move(z), layer.activation);
}

Matrix message_passing_step(const GraphOperators& ops, const Matrix& H, Aggregation aggregate,
                            const Matrix& weight, const Vector& bias, Activation activation) {
  const int n = static_cast<int>(H.rows());
  const Index f = H.cols();
  if (n != ops.adjacency.rows())
    throw ShapeError("message_passing_step: " + std::to_string(n) + " feature rows for " +
                     std::to_string(ops.adjacency.rows()) + " nodes");
  if (weight.rows() != 2 * f)
    throw ShapeError("message_passing_step: weight rows " + std::to_string(weight.rows()) +
                     " != 2 * feature dim " + std::to_string(f));

  Matrix messages = Matrix::Zero(n, f);
  for (int v = 0; v < n; ++v) {
    int neighbor_count = 0;
    for (int u = 0; u < n; ++u) {
      double a = ops.adjacency(u, v);
      if (a == 0.0) continue;
      Vector msg = a * H.row(u).transpose();
      if (neighbor_count == 0) {
        messages.row(v) = msg.transpose();
      } else if (aggregate == Aggregation::kMax) {
        messages.row(v) = messages.row(v).cwiseMax(msg.transpose());
      } else {
        messages.row(v) += msg.transpose();
      }
      ++neighbor_count;
    }
    if (aggregate == Aggregation::kMean && neighbor_count > 1) messages.row(v) /= neighbor_count;
  }

  Matrix concat(n, 2 * f);
  concat << H, messages;
  Matrix z = concat * weight;
  z.rowwise() += bias.transpose();
  return apply_activation(std::move(z), activation);
}

namespace {

Vector readout_rows(const Matrix& h, Readout readout, std::vector<int>* max_rows) {
  const int n = static_cast<int>(h.rows());
  switch (readout) {
    case Readout::kMean:
      return h.colwise().mean().transpose();
    case Readout::kSum:
      return h.colwise().sum().transpose();
    case Readout::kMax: {
      Vector out(h.cols());
      if (max_rows) max_rows->assign(static_cast<std::size_t>(h.cols()), 0);
      for (Index j = 0; j < h.cols(); ++j) {
        int arg = 0;
        double best = h(0, j);
        for (int i = 1; i < n; ++i) {
          if (h(i, j) > best) {
            best = h(i, j);
            arg = i;
          }
        }
        out(j) = best;
        if (max_rows) (*max_rows)[static_cast<std::size_t>(j)] = arg;
      }
      return out;
    }
  }
  throw StateError("unreachable readout");
}

}  // namespace

Vector encode_atom(const AtomEncoder& enc, const Subgraph& sg) {
  if (sg.node_features.cols() != enc.input_dim())
    throw ShapeError("encode_atom: subgraph feature dim " +
                     std::to_string(sg.node_features.cols()) + " != encoder input dim " +
                     std::to_string(enc.input_dim()));
  Matrix h = sg.node_features;
  for (const auto& layer : enc.layers) h = gcn_forward(layer, sg.ops, h);
  return readout_rows(h, enc.readout, nullptr);
}

AtomTrace encode_atom_traced(const AtomEncoder& enc, const Subgraph& sg) {
  if (sg.node_features.cols() != enc.input_dim())
    throw ShapeError("encode_atom: subgraph feature dim " +
                     std::to_string(sg.node_features.cols()) + " != encoder input dim " +
                     std::to_string(enc.input_dim()));
  for (const auto& layer : enc.layers)
    if (layer.mode != enc.layers.front().mode)
      throw ConfigError("encode_atom_traced: layers must share one propagation mode");
  AtomTrace trace;
  trace.propagation = propagation_matrix(sg.ops, enc.layers.front().mode);
  Matrix h = sg.node_features;
  for (const auto& layer : enc.layers) {
    trace.inputs.push_back(h);
    Matrix z = trace.propagation * h * layer.weight;
    z.rowwise() += layer.bias.transpose();
    trace.pre_activations.push_back(z);
    h = apply_activation(std::move(z), layer.activation);
  }
  trace.output = h;
  trace.atom = readout_rows(h, enc.readout, &trace.max_rows);
  trace.recorded = true;
  return trace;
}

void atom_backward(const AtomEncoder& enc, const AtomTrace& trace, const Vector& atom_grad,
                   EncoderGradients& grads) {
  if (!trace.recorded) throw StateError("atom_backward: no forward pass recorded");
  const int n = static_cast<int>(trace.output.rows());

  Matrix dh;
  switch (enc.readout) {
    case Readout::kMean:
      dh = Matrix::Ones(n, 1) * atom_grad.transpose() / n;
      break;
    case Readout::kSum:
      dh = Matrix::Ones(n, 1) * atom_grad.transpose();
      break;
    case Readout::kMax:
      dh = Matrix::Zero(n, trace.output.cols());
      for (Index j = 0; j < trace.output.cols(); ++j)
        dh(trace.max_rows[static_cast<std::size_t>(j)], j) = atom_grad(j);
      break;
  }

  const Matrix& p = trace.propagation;
  for (int l = static_cast<int>(enc.layers.size()) - 1; l >= 0; --l) {
    const GcnLayer& layer = enc.layers[static_cast<std::size_t>(l)];
    Matrix dz = dh.cwiseProduct(
        activation_mask(trace.pre_activations[static_cast<std::size_t>(l)], layer.activation));
    Matrix ph = p * trace.inputs[static_cast<std::size_t>(l)];
    grads.weight[static_cast<std::size_t>(l)] += ph.transpose() * dz;
    grads.bias[static_cast<std::size_t>(l)] += dz.colwise().sum().transpose();
    if (l > 0) dh = p.transpose() * dz * layer.weight.transpose();
  }
}

}  // namespace gsn
