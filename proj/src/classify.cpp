#include "gsn/classify.hpp"

#include <algorithm>
#include <cmath>

#include "gsn/errors.hpp"

namespace gsn {

SoftmaxClassifier make_classifier(int feature_dim, int class_count, SeededRng& rng) {
  if (feature_dim < 1 || class_count < 2)
    throw ConfigError("classifier needs feature_dim >= 1 and class_count >= 2");
  SoftmaxClassifier clf;
  double a = std::sqrt(6.0 / (feature_dim + class_count));
  clf.weight = Matrix(feature_dim, class_count);
  for (int i = 0; i < feature_dim; ++i)
    for (int j = 0; j < class_count; ++j) clf.weight(i, j) = rng.uniform(-a, a);
  clf.bias = Vector::Zero(class_count);
  return clf;
}

Vector concat_features(const std::vector<Vector>& atoms, const std::vector<Vector>* codes) {
  if (atoms.empty()) throw ShapeError("concat_features: no atom blocks");
  const Index d = atoms.front().size();
  for (const auto& a : atoms)
    if (a.size() != d)
      throw ShapeError("concat_features: atom block length " + std::to_string(a.size()) +
                       " != " + std::to_string(d));
  Index code_len = 0;
  if (codes) {
    if (codes->size() != atoms.size())
      throw ShapeError("concat_features: " + std::to_string(codes->size()) + " code blocks for " +
                       std::to_string(atoms.size()) + " atom blocks");
    code_len = codes->front().size();
    for (const auto& c : *codes)
      if (c.size() != code_len)
        throw ShapeError("concat_features: code block length " + std::to_string(c.size()) +
                         " != " + std::to_string(code_len));
  }

  Vector out(static_cast<Index>(atoms.size()) * d + static_cast<Index>(codes ? atoms.size() : 0) *
                                                        code_len);
  Index at = 0;
  for (const auto& a : atoms) {
    out.segment(at, d) = a;
    at += d;
  }
  if (codes) {
    for (const auto& c : *codes) {
      out.segment(at, code_len) = c;
      at += code_len;
    }
  }
  return out;
}

Vector softmax_probabilities(const SoftmaxClassifier& clf, const Vector& features) {
  if (features.size() != clf.weight.rows())
    throw ShapeError("predict: feature length " + std::to_string(features.size()) +
                     " != classifier input dim " + std::to_string(clf.weight.rows()));
  Vector logits = clf.weight.transpose() * features + clf.bias;
  double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

std::pair<int, Vector> predict(const SoftmaxClassifier& clf, const Vector& features) {
  Vector p = softmax_probabilities(clf, features);
  int best = 0;
  for (Index c = 1; c < p.size(); ++c)
    if (p(c) > p(best)) best = static_cast<int>(c);
  return {best, std::move(p)};
}

double cross_entropy(const Vector& probabilities, int true_class) {
  if (true_class < 0 || true_class >= probabilities.size())
    throw DomainError("cross_entropy: class " + std::to_string(true_class) + " outside [0, " +
                      std::to_string(probabilities.size()) + ")");
  return -std::log(std::max(probabilities(true_class), 1e-12));
}

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual,
                        int class_count) {
  if (predicted.size() != actual.size())
    throw ShapeError("compute_metrics: predicted/actual size mismatch");
  if (predicted.empty()) throw ConfigError("compute_metrics: empty dataset");

  Metrics m;
  m.total = static_cast<int>(predicted.size());
  m.confusion = Eigen::MatrixXi::Zero(class_count, class_count);
  int correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (actual[i] < 0 || actual[i] >= class_count || predicted[i] < 0 ||
        predicted[i] >= class_count)
      throw DomainError("compute_metrics: class id outside [0, " + std::to_string(class_count) +
                        ")");
    m.confusion(actual[i], predicted[i]) += 1;
    if (predicted[i] == actual[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / m.total;
  m.precision.resize(class_count);
  m.recall.resize(class_count);
  for (int c = 0; c < class_count; ++c) {
    int col = m.confusion.col(c).sum();
    int row = m.confusion.row(c).sum();
    m.precision[c] = col > 0 ? static_cast<double>(m.confusion(c, c)) / col : 0.0;
    m.recall[c] = row > 0 ? static_cast<double>(m.confusion(c, c)) / row : 0.0;
  }
  return m;
}

}  // namespace gsn
