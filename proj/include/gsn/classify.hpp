#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "gsn/numerics.hpp"
#include "gsn/types.hpp"

namespace gsn {

struct SoftmaxClassifier {
  Matrix weight;  // Z x C
  Vector bias;    // C

  int feature_dim() const { return static_cast<int>(weight.rows()); }
  int class_count() const { return static_cast<int>(weight.cols()); }
};

SoftmaxClassifier make_classifier(int feature_dim, int class_count, SeededRng& rng);

// Concatenates per-cluster atom vectors (canonical order), then code vectors
// when given. All atoms must share one length, likewise all codes.
Vector concat_features(const std::vector<Vector>& atoms, const std::vector<Vector>* codes);

// Max-subtracted softmax of W^T f + b; probabilities sum to 1.
Vector softmax_probabilities(const SoftmaxClassifier& clf, const Vector& features);

// Argmax class (ties broken toward the lowest id) plus the full distribution.
std::pair<int, Vector> predict(const SoftmaxClassifier& clf, const Vector& features);

// -ln(p_true) with p clamped at 1e-12. Out-of-range class throws DomainError.
double cross_entropy(const Vector& probabilities, int true_class);

struct Metrics {
  double accuracy = 0.0;
  Eigen::MatrixXi confusion;       // rows actual, cols predicted
  std::vector<double> precision;   // 0 when the class was never predicted
  std::vector<double> recall;      // 0 when the class has no support
  int total = 0;
};

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& actual,
                        int class_count);

// Halve-on-plateau schedule: when the observed loss fails to improve the
// best by at least min_delta for `patience` consecutive observations, the
// rate is multiplied by factor (never below floor) and the counter resets.
class PlateauScheduler {
public:
  PlateauScheduler(double initial_lr, int patience, double factor = 0.5, double min_delta = 1e-4,
                   double floor = 1e-6)
      : lr_(initial_lr), patience_(patience), factor_(factor), min_delta_(min_delta),
        floor_(floor) {}

  void observe(double loss) {
    if (loss < best_ - min_delta_) {
      best_ = loss;
      bad_epochs_ = 0;
      return;
    }
    if (++bad_epochs_ >= patience_) {
      lr_ = std::max(lr_ * factor_, floor_);
      bad_epochs_ = 0;
    }
  }

  double lr() const { return lr_; }

private:
  double lr_;
  int patience_;
  double factor_, min_delta_, floor_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace gsn
