#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gsn/classify.hpp"
#include "gsn/errors.hpp"

using namespace gsn;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("concat_features lays out atom blocks then code blocks") {
  std::vector<Vector> atoms = {vec({1, 2}), vec({3, 4})};
  Vector plain = concat_features(atoms, nullptr);
  CHECK(plain.isApprox(vec({1, 2, 3, 4})));

  std::vector<Vector> codes = {vec({5}), vec({6})};
  Vector with_codes = concat_features(atoms, &codes);
  CHECK(with_codes.isApprox(vec({1, 2, 3, 4, 5, 6})));
}

TEST_CASE("concat_features rejects inconsistent blocks") {
  std::vector<Vector> atoms = {vec({1, 2}), vec({3})};
  CHECK_THROWS_AS(concat_features(atoms, nullptr), ShapeError);

  std::vector<Vector> ok = {vec({1, 2}), vec({3, 4})};
  std::vector<Vector> codes = {vec({5})};
  CHECK_THROWS_AS(concat_features(ok, &codes), ShapeError);
}

TEST_CASE("predict with zero weights is uniform, ties go to class 0") {
  SoftmaxClassifier clf;
  clf.weight = Matrix::Zero(3, 4);
  clf.bias = Vector::Zero(4);
  auto [cls, probs] = predict(clf, vec({1, 2, 3}));
  CHECK(cls == 0);
  for (int c = 0; c < 4; ++c) CHECK(probs(c) == doctest::Approx(0.25));
  CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("predict bias-dominated case matches the sigmoid value") {
  SoftmaxClassifier clf;
  clf.weight = Matrix::Zero(2, 2);
  clf.bias = vec({10, 0});
  auto [cls, probs] = predict(clf, vec({0, 0}));
  CHECK(cls == 0);
  CHECK(probs(0) == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-9));
}

TEST_CASE("softmax is invariant to constant logit shifts") {
  SoftmaxClassifier a, b;
  a.weight = Matrix::Zero(2, 3);
  a.weight << 1, -2, 0.5, 0.25, 1.5, -1;
  a.bias = vec({0.1, 0.2, 0.3});
  b = a;
  b.bias.array() += 7.5;  // constant shift in every logit
  Vector f = vec({0.4, -0.6});
  Vector pa = softmax_probabilities(a, f);
  Vector pb = softmax_probabilities(b, f);
  CHECK((pa - pb).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("cross_entropy analytic values and clamping") {
  Vector uniform = vec({0.25, 0.25, 0.25, 0.25});
  CHECK(cross_entropy(uniform, 2) == doctest::Approx(1.3862944).epsilon(1e-6));

  Vector sure = vec({0, 1});
  CHECK(cross_entropy(sure, 1) == doctest::Approx(0.0));

  Vector tiny = vec({1 - 1e-20, 1e-20});
  CHECK(cross_entropy(tiny, 1) == doctest::Approx(-std::log(1e-12)));

  CHECK_THROWS_AS(cross_entropy(uniform, 4), DomainError);
  CHECK_THROWS_AS(cross_entropy(uniform, -1), DomainError);
}

TEST_CASE("metrics: perfect, constant predictor, row sums") {
  Metrics perfect = compute_metrics({0, 1, 2}, {0, 1, 2}, 3);
  CHECK(perfect.accuracy == doctest::Approx(1.0));
  for (int c = 0; c < 3; ++c) CHECK(perfect.confusion(c, c) == 1);

  Metrics half = compute_metrics({0, 0, 0, 0}, {0, 0, 1, 1}, 2);
  CHECK(half.accuracy == doctest::Approx(0.5));

  Metrics m = compute_metrics({0, 1, 1, 0, 2}, {0, 1, 2, 2, 2}, 3);
  // confusion row sums equal per-class support
  CHECK(m.confusion.row(0).sum() == 1);
  CHECK(m.confusion.row(1).sum() == 1);
  CHECK(m.confusion.row(2).sum() == 3);
}

TEST_CASE("plateau scheduler halves at epochs 6, 11, 16 on constant loss") {
  PlateauScheduler sched(0.001, 5);
  std::vector<int> halve_epochs;
  double prev = sched.lr();
  for (int epoch = 1; epoch <= 16; ++epoch) {
    sched.observe(1.0);
    if (sched.lr() != prev) {
      halve_epochs.push_back(epoch);
      prev = sched.lr();
    }
  }
  CHECK(halve_epochs == std::vector<int>{6, 11, 16});
  CHECK(sched.lr() == doctest::Approx(0.001 / 8));
}

TEST_CASE("plateau scheduler keeps the rate while improving and respects the floor") {
  PlateauScheduler sched(0.001, 5);
  double loss = 10.0;
  for (int epoch = 0; epoch < 50; ++epoch) {
    sched.observe(loss);
    loss -= 0.01;  // improves by more than min_delta every epoch
  }
  CHECK(sched.lr() == doctest::Approx(0.001));

  PlateauScheduler floor_sched(2e-6, 1);
  floor_sched.observe(1.0);
  floor_sched.observe(1.0);  // halve -> 1e-6
  floor_sched.observe(1.0);  // would go below the floor
  CHECK(floor_sched.lr() == doctest::Approx(1e-6));
}
