#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gsn/clustering.hpp"
#include "gsn/errors.hpp"
#include "gsn/numerics.hpp"

using namespace gsn;

namespace {

// Exhaustive oracle: best sum-of-squared-distances over every assignment of
// n points to K clusters (empty clusters allowed; they never beat using all
// K). Feasible for K^n up to a few thousand.
double brute_force_kmeans_objective(const Matrix& points, int K) {
  const int n = static_cast<int>(points.rows());
  long total = 1;
  for (int i = 0; i < n; ++i) total *= K;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < n; ++i) {
      assign[static_cast<std::size_t>(i)] = static_cast<int>(c % K);
      c /= K;
    }
    Matrix centroid = Matrix::Zero(K, points.cols());
    std::vector<int> size(static_cast<std::size_t>(K), 0);
    for (int i = 0; i < n; ++i) {
      centroid.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      size[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += 1;
    }
    for (int k = 0; k < K; ++k)
      if (size[static_cast<std::size_t>(k)] > 0) centroid.row(k) /= size[static_cast<std::size_t>(k)];
    double obj = 0.0;
    for (int i = 0; i < n; ++i)
      obj += (points.row(i) - centroid.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
    best = std::min(best, obj);
  }
  return best;
}

Matrix column(std::initializer_list<double> values) {
  Matrix m(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("kmeans two well-separated 1-D pairs") {
  Matrix pts = column({0.0, 0.1, 10.0, 10.1});
  ClusterPartition p = kmeans(pts, 2, 123, 100, 10);
  CHECK(p.objective() == doctest::Approx(0.01).epsilon(1e-9));
  std::set<double> centroids = {p.centroids(0, 0), p.centroids(1, 0)};
  CHECK(*centroids.begin() == doctest::Approx(0.05));
  CHECK(*centroids.rbegin() == doctest::Approx(10.05));
  CHECK(p.assignment[0] == p.assignment[1]);
  CHECK(p.assignment[2] == p.assignment[3]);
  CHECK(p.assignment[0] != p.assignment[2]);
}

TEST_CASE("kmeans K=1 closed form and K=n degenerate") {
  Matrix pts = column({1.0, 2.0, 6.0});
  ClusterPartition one = kmeans(pts, 1, 5);
  CHECK(one.centroids(0, 0) == doctest::Approx(3.0));

  ClusterPartition all = kmeans(pts, 3, 5);
  CHECK(all.objective() == doctest::Approx(0.0));
  std::set<int> used(all.assignment.begin(), all.assignment.end());
  CHECK(used.size() == 3);
}

TEST_CASE("kmeans objective is non-increasing every iteration") {
  SeededRng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 4 + static_cast<int>(rng.uniform_index(20));
    int d = 1 + static_cast<int>(rng.uniform_index(4));
    int K = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    Matrix pts(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform(-3, 3);
    ClusterPartition p = kmeans(pts, K, rng.next_u64());
    for (std::size_t t = 1; t < p.objective_trace.size(); ++t)
      CHECK(p.objective_trace[t] <= p.objective_trace[t - 1] + 1e-10);
    // every cluster non-empty
    std::vector<int> size(static_cast<std::size_t>(K), 0);
    for (int a : p.assignment) size[static_cast<std::size_t>(a)] += 1;
    for (int s : size) CHECK(s > 0);
  }
}

TEST_CASE("kmeans with restarts matches the brute-force optimum on 1-D instances") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 3 + static_cast<int>(rng.uniform_index(6));  // 3..8
    int K = 1 + static_cast<int>(rng.uniform_index(3));  // 1..3
    if (K > n) K = n;
    Matrix pts(n, 1);
    for (int i = 0; i < n; ++i) pts(i, 0) = rng.uniform(-5, 5);
    double oracle = brute_force_kmeans_objective(pts, K);
    ClusterPartition p = kmeans(pts, K, rng.next_u64(), 100, 10);
    CHECK(p.objective() == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("kmeans determinism and bad K") {
  Matrix pts = column({0, 1, 2, 3, 9, 10});
  ClusterPartition a = kmeans(pts, 2, 777);
  ClusterPartition b = kmeans(pts, 2, 777);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids.isApprox(b.centroids));
  CHECK_THROWS_AS(kmeans(pts, 0, 1), ConfigError);
  CHECK_THROWS_AS(kmeans(pts, 7, 1), ConfigError);
}

TEST_CASE("canonicalize orders clusters by scanline position") {
  ClusterPartition p;
  p.cluster_count = 2;
  p.assignment = {0, 0, 1, 1};
  p.centroids = Matrix::Zero(2, 1);
  Matrix pos(4, 2);
  // cluster 0 sits at row 9, cluster 1 at row 2
  pos << 9, 0, 9, 2, 2, 0, 2, 2;
  p = canonicalize(p, pos);
  REQUIRE(p.canonical_order.size() == 2);
  CHECK(p.canonical_order[0] == 1);  // top cluster first
  CHECK(p.canonical_order[1] == 0);

  // idempotent
  ClusterPartition q = canonicalize(p, pos);
  CHECK(q.canonical_order == p.canonical_order);
}

TEST_CASE("canonicalize breaks centroid ties by size descending") {
  ClusterPartition p;
  p.cluster_count = 2;
  p.assignment = {0, 0, 0, 0, 0, 1, 1, 1};
  p.centroids = Matrix::Zero(2, 1);
  Matrix pos = Matrix::Zero(8, 2);  // all nodes at the same spot
  p = canonicalize(p, pos);
  CHECK(p.canonical_order[0] == 0);  // size 5 before size 3
  CHECK(p.canonical_order[1] == 1);
}

namespace {

Graph path_graph(int n) {
  Matrix f = Matrix::Identity(n, std::max(n, 2));
  std::vector<std::pair<int, int>> adj;
  for (int i = 0; i + 1 < n; ++i) adj.emplace_back(i, i + 1);
  Matrix pos(n, 2);
  for (int i = 0; i < n; ++i) {
    pos(i, 0) = 0;
    pos(i, 1) = i;
  }
  return build_graph(f, adj, pos, 1);
}

}  // namespace

TEST_CASE("extract_subgraphs single cluster reproduces the graph") {
  Graph g = path_graph(4);
  ClusterPartition p;
  p.cluster_count = 1;
  p.assignment = {0, 0, 0, 0};
  p.centroids = Matrix::Zero(1, g.node_features.cols());
  p = canonicalize(p, g.node_positions);
  auto subs = extract_subgraphs(g, p);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].node_count() == 4);
  CHECK(subs[0].edges.size() == g.edges.size());
  CHECK(subs[0].node_features.isApprox(g.node_features));
}

TEST_CASE("extract_subgraphs splits a path and drops the crossing edge") {
  Graph g = path_graph(4);
  REQUIRE(g.edges.size() >= 3);
  ClusterPartition p;
  p.cluster_count = 2;
  p.assignment = {0, 0, 1, 1};
  p.centroids = Matrix::Zero(2, g.node_features.cols());
  p = canonicalize(p, g.node_positions);
  auto subs = extract_subgraphs(g, p);
  REQUIRE(subs.size() == 2);
  // each side keeps only its internal path edge
  for (const auto& sg : subs) {
    CHECK(sg.node_count() == 2);
    bool has_internal = false;
    for (const auto& e : sg.edges)
      if ((e.u == 0 && e.v == 1) || (e.u == 1 && e.v == 0)) has_internal = true;
    CHECK(has_internal);
    // operators recomputed on the induced graph
    CHECK(sg.ops.laplacian.rows() == 2);
    CHECK((sg.ops.laplacian * Vector::Ones(2)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  // union of parent node sets is the full node set, pairwise disjoint
  std::set<int> all;
  for (const auto& sg : subs)
    for (int v : sg.parent_nodes) CHECK(all.insert(v).second);
  CHECK(all.size() == 4);
}

TEST_CASE("extract_subgraphs singleton cluster") {
  Graph g = path_graph(3);
  ClusterPartition p;
  p.cluster_count = 2;
  p.assignment = {0, 0, 1};
  p.centroids = Matrix::Zero(2, g.node_features.cols());
  p = canonicalize(p, g.node_positions);
  auto subs = extract_subgraphs(g, p);
  const Subgraph* singleton = nullptr;
  for (const auto& sg : subs)
    if (sg.node_count() == 1) singleton = &sg;
  REQUIRE(singleton != nullptr);
  CHECK(singleton->edges.empty());
  CHECK(singleton->ops.laplacian(0, 0) == 0.0);
  CHECK(singleton->ops.propagation(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("extract_subgraphs requires canonicalized partition of right size") {
  Graph g = path_graph(3);
  ClusterPartition p;
  p.cluster_count = 1;
  p.assignment = {0, 0, 0};
  p.centroids = Matrix::Zero(1, g.node_features.cols());
  CHECK_THROWS_AS(extract_subgraphs(g, p), StateError);  // not canonicalized
  p.assignment = {0, 0};
  CHECK_THROWS_AS(extract_subgraphs(g, p), ShapeError);
}
