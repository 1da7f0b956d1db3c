#include "gsn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gsn/errors.hpp"

namespace gsn {
namespace {

double sq_dist(const Matrix& a, int i, const Matrix& b, int j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

ClusterPartition kmeans_single(const Matrix& features, int K, SeededRng rng, int max_iters,
                               bool swap_refine) {
  const int n = static_cast<int>(features.rows());

  // Greedy k-means++ seeding: first centroid uniform, then each new one
  // drawn proportional to the squared distance from the nearest chosen
  // centroid, with several candidates per step and the one minimizing the
  // resulting potential kept.
  const int candidates = 2 + static_cast<int>(std::log2(K + 1));
  Matrix centroids(K, features.cols());
  centroids.row(0) = features.row(static_cast<int>(rng.uniform_index(n)));
  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) d2[i] = sq_dist(features, i, centroids, 0);
  for (int c = 1; c < K; ++c) {
    double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    int best_pick = -1;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int cand = 0; cand < candidates; ++cand) {
      int pick;
      if (total > 0.0) {
        double r = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (int i = 0; i < n; ++i) {
          acc += d2[i];
          if (r < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = static_cast<int>(rng.uniform_index(n));  // all points coincide
      }
      double potential = 0.0;
      for (int i = 0; i < n; ++i)
        potential += std::min(d2[i], (features.row(i) - features.row(pick)).squaredNorm());
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = pick;
      }
    }
    centroids.row(c) = features.row(best_pick);
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_dist(features, i, centroids, c));
  }

  ClusterPartition part;
  part.cluster_count = K;
  part.assignment.assign(n, 0);
  std::vector<int> sizes(K, 0);

  auto assign_all = [&]() {
    std::fill(sizes.begin(), sizes.end(), 0);
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(features, i, centroids, 0);
      for (int c = 1; c < K; ++c) {
        double d = sq_dist(features, i, centroids, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (part.assignment[i] != best) changed = true;
      part.assignment[i] = best;
      sizes[best] += 1;
    }
    // Empty clusters steal the point farthest from its own centroid,
    // preferring donors that keep their cluster non-empty.
    for (int c = 0; c < K; ++c) {
      if (sizes[c] > 0) continue;
      int thief = -1;
      double far = -1.0;
      for (int i = 0; i < n; ++i) {
        if (sizes[part.assignment[i]] <= 1) continue;
        double d = sq_dist(features, i, centroids, part.assignment[i]);
        if (d > far) {
          far = d;
          thief = i;
        }
      }
      if (thief < 0) continue;  // n == K with all singletons; cannot happen with an empty c
      sizes[part.assignment[thief]] -= 1;
      part.assignment[thief] = c;
      sizes[c] = 1;
      changed = true;
    }
    return changed;
  };

  auto update_centroids = [&]() {
    centroids.setZero();
    for (int i = 0; i < n; ++i) centroids.row(part.assignment[i]) += features.row(i);
    for (int c = 0; c < K; ++c)
      if (sizes[c] > 0) centroids.row(c) /= sizes[c];
  };

  auto objective = [&]() {
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += sq_dist(features, i, centroids, part.assignment[i]);
    return obj;
  };

  auto lloyd_to_fixpoint = [&](int iters) {
    for (int iter = 0; iter < iters; ++iter) {
      bool changed = assign_all();
      update_centroids();
      part.objective_trace.push_back(objective());
      if (!changed && iter > 0) break;
    }
  };

  lloyd_to_fixpoint(max_iters);
  if (part.objective_trace.empty()) {
    // max_iters == 0: report the seeding as-is.
    assign_all();
    update_centroids();
    part.objective_trace.push_back(objective());
  }

  if (swap_refine) {
    // Center-swap local search: replace one centroid with one data point,
    // re-run Lloyd, keep the swap when it strictly improves. Escapes Lloyd
    // fixpoints that plain restarts rarely leave.
    bool improved = true;
    while (improved) {
      improved = false;
      double current = part.objective_trace.back();
      for (int c = 0; c < K && !improved; ++c) {
        for (int p = 0; p < n && !improved; ++p) {
          Matrix saved_centroids = centroids;
          std::vector<int> saved_assign = part.assignment;
          std::vector<int> saved_sizes = sizes;
          std::size_t saved_len = part.objective_trace.size();
          centroids.row(c) = features.row(p);
          lloyd_to_fixpoint(max_iters);
          if (part.objective_trace.back() < current - 1e-12) {
            // expose one monotone step per accepted swap, not the trial's
            // intermediate wobble
            double final_obj = part.objective_trace.back();
            part.objective_trace.resize(saved_len);
            part.objective_trace.push_back(final_obj);
            improved = true;
          } else {
            centroids = std::move(saved_centroids);
            part.assignment = std::move(saved_assign);
            sizes = std::move(saved_sizes);
            part.objective_trace.resize(saved_len);
          }
        }
      }
    }
  }
  part.centroids = std::move(centroids);
  return part;
}

}  // namespace

ClusterPartition kmeans(const Matrix& features, int cluster_count, std::uint64_t seed,
                        int max_iters, int restarts) {
  const int n = static_cast<int>(features.rows());
  if (cluster_count < 1 || cluster_count > n)
    throw ConfigError("kmeans: cluster count " + std::to_string(cluster_count) +
                      " outside [1, " + std::to_string(n) + "]");
  if (restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");

  SeededRng root(seed);
  ClusterPartition best;
  for (int r = 0; r < restarts; ++r) {
    // Restarted (test-mode) runs additionally get the center-swap local
    // search; the single-run pipeline path is plain seeded Lloyd.
    ClusterPartition part =
        kmeans_single(features, cluster_count, root.derive(r), max_iters, restarts > 1);
    if (r == 0 || part.objective() < best.objective()) best = std::move(part);
  }
  return best;
}

ClusterPartition canonicalize(ClusterPartition partition, const Matrix& node_positions) {
  const int K = partition.cluster_count;
  if (node_positions.rows() != static_cast<Index>(partition.assignment.size()))
    throw ShapeError("canonicalize: positions rows " + std::to_string(node_positions.rows()) +
                     " != node count " + std::to_string(partition.assignment.size()));

  std::vector<double> mean_row(K, 0.0), mean_col(K, 0.0);
  std::vector<int> sizes(K, 0);
  for (std::size_t i = 0; i < partition.assignment.size(); ++i) {
    int c = partition.assignment[i];
    mean_row[c] += node_positions(static_cast<Index>(i), 0);
    mean_col[c] += node_positions(static_cast<Index>(i), 1);
    sizes[c] += 1;
  }
  for (int c = 0; c < K; ++c) {
    if (sizes[c] == 0) throw StateError("canonicalize: empty cluster " + std::to_string(c));
    mean_row[c] /= sizes[c];
    mean_col[c] /= sizes[c];
  }

  partition.canonical_order.resize(K);
  std::iota(partition.canonical_order.begin(), partition.canonical_order.end(), 0);
  std::sort(partition.canonical_order.begin(), partition.canonical_order.end(),
            [&](int a, int b) {
              if (mean_row[a] != mean_row[b]) return mean_row[a] < mean_row[b];
              if (mean_col[a] != mean_col[b]) return mean_col[a] < mean_col[b];
              if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
              return a < b;
            });
  return partition;
}

std::vector<Subgraph> extract_subgraphs(const Graph& g, const ClusterPartition& partition,
                                        bool with_spectrum) {
  const int S = g.node_count();
  if (static_cast<int>(partition.assignment.size()) != S)
    throw ShapeError("extract_subgraphs: partition covers " +
                     std::to_string(partition.assignment.size()) + " nodes, graph has " +
                     std::to_string(S));
  if (partition.canonical_order.empty())
    throw StateError("extract_subgraphs: partition must be canonicalized first");

  std::vector<Subgraph> out;
  out.reserve(partition.cluster_count);
  for (int rank = 0; rank < partition.cluster_count; ++rank) {
    int cluster = partition.canonical_order[rank];
    Subgraph sg;
    for (int i = 0; i < S; ++i)
      if (partition.assignment[i] == cluster) sg.parent_nodes.push_back(i);

    const int m = sg.node_count();
    std::vector<int> local(S, -1);
    for (int j = 0; j < m; ++j) local[sg.parent_nodes[j]] = j;

    sg.node_features = Matrix(m, g.node_features.cols());
    sg.node_positions = Matrix(m, g.node_positions.cols());
    for (int j = 0; j < m; ++j) {
      sg.node_features.row(j) = g.node_features.row(sg.parent_nodes[j]);
      sg.node_positions.row(j) = g.node_positions.row(sg.parent_nodes[j]);
    }
    for (const auto& e : g.edges) {
      if (local[e.u] >= 0 && local[e.v] >= 0)
        sg.edges.push_back({local[e.u], local[e.v], e.weight});
    }

    Graph induced;
    induced.node_features = sg.node_features;
    induced.node_positions = sg.node_positions;
    induced.edges = sg.edges;
    sg.ops = graph_operators(induced, with_spectrum);
    out.push_back(std::move(sg));
  }
  return out;
}

}  // namespace gsn
