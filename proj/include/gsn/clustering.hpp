#pragma once

#include <cstdint>
#include <vector>

#include "gsn/imagegraph.hpp"
#include "gsn/types.hpp"

namespace gsn {

// K-way partition of graph nodes. Clusters are always non-empty.
// canonical_order lists cluster ids sorted by spatial centroid in scanline
// order (mean row, then mean column), ties broken by cluster size
// descending then cluster id; it is filled by canonicalize().
struct ClusterPartition {
  int cluster_count = 0;
  std::vector<int> assignment;        // per node, in 0..K-1
  Matrix centroids;                   // K x F
  std::vector<int> canonical_order;   // empty until canonicalize()
  std::vector<double> objective_trace;  // sum of squared distances per iteration

  double objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

// Node-induced subgraph of a parent Graph. Operators are recomputed on the
// induced edge set, never sliced out of the parent Laplacian.
struct Subgraph {
  std::vector<int> parent_nodes;  // sorted ascending
  Matrix node_features;
  Matrix node_positions;
  std::vector<GraphEdge> edges;   // reindexed to 0..size-1
  GraphOperators ops;

  int node_count() const { return static_cast<int>(parent_nodes.size()); }
};

// Lloyd's algorithm with seeded k-means++ initialization. Stops on an
// assignment fixpoint or after max_iters; empty clusters are repaired by
// stealing the point farthest from its centroid. With restarts > 1 the run
// with the lowest final objective wins (derived seeds, deterministic).
ClusterPartition kmeans(const Matrix& features, int cluster_count, std::uint64_t seed,
                        int max_iters = 100, int restarts = 1);

// Fills canonical_order from per-node positions (rows of node_positions
// aligned with the assignment). Idempotent.
ClusterPartition canonicalize(ClusterPartition partition, const Matrix& node_positions);

// Induced subgraphs in canonical cluster order. Requires a canonicalized
// partition matching g's node count.
std::vector<Subgraph> extract_subgraphs(const Graph& g, const ClusterPartition& partition,
                                        bool with_spectrum = false);

}  // namespace gsn
