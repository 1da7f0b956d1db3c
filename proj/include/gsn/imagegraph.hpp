#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gsn/image.hpp"
#include "gsn/numerics.hpp"
#include "gsn/superpixels.hpp"
#include "gsn/types.hpp"

namespace gsn {

// Undirected weighted edge, stored once with u < v.
struct GraphEdge {
  int u = 0;
  int v = 0;
  double weight = 0.0;
};

// Superpixel graph: one node per superpixel, L2-normalized feature rows,
// edges from region adjacency plus cosine KNN. Connected by construction.
struct Graph {
  Matrix node_features;   // S x F, rows L2-normalized
  Matrix node_positions;  // S x 2, (row, col) centroids
  std::vector<GraphEdge> edges;  // sorted by (u, v), no self-loops, no duplicates

  int node_count() const { return static_cast<int>(node_features.rows()); }
};

// Dense operator views of a Graph. laplacian = degree - adjacency;
// propagation is the self-loop degree-normalized adjacency
// Dt^{-1/2} (A + I) Dt^{-1/2}. spectrum holds the Laplacian eigenpairs when
// requested at construction.
struct GraphOperators {
  Matrix adjacency;
  Matrix degree;
  Matrix laplacian;
  Matrix propagation;
  std::optional<SpectralDecomposition> spectrum;
};

// Handcrafted per-superpixel descriptor: mean RGB (3) + 8-bin color
// histogram per channel (24) + 8-bin gradient orientation histogram (8) +
// normalized centroid (2) = 37 columns. Rows follow superpixel ids.
constexpr int kHandcraftedFeatureDim = 37;
Matrix handcrafted_features(const ImageBuffer& img, const SuperpixelMap& sp);

// Reads a GSNT feature tensor of dims [S, F]; row count must equal
// sp.count or a ShapeError naming both counts is thrown.
Matrix imported_features(const std::string& path, const SuperpixelMap& sp);

// Dispatch on the extractor string: "handcrafted" or "import:<path>".
Matrix extract_features(const ImageBuffer& img, const SuperpixelMap& sp,
                        const std::string& extractor);

// Core construction from explicit adjacency pairs: region-adjacency edges get
// weight 1, each node links to its k most cosine-similar peers with weight
// max(cos, 0) (zero-weight links are dropped), and components are joined by
// the highest-similarity cross-component pair until connected. Feature rows
// are L2-normalized before similarity ranking and stored normalized.
Graph build_graph(const Matrix& features, const std::vector<std::pair<int, int>>& adjacency_pairs,
                  const Matrix& positions, int k);

// Convenience overload deriving pixel-boundary adjacency from the map.
Graph build_graph(const Matrix& features, const SuperpixelMap& sp, int k);

// Region adjacency pairs (u < v) of superpixels sharing a 4-neighbor pixel
// boundary.
std::vector<std::pair<int, int>> region_adjacency(const SuperpixelMap& sp);

GraphOperators graph_operators(const Graph& g, bool with_spectrum = false);

// Connected components over nonzero-weight edges; returns component id per
// node.
std::vector<int> connected_components(int node_count, const std::vector<GraphEdge>& edges);

}  // namespace gsn
