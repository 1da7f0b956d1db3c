#include "gsn/imagegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gsn/errors.hpp"
#include "gsn/tensor_io.hpp"

namespace gsn {

Matrix handcrafted_features(const ImageBuffer& img, const SuperpixelMap& sp) {
  const int W = img.width, H = img.height, S = sp.count;
  Matrix f = Matrix::Zero(S, kHandcraftedFeatureDim);

  // Luminance gradients for the orientation histogram (Rec.601 luma).
  Matrix luma(H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      luma(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);

  constexpr int kBins = 8;
  const double two_pi = 2.0 * M_PI;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      int id = sp.label(y, x);
      for (int c = 0; c < 3; ++c) {
        double v = img.at(y, x, c);
        f(id, c) += v;
        int bin = std::min(kBins - 1, static_cast<int>(v * kBins));
        f(id, 3 + c * kBins + bin) += 1.0;
      }
      int xm = std::max(0, x - 1), xp = std::min(W - 1, x + 1);
      int ym = std::max(0, y - 1), yp = std::min(H - 1, y + 1);
      double gx = (luma(y, xp) - luma(y, xm)) / (xp - xm > 0 ? xp - xm : 1);
      double gy = (luma(yp, x) - luma(ym, x)) / (yp - ym > 0 ? yp - ym : 1);
      double mag = std::hypot(gx, gy);
      // Magnitudes below 0.08 are indistinguishable from pixel noise and
      // would wash the orientation profile toward uniform.
      if (mag > 0.08) {
        double ang = std::atan2(gy, gx);  // (-pi, pi]
        int bin = std::min(kBins - 1, static_cast<int>((ang + M_PI) / (two_pi / kBins)));
        f(id, 27 + bin) += mag;
      }
    }
  }

  for (Index id = 0; id < S; ++id) {
    double n = sp.sizes[static_cast<std::size_t>(id)];
    f.row(id).head(27) /= n;  // means and color histogram fractions
    // Orientation histogram as per-bin magnitude fractions: contrast
    // invariant, and exactly zero on constant regions.
    double grad_total = f.row(id).segment(27, 8).sum();
    if (grad_total > 0.0) f.row(id).segment(27, 8) /= grad_total;
    f(id, 35) = sp.centroids(id, 0) / (H - 1);
    f(id, 36) = sp.centroids(id, 1) / (W - 1);
  }
  return f;
}

Matrix imported_features(const std::string& path, const SuperpixelMap& sp) {
  Tensor t = tensor_read_file(path);
  if (t.dims.size() != 2)
    throw ShapeError("imported features " + path + ": expected 2 dims, got " +
                     std::to_string(t.dims.size()));
  if (t.dims[0] != static_cast<std::uint64_t>(sp.count))
    throw ShapeError("imported features " + path + ": row count " + std::to_string(t.dims[0]) +
                     " does not match superpixel count " + std::to_string(sp.count));
  return matrix_from_tensor(t);
}

Matrix extract_features(const ImageBuffer& img, const SuperpixelMap& sp,
                        const std::string& extractor) {
  if (extractor == "handcrafted") return handcrafted_features(img, sp);
  if (extractor.rfind("import:", 0) == 0) return imported_features(extractor.substr(7), sp);
  throw ConfigError("unknown feature extractor '" + extractor +
                    "' (expected 'handcrafted' or 'import:<path>')");
}

std::vector<std::pair<int, int>> region_adjacency(const SuperpixelMap& sp) {
  std::vector<std::pair<int, int>> pairs;
  for (int y = 0; y < sp.height; ++y) {
    for (int x = 0; x < sp.width; ++x) {
      int a = sp.label(y, x);
      if (x + 1 < sp.width) {
        int b = sp.label(y, x + 1);
        if (a != b) pairs.emplace_back(std::min(a, b), std::max(a, b));
      }
      if (y + 1 < sp.height) {
        int b = sp.label(y + 1, x);
        if (a != b) pairs.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

Graph build_graph(const Matrix& features, const std::vector<std::pair<int, int>>& adjacency_pairs,
                  const Matrix& positions, int k) {
  const int S = static_cast<int>(features.rows());
  if (S < 2) throw ConfigError("build_graph: need at least 2 nodes, got " + std::to_string(S));
  if (k < 1) throw ConfigError("build_graph: k must be >= 1, got " + std::to_string(k));
  if (k >= S)
    throw ConfigError("build_graph: k (" + std::to_string(k) + ") must be < node count (" +
                      std::to_string(S) + ")");

  Matrix normalized = features;
  for (int i = 0; i < S; ++i) {
    double n = normalized.row(i).norm();
    if (n > 0.0) normalized.row(i) /= n;
  }

  // Cosine of normalized rows is a plain dot product.
  Matrix cos = normalized * normalized.transpose();

  std::map<std::pair<int, int>, double> edge_weight;
  for (auto [u, v] : adjacency_pairs) {
    if (u == v) continue;
    edge_weight[{std::min(u, v), std::max(u, v)}] = 1.0;
  }

  std::vector<int> order(S);
  for (int i = 0; i < S; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (a == i) return false;
      if (b == i) return true;
      if (cos(i, a) != cos(i, b)) return cos(i, a) > cos(i, b);
      return a < b;
    });
    for (int r = 0; r < k; ++r) {
      int j = order[r];
      double w = std::max(cos(i, j), 0.0);
      if (w <= 0.0) continue;  // zero-weight link is no link
      auto key = std::make_pair(std::min(i, j), std::max(i, j));
      auto it = edge_weight.find(key);
      if (it == edge_weight.end()) {
        edge_weight[key] = w;
      } else {
        it->second = std::max(it->second, w);
      }
    }
  }

  UnionFind uf(S);
  for (auto& [key, w] : edge_weight) uf.unite(key.first, key.second);

  // Join remaining components through their most similar cross pair. The
  // weight gets a small floor so the joined graph is connected spectrally,
  // not just combinatorially.
  constexpr double kRepairFloor = 1e-3;
  while (true) {
    bool multiple = false;
    for (int i = 1; i < S && !multiple; ++i) multiple = uf.find(i) != uf.find(0);
    if (!multiple) break;
    int bu = -1, bv = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < S; ++i) {
      for (int j = i + 1; j < S; ++j) {
        if (uf.find(i) == uf.find(j)) continue;
        if (cos(i, j) > best) {
          best = cos(i, j);
          bu = i;
          bv = j;
        }
      }
    }
    edge_weight[{bu, bv}] = std::max(best, kRepairFloor);
    uf.unite(bu, bv);
  }

  Graph g;
  g.node_features = std::move(normalized);
  g.node_positions = positions;
  g.edges.reserve(edge_weight.size());
  for (auto& [key, w] : edge_weight) g.edges.push_back({key.first, key.second, w});
  return g;
}

Graph build_graph(const Matrix& features, const SuperpixelMap& sp, int k) {
  return build_graph(features, region_adjacency(sp), sp.centroids, k);
}

GraphOperators graph_operators(const Graph& g, bool with_spectrum) {
  const int S = g.node_count();
  if (S < 1) throw ConfigError("graph_operators: graph has no nodes");

  GraphOperators ops;
  ops.adjacency = Matrix::Zero(S, S);
  for (const auto& e : g.edges) {
    ops.adjacency(e.u, e.v) = e.weight;
    ops.adjacency(e.v, e.u) = e.weight;
  }
  ops.degree = Matrix::Zero(S, S);
  for (int i = 0; i < S; ++i) ops.degree(i, i) = ops.adjacency.row(i).sum();
  ops.laplacian = ops.degree - ops.adjacency;

  Matrix with_loops = ops.adjacency + Matrix::Identity(S, S);
  Vector dt = with_loops.rowwise().sum();
  Vector dt_isqrt = dt.array().inverse().sqrt();
  ops.propagation = dt_isqrt.asDiagonal() * with_loops * dt_isqrt.asDiagonal();

  if (with_spectrum) ops.spectrum = eig_symmetric(ops.laplacian);
  return ops;
}

std::vector<int> connected_components(int node_count, const std::vector<GraphEdge>& edges) {
  UnionFind uf(node_count);
  for (const auto& e : edges)
    if (e.weight > 0.0) uf.unite(e.u, e.v);
  std::vector<int> comp(node_count);
  std::map<int, int> remap;
  for (int i = 0; i < node_count; ++i) {
    int root = uf.find(i);
    auto it = remap.emplace(root, static_cast<int>(remap.size())).first;
    comp[i] = it->second;
  }
  return comp;
}

}  // namespace gsn
