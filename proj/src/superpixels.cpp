#include "gsn/superpixels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "gsn/errors.hpp"

namespace gsn {
namespace {

struct Center {
  double l = 0, a = 0, b = 0, row = 0, col = 0;
};

struct Component {
  int slic_label = 0;
  int size = 0;
  double mean_l = 0, mean_a = 0, mean_b = 0;
  int first_pixel = 0;
};

}  // namespace

SuperpixelMap slic_superpixels(const ImageBuffer& img, int target_count, double compactness,
                               std::uint64_t seed) {
  (void)seed;  // segmentation is deterministic
  const int W = img.width, H = img.height;
  if (W < 8 || H < 8)
    throw ConfigError("slic: image must be at least 8x8 pixels, got " + std::to_string(W) + "x" +
                      std::to_string(H));
  const long npix = static_cast<long>(W) * H;
  if (target_count < 1 || static_cast<long>(target_count) > npix / 4)
    throw ConfigError("slic: target_count " + std::to_string(target_count) + " outside [1, " +
                      std::to_string(npix / 4) + "]");
  if (compactness <= 0.0) throw ConfigError("slic: compactness must be positive");

  const LabImage lab = rgb_to_lab(img);

  // Grid seeding with nx*ny ~ target_count cells matched to the aspect ratio.
  int ny = std::max<long>(1, std::lround(std::sqrt(static_cast<double>(target_count) * H / W)));
  ny = std::min(ny, H);
  int nx = std::max<long>(1, std::lround(static_cast<double>(target_count) / ny));
  nx = std::min(nx, W);
  const double spacing_x = static_cast<double>(W) / nx;
  const double spacing_y = static_cast<double>(H) / ny;

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double cx = (i + 0.5) * spacing_x;
      double cy = (j + 0.5) * spacing_y;
      // Nudge the seed to the lowest-gradient pixel in its 3x3 neighborhood.
      int px = std::clamp(static_cast<int>(std::lround(cx)), 1, W - 2);
      int py = std::clamp(static_cast<int>(std::lround(cy)), 1, H - 2);
      int bx = px, by = py;
      double best_grad = std::numeric_limits<double>::infinity();
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          int x = std::clamp(px + dx, 1, W - 2);
          int y = std::clamp(py + dy, 1, H - 2);
          auto d2 = [&](int y0, int x0, int y1, int x1) {
            double dl = lab.L(y0, x0) - lab.L(y1, x1);
            double da = lab.a(y0, x0) - lab.a(y1, x1);
            double db = lab.b(y0, x0) - lab.b(y1, x1);
            return dl * dl + da * da + db * db;
          };
          double g = d2(y, x + 1, y, x - 1) + d2(y + 1, x, y - 1, x);
          if (g < best_grad) {
            best_grad = g;
            bx = x;
            by = y;
          }
        }
      }
      Center c;
      c.l = lab.L(by, bx);
      c.a = lab.a(by, bx);
      c.b = lab.b(by, bx);
      c.row = by;
      c.col = bx;
      centers.push_back(c);
    }
  }

  const double cell = std::sqrt(spacing_x * spacing_y);
  const double spatial_weight = (compactness * compactness) / (cell * cell);
  const double rx = spacing_x, ry = spacing_y;

  std::vector<int> label(static_cast<std::size_t>(npix), -1);
  std::vector<double> dist(static_cast<std::size_t>(npix));

  for (int iter = 0; iter < 10; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(label.begin(), label.end(), -1);

    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      const Center& c = centers[ci];
      int x0 = std::max(0, static_cast<int>(std::floor(c.col - rx)));
      int x1 = std::min(W - 1, static_cast<int>(std::ceil(c.col + rx)));
      int y0 = std::max(0, static_cast<int>(std::floor(c.row - ry)));
      int y1 = std::min(H - 1, static_cast<int>(std::ceil(c.row + ry)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          double dl = lab.L(y, x) - c.l;
          double da = lab.a(y, x) - c.a;
          double db = lab.b(y, x) - c.b;
          double dxy = (y - c.row) * (y - c.row) + (x - c.col) * (x - c.col);
          double d = dl * dl + da * da + db * db + spatial_weight * dxy;
          std::size_t p = static_cast<std::size_t>(y) * W + x;
          if (d < dist[p]) {
            dist[p] = d;
            label[p] = static_cast<int>(ci);
          }
        }
      }
    }

    // Windows can miss pixels once centers drift; sweep those against all
    // centers.
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        std::size_t p = static_cast<std::size_t>(y) * W + x;
        if (label[p] >= 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
          const Center& c = centers[ci];
          double dl = lab.L(y, x) - c.l;
          double da = lab.a(y, x) - c.a;
          double db = lab.b(y, x) - c.b;
          double dxy = (y - c.row) * (y - c.row) + (x - c.col) * (x - c.col);
          double d = dl * dl + da * da + db * db + spatial_weight * dxy;
          if (d < best) {
            best = d;
            label[p] = static_cast<int>(ci);
          }
        }
      }
    }

    std::vector<Center> next(centers.size());
    std::vector<int> counts(centers.size(), 0);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        int ci = label[static_cast<std::size_t>(y) * W + x];
        next[ci].l += lab.L(y, x);
        next[ci].a += lab.a(y, x);
        next[ci].b += lab.b(y, x);
        next[ci].row += y;
        next[ci].col += x;
        counts[ci] += 1;
      }
    }
    for (std::size_t ci = 0; ci < centers.size(); ++ci) {
      if (counts[ci] == 0) continue;  // keep stale center, pixels may return
      next[ci].l /= counts[ci];
      next[ci].a /= counts[ci];
      next[ci].b /= counts[ci];
      next[ci].row /= counts[ci];
      next[ci].col /= counts[ci];
      centers[ci] = next[ci];
    }
  }

  // Connected-component pass: each label keeps its largest 4-connected
  // fragment; every other fragment is merged into the adjacent resolved
  // region with nearest mean Lab color.
  std::vector<int> comp(static_cast<std::size_t>(npix), -1);
  std::vector<Component> components;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * W + x;
      if (comp[p] >= 0) continue;
      int id = static_cast<int>(components.size());
      Component cc;
      cc.slic_label = label[p];
      cc.first_pixel = static_cast<int>(p);
      std::queue<std::size_t> q;
      q.push(p);
      comp[p] = id;
      while (!q.empty()) {
        std::size_t cur = q.front();
        q.pop();
        int cy = static_cast<int>(cur) / W;
        int cx = static_cast<int>(cur) % W;
        cc.size += 1;
        cc.mean_l += lab.L(cy, cx);
        cc.mean_a += lab.a(cy, cx);
        cc.mean_b += lab.b(cy, cx);
        const int dydx[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        for (auto& d : dydx) {
          int nyp = cy + d[0], nxp = cx + d[1];
          if (nyp < 0 || nyp >= H || nxp < 0 || nxp >= W) continue;
          std::size_t np = static_cast<std::size_t>(nyp) * W + nxp;
          if (comp[np] < 0 && label[np] == cc.slic_label) {
            comp[np] = id;
            q.push(np);
          }
        }
      }
      cc.mean_l /= cc.size;
      cc.mean_a /= cc.size;
      cc.mean_b /= cc.size;
      components.push_back(cc);
    }
  }

  // Largest fragment per label wins; ties broken by component id.
  std::vector<int> keeper_of_label(centers.size(), -1);
  for (std::size_t i = 0; i < components.size(); ++i) {
    int sl = components[i].slic_label;
    int cur = keeper_of_label[sl];
    if (cur < 0 || components[i].size > components[cur].size) keeper_of_label[sl] =
        static_cast<int>(i);
  }
  std::vector<int> final_label_of_comp(components.size(), -1);
  for (std::size_t sl = 0; sl < centers.size(); ++sl) {
    if (keeper_of_label[sl] >= 0) final_label_of_comp[keeper_of_label[sl]] =
        static_cast<int>(sl);
  }

  bool any_orphan = true;
  while (any_orphan) {
    any_orphan = false;
    bool progress = false;
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (final_label_of_comp[i] >= 0) continue;
      any_orphan = true;
      // Scan this component's pixels for adjacent resolved components.
      int best_target = -1;
      double best_color = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < static_cast<std::size_t>(npix); ++p) {
        if (comp[p] != static_cast<int>(i)) continue;
        int cy = static_cast<int>(p) / W;
        int cx = static_cast<int>(p) % W;
        const int dydx[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
        for (auto& d : dydx) {
          int nyp = cy + d[0], nxp = cx + d[1];
          if (nyp < 0 || nyp >= H || nxp < 0 || nxp >= W) continue;
          int nc = comp[static_cast<std::size_t>(nyp) * W + nxp];
          if (nc == static_cast<int>(i) || final_label_of_comp[nc] < 0) continue;
          double dl = components[i].mean_l - components[nc].mean_l;
          double da = components[i].mean_a - components[nc].mean_a;
          double db = components[i].mean_b - components[nc].mean_b;
          double dc = dl * dl + da * da + db * db;
          if (dc < best_color ||
              (dc == best_color && final_label_of_comp[nc] < final_label_of_comp[best_target])) {
            best_color = dc;
            best_target = nc;
          }
        }
      }
      if (best_target >= 0) {
        final_label_of_comp[i] = final_label_of_comp[best_target];
        progress = true;
      }
    }
    if (any_orphan && !progress) {
      // Unreachable in practice: orphans always border a resolved region.
      for (std::size_t i = 0; i < components.size(); ++i)
        if (final_label_of_comp[i] < 0) final_label_of_comp[i] = 0;
      break;
    }
  }

  // Compact final labels to 0..count-1 preserving ascending label order.
  std::vector<int> remap(centers.size(), -1);
  std::vector<std::size_t> area(centers.size(), 0);
  for (std::size_t p = 0; p < static_cast<std::size_t>(npix); ++p)
    area[final_label_of_comp[comp[p]]] += 1;
  int next_id = 0;
  for (std::size_t sl = 0; sl < centers.size(); ++sl)
    if (area[sl] > 0) remap[sl] = next_id++;

  SuperpixelMap sp;
  sp.width = W;
  sp.height = H;
  sp.count = next_id;
  sp.labels.resize(static_cast<std::size_t>(npix));
  sp.sizes.assign(next_id, 0);
  sp.centroids = Matrix::Zero(next_id, 2);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * W + x;
      int id = remap[final_label_of_comp[comp[p]]];
      sp.labels[p] = id;
      sp.sizes[id] += 1;
      sp.centroids(id, 0) += y;
      sp.centroids(id, 1) += x;
    }
  }
  for (int id = 0; id < next_id; ++id) {
    sp.centroids(id, 0) /= sp.sizes[id];
    sp.centroids(id, 1) /= sp.sizes[id];
  }
  return sp;
}

}  // namespace gsn
