#pragma once

#include <cstdint>
#include <vector>

#include "gsn/image.hpp"
#include "gsn/types.hpp"

namespace gsn {

// Per-pixel over-segmentation. Labels are contiguous 0..count-1, every
// label non-empty and 4-connected as a pixel region.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> labels;  // row-major, width*height
  std::vector<int> sizes;   // per superpixel
  Matrix centroids;         // count x 2, (row, col)

  int label(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
};

// SLIC over CIELAB + spatial distance: grid-seeded cluster centers refined
// for 10 iterations, then a connectivity pass that merges orphan fragments
// into the adjacent region with the nearest mean color. The result count is
// close to target_count but not exact. Deterministic; `seed` is accepted for
// interface stability and not consumed.
//
// Requires 1 <= target_count <= width*height/4 and an image of at least
// 8x8 pixels; violations throw ConfigError.
SuperpixelMap slic_superpixels(const ImageBuffer& img, int target_count, double compactness,
                               std::uint64_t seed);

}  // namespace gsn
