#pragma once

#include <array>
#include <string>

#include "gsn/types.hpp"

namespace gsn {

// Planar RGB image, values in [0,1]. channels[c] is height x width with
// (row, col) indexing.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::array<Matrix, 3> channels;

  double& at(int row, int col, int c) { return channels[static_cast<std::size_t>(c)](row, col); }
  double at(int row, int col, int c) const {
    return channels[static_cast<std::size_t>(c)](row, col);
  }
};

// CIELAB planes of an image (D65 white point), used for superpixel distances.
struct LabImage {
  Matrix L, a, b;
};

// Loads PNG (8-bit RGB or grayscale, non-interlaced) or binary PPM (P6).
// Grayscale is replicated into all three channels. Unsupported or corrupt
// content throws FormatError; unreadable paths throw IoError.
ImageBuffer load_image(const std::string& path);

// Writes an 8-bit RGB PNG. Values are clamped to [0,1] before quantization.
void write_png(const std::string& path, const ImageBuffer& img);

LabImage rgb_to_lab(const ImageBuffer& img);

}  // namespace gsn
