#include "gsn/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "gsn/errors.hpp"

namespace gsn {
namespace {

const unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
         std::uint32_t(p[3]);
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out.push_back(static_cast<unsigned char>(v & 0xff));
}

void append_chunk(std::vector<unsigned char>& out, const char type[4],
                  const std::vector<unsigned char>& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
    throw FormatError(path + ": not a PNG file");

  std::size_t pos = 8;
  std::uint32_t width = 0, height = 0;
  int color_type = -1;
  std::vector<unsigned char> idat;
  bool saw_end = false;

  while (pos + 8 <= bytes.size() && !saw_end) {
    std::uint32_t len = be32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw FormatError(path + ": truncated PNG chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const unsigned char* data = bytes.data() + pos + 8;

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) throw FormatError(path + ": bad IHDR length");
      width = be32(data);
      height = be32(data + 4);
      int bit_depth = data[8];
      color_type = data[9];
      int interlace = data[12];
      if (bit_depth != 8)
        throw FormatError(path + ": only 8-bit PNG supported, got depth " +
                          std::to_string(bit_depth));
      if (color_type != 0 && color_type != 2)
        throw FormatError(path + ": only grayscale/RGB PNG supported, got color type " +
                          std::to_string(color_type));
      if (interlace != 0) throw FormatError(path + ": interlaced PNG not supported");
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), data, data + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      saw_end = true;
    }
    pos += 12 + len;
  }
  if (width == 0 || height == 0 || color_type < 0) throw FormatError(path + ": missing IHDR");
  if (!saw_end) throw FormatError(path + ": missing IEND");

  int bpp = color_type == 2 ? 3 : 1;
  std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(bpp);
  std::vector<unsigned char> raw((stride + 1) * height);
  uLongf raw_len = static_cast<uLongf>(raw.size());
  int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
  if (rc != Z_OK || raw_len != raw.size()) throw FormatError(path + ": corrupt PNG image data");

  // Undo per-scanline filters in place.
  std::vector<unsigned char> pixels(stride * height);
  for (std::uint32_t y = 0; y < height; ++y) {
    unsigned char filter = raw[y * (stride + 1)];
    const unsigned char* src = raw.data() + y * (stride + 1) + 1;
    unsigned char* dst = pixels.data() + y * stride;
    const unsigned char* up = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
    for (std::size_t x = 0; x < stride; ++x) {
      int a = x >= static_cast<std::size_t>(bpp) ? dst[x - bpp] : 0;
      int b = up ? up[x] : 0;
      int c = (up && x >= static_cast<std::size_t>(bpp)) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw FormatError(path + ": unknown PNG filter " + std::to_string(filter));
      }
      dst[x] = static_cast<unsigned char>(v & 0xff);
    }
  }

  ImageBuffer img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  for (auto& ch : img.channels) ch = Matrix(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const unsigned char* px = pixels.data() + static_cast<std::size_t>(y) * stride +
                                static_cast<std::size_t>(x) * bpp;
      if (bpp == 3) {
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = px[c] / 255.0;
      } else {
        double v = px[0] / 255.0;
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = v;
      }
    }
  }
  return img;
}

ImageBuffer decode_ppm(const std::vector<unsigned char>& bytes, const std::string& path) {
  // Header: "P6" <ws> width <ws> height <ws> maxval, one whitespace byte,
  // then binary RGB triplets. '#' comments allowed between tokens.
  std::size_t pos = 2;
  auto next_int = [&](const char* what) -> long {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
      throw FormatError(path + ": bad PPM header, expected " + std::string(what));
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000'000) throw FormatError(path + ": PPM header value overflow");
      ++pos;
    }
    return v;
  };

  long width = next_int("width");
  long height = next_int("height");
  long maxval = next_int("maxval");
  if (width <= 0 || height <= 0) throw FormatError(path + ": invalid PPM dimensions");
  if (maxval <= 0 || maxval > 255)
    throw FormatError(path + ": PPM maxval " + std::to_string(maxval) + " not supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw FormatError(path + ": missing whitespace after PPM maxval");
  ++pos;

  std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - pos < need) throw FormatError(path + ": truncated PPM payload");

  ImageBuffer img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  for (auto& ch : img.channels) ch = Matrix(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bytes[pos++] / static_cast<double>(maxval);
  return img;
}

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double eps = 216.0 / 24389.0;
  constexpr double kappa = 24389.0 / 27.0;
  return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

}  // namespace

ImageBuffer load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
    return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
  throw FormatError(path + ": unsupported image format (need PNG or PPM P6)");
}

void write_png(const std::string& path, const ImageBuffer& img) {
  if (img.width <= 0 || img.height <= 0) throw DomainError("write_png: empty image");
  std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  std::vector<unsigned char> raw((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw[y * (stride + 1)] = 0;  // filter None
    unsigned char* dst = raw.data() + y * (stride + 1) + 1;
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
        dst[x * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }

  uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_cap);
  int rc = compress2(comp.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()), 6);
  if (rc != Z_OK) throw IoError("write_png: compression failed");
  comp.resize(comp_cap);

  std::vector<unsigned char> out(kPngSignature, kPngSignature + 8);
  std::vector<unsigned char> ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path);
}

LabImage rgb_to_lab(const ImageBuffer& img) {
  LabImage lab;
  lab.L = Matrix(img.height, img.width);
  lab.a = Matrix(img.height, img.width);
  lab.b = Matrix(img.height, img.width);
  // D65 reference white.
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double r = srgb_to_linear(img.at(y, x, 0));
      double g = srgb_to_linear(img.at(y, x, 1));
      double b = srgb_to_linear(img.at(y, x, 2));
      double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      double fx = lab_f(X / xn), fy = lab_f(Y / yn), fz = lab_f(Z / zn);
      lab.L(y, x) = 116.0 * fy - 16.0;
      lab.a(y, x) = 500.0 * (fx - fy);
      lab.b(y, x) = 200.0 * (fy - fz);
    }
  }
  return lab;
}

}  // namespace gsn
