#include "gsn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "gsn/errors.hpp"
#include "gsn/image.hpp"
#include "gsn/numerics.hpp"

namespace gsn {

DatasetManifest load_dataset(const std::string& root) {
  const std::string csv_path = root + "/labels.csv";
  std::ifstream in(csv_path);
  if (!in) throw IngestError("cannot open " + csv_path);

  DatasetManifest manifest;
  manifest.root = root;

  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  std::set<std::string> classes;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "filename,label")
        throw IngestError(csv_path + " line 1: expected header 'filename,label', got '" + line +
                          "'");
      continue;
    }
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw IngestError(csv_path + " line " + std::to_string(line_no) +
                        ": expected exactly one comma");
    std::string filename = line.substr(0, comma);
    std::string label = line.substr(comma + 1);
    if (filename.empty() || label.empty())
      throw IngestError(csv_path + " line " + std::to_string(line_no) +
                        ": empty filename or label");
    if (!seen.insert(filename).second)
      throw IngestError(csv_path + " line " + std::to_string(line_no) + ": duplicate filename '" +
                        filename + "'");
    if (!std::filesystem::exists(root + "/" + filename))
      throw IngestError(csv_path + " line " + std::to_string(line_no) + ": file not found: " +
                        root + "/" + filename);
    manifest.entries.push_back({filename, label, 0});
    classes.insert(label);
  }
  if (manifest.entries.empty()) throw IngestError(csv_path + ": no samples");

  manifest.class_names.assign(classes.begin(), classes.end());  // set is sorted
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < manifest.class_names.size(); ++i)
    ids[manifest.class_names[i]] = static_cast<int>(i);
  for (auto& e : manifest.entries) e.class_id = ids[e.class_name];
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.filename < b.filename; });
  return manifest;
}

void require_trainable(const DatasetManifest& manifest) {
  if (manifest.class_names.size() < 2)
    throw ConfigError("training needs at least 2 classes, got " +
                      std::to_string(manifest.class_names.size()));
  std::vector<int> counts(manifest.class_names.size(), 0);
  for (const auto& e : manifest.entries) counts[static_cast<std::size_t>(e.class_id)] += 1;
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0)
      throw ConfigError("class '" + manifest.class_names[c] + "' has no samples");
}

namespace {

struct Palette {
  double hi[3];
  double lo[3];
};

Palette draw_palette(SeededRng& rng) {
  Palette p;
  for (int c = 0; c < 3; ++c) p.hi[c] = rng.uniform(0.55, 0.95);
  for (int c = 0; c < 3; ++c) p.lo[c] = rng.uniform(0.05, 0.45);
  return p;
}

}  // namespace

void gen_synth(const std::string& out_dir, int class_count, int per_class, int image_size,
               std::uint64_t seed) {
  static const char* kClassNames[4] = {"stripes_h", "stripes_v", "checker", "radial"};
  if (class_count < 2 || class_count > 4)
    throw ConfigError("gen_synth: class_count must be in [2, 4], got " +
                      std::to_string(class_count));
  if (per_class < 1) throw ConfigError("gen_synth: per_class must be >= 1");
  if (image_size < 16) throw ConfigError("gen_synth: image_size must be >= 16");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("gen_synth: cannot create " + out_dir + ": " + ec.message());

  std::ofstream csv(out_dir + "/labels.csv");
  if (!csv) throw IoError("gen_synth: cannot write " + out_dir + "/labels.csv");
  csv << "filename,label\n";

  SeededRng root(seed);
  const int sz = image_size;
  for (int cls = 0; cls < class_count; ++cls) {
    for (int i = 0; i < per_class; ++i) {
      SeededRng rng = root.derive(static_cast<std::uint64_t>(cls) * 1000003ull +
                                  static_cast<std::uint64_t>(i));
      Palette pal = draw_palette(rng);
      double period = rng.uniform(6.0, 16.0);
      double phase_x = rng.uniform(0.0, period);
      double phase_y = rng.uniform(0.0, period);
      double cx = sz / 2.0 + rng.uniform(-sz / 8.0, sz / 8.0);
      double cy = sz / 2.0 + rng.uniform(-sz / 8.0, sz / 8.0);
      double rmax = 0.75 * sz;

      ImageBuffer img;
      img.width = sz;
      img.height = sz;
      for (auto& ch : img.channels) ch = Matrix(sz, sz);

      for (int y = 0; y < sz; ++y) {
        for (int x = 0; x < sz; ++x) {
          double mix = 0.0;  // 0 -> hi color, 1 -> lo color
          switch (cls) {
            case 0:  // horizontal stripes
              mix = std::fmod(y + phase_y, period) < period / 2 ? 0.0 : 1.0;
              break;
            case 1:  // vertical stripes
              mix = std::fmod(x + phase_x, period) < period / 2 ? 0.0 : 1.0;
              break;
            case 2: {  // checkerboard
              long bx = static_cast<long>(std::floor((x + phase_x) / period));
              long by = static_cast<long>(std::floor((y + phase_y) / period));
              mix = ((bx + by) & 1) == 0 ? 0.0 : 1.0;
              break;
            }
            case 3: {  // radial gradient
              double r = std::hypot(x - cx, y - cy);
              mix = std::clamp(r / rmax, 0.0, 1.0);
              break;
            }
          }
          for (int c = 0; c < 3; ++c) {
            double v = pal.hi[c] * (1.0 - mix) + pal.lo[c] * mix;
            v += rng.uniform(-0.05, 0.05);
            img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
          }
        }
      }

      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04d.png", kClassNames[cls], i);
      write_png(out_dir + "/" + name, img);
      csv << name << "," << kClassNames[cls] << "\n";
    }
  }
  if (!csv) throw IoError("gen_synth: write failed for labels.csv");
}

}  // namespace gsn
