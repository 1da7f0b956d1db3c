#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gsn {

struct DatasetEntry {
  std::string filename;  // relative to root
  std::string class_name;
  int class_id = 0;
};

// Directory of images plus labels.csv ("filename,label"). Entries are
// sorted by filename, class ids assigned alphabetically by class name.
struct DatasetManifest {
  std::string root;
  std::vector<DatasetEntry> entries;
  std::vector<std::string> class_names;

  std::string path_of(std::size_t i) const { return root + "/" + entries[i].filename; }
};

// Throws IngestError naming the offending line on malformed rows, duplicate
// filenames, missing referenced files, or an empty sample list.
DatasetManifest load_dataset(const std::string& root);

// Train-time precondition: at least 2 classes, each with at least 1 sample.
void require_trainable(const DatasetManifest& manifest);

// Writes `per_class` PNG images per texture class plus labels.csv. Classes
// in order: stripes_h, stripes_v, checker, radial; class_count in [2,4]
// selects a prefix of that list. Per-image phase/color jitter and 5%
// additive uniform noise are seeded; equal seeds give byte-identical output.
void gen_synth(const std::string& out_dir, int class_count, int per_class, int image_size,
               std::uint64_t seed);

}  // namespace gsn
