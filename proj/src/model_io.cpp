#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gsn/errors.hpp"
#include "gsn/pipeline.hpp"
#include "gsn/tensor_io.hpp"

namespace gsn {
namespace {

using nlohmann::json;

constexpr char kModelMagic[4] = {'G', 'S', 'N', 'M'};
constexpr std::uint32_t kModelVersion = 1;

std::string mode_name(PropagationMode m) {
  return m == PropagationMode::kSpectral ? "spectral" : "renormalized";
}

PropagationMode mode_from(const std::string& s) {
  if (s == "spectral") return PropagationMode::kSpectral;
  if (s == "renormalized") return PropagationMode::kRenormalized;
  throw ConfigError("config: propagation must be 'spectral' or 'renormalized', got '" + s + "'");
}

std::string readout_name(Readout r) {
  switch (r) {
    case Readout::kMean: return "mean";
    case Readout::kSum: return "sum";
    case Readout::kMax: return "max";
  }
  return "mean";
}

Readout readout_from(const std::string& s) {
  if (s == "mean") return Readout::kMean;
  if (s == "sum") return Readout::kSum;
  if (s == "max") return Readout::kMax;
  throw ConfigError("config: readout must be 'mean', 'sum' or 'max', got '" + s + "'");
}

PipelineConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  PipelineConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    try {
      if (key == "superpixels") cfg.superpixels = v.get<int>();
      else if (key == "compactness") cfg.compactness = v.get<double>();
      else if (key == "knn_k") cfg.knn_k = v.get<int>();
      else if (key == "clusters") cfg.clusters = v.get<int>();
      else if (key == "atom_dim") cfg.atom_dim = v.get<int>();
      else if (key == "gcn_hidden") cfg.gcn_hidden = v.get<std::vector<int>>();
      else if (key == "propagation") cfg.propagation = mode_from(v.get<std::string>());
      else if (key == "readout") cfg.readout = readout_from(v.get<std::string>());
      else if (key == "dict_atoms") cfg.dict_atoms = v.get<int>();
      else if (key == "dict_rounds") cfg.dict_rounds = v.get<int>();
      else if (key == "lambda") cfg.lambda = v.get<double>();
      else if (key == "use_sparse_codes") cfg.use_sparse_codes = v.get<bool>();
      else if (key == "learning_rate") cfg.learning_rate = v.get<double>();
      else if (key == "max_epochs") cfg.max_epochs = v.get<int>();
      else if (key == "patience") cfg.patience = v.get<int>();
      else if (key == "val_split") cfg.val_split = v.get<double>();
      else if (key == "batch_size") cfg.batch_size = v.get<int>();
      else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
      else if (key == "extractor") cfg.extractor = v.get<std::string>();
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for key '" + key + "': " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  json j;
  j["superpixels"] = cfg.superpixels;
  j["compactness"] = cfg.compactness;
  j["knn_k"] = cfg.knn_k;
  j["clusters"] = cfg.clusters;
  j["atom_dim"] = cfg.atom_dim;
  j["gcn_hidden"] = cfg.gcn_hidden;
  j["propagation"] = mode_name(cfg.propagation);
  j["readout"] = readout_name(cfg.readout);
  j["dict_atoms"] = cfg.dict_atoms;
  j["dict_rounds"] = cfg.dict_rounds;
  j["lambda"] = cfg.lambda;
  j["use_sparse_codes"] = cfg.use_sparse_codes;
  j["learning_rate"] = cfg.learning_rate;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["val_split"] = cfg.val_split;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["extractor"] = cfg.extractor;
  return j;
}

Tensor vector_tensor(const Vector& v) {
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(v.size())};
  t.data.reserve(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) t.data.push_back(static_cast<float>(v(i)));
  return t;
}

Vector vector_from_tensor(const Tensor& t) {
  if (t.dims.size() != 1)
    throw FormatError("model: expected 1-D tensor, got " + std::to_string(t.dims.size()) +
                      " dims");
  Vector v(static_cast<Index>(t.dims[0]));
  for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<double>(t.data[static_cast<std::size_t>(i)]);
  return v;
}

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

std::vector<NamedTensor> model_tensors(const GsnModel& model) {
  std::vector<NamedTensor> out;
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    out.push_back({"gcn.layer" + std::to_string(l) + ".W",
                   tensor_from_matrix(model.encoder.layers[l].weight)});
    out.push_back({"gcn.layer" + std::to_string(l) + ".b",
                   vector_tensor(model.encoder.layers[l].bias)});
  }
  out.push_back({"clf.W", tensor_from_matrix(model.classifier.weight)});
  out.push_back({"clf.b", vector_tensor(model.classifier.bias)});
  out.push_back({"dict.D", tensor_from_matrix(model.dictionary.atoms)});
  out.push_back({"feat.mu", vector_tensor(model.feature_mean)});
  out.push_back({"feat.sigma", vector_tensor(model.feature_scale)});
  return out;
}

void put_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32le(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError("model: truncated " + what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64le(std::istream& in, const std::string& what) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (in.gcount() != 8) throw FormatError("model: truncated " + what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_json(const PipelineConfig& cfg) { return config_to_json(cfg).dump(); }

PipelineConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_model(const std::string& path, const GsnModel& model) {
  std::vector<NamedTensor> tensors = model_tensors(model);

  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& nt : tensors) {
    json entry;
    entry["name"] = nt.name;
    entry["offset"] = offset;
    entry["dims"] = nt.tensor.dims;
    dir.push_back(entry);
    offset += tensor_byte_size(nt.tensor.dims);
  }

  json header;
  header["version"] = kModelVersion;
  header["classes"] = model.class_names;
  header["config"] = config_to_json(model.config);
  header["dict"] = {{"zero_atom_replaced", model.dictionary.zero_atom_replaced}};
  header["tensors"] = dir;
  std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kModelMagic, 4);
  put_u32le(out, kModelVersion);
  put_u64le(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& nt : tensors) tensor_write(out, nt.tensor.dims, nt.tensor.data);
  if (!out) throw IoError("write failed for " + path);
}

GsnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path);

  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError("model " + path + ": bad magic (expected GSNM)");
  std::uint32_t version = get_u32le(in, "version");
  if (version != kModelVersion)
    throw FormatError("model " + path + ": unsupported version " + std::to_string(version));
  std::uint64_t header_len = get_u64le(in, "header length");
  if (header_len > (1ull << 30)) throw FormatError("model " + path + ": header length insane");

  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (static_cast<std::uint64_t>(in.gcount()) != header_len)
    throw FormatError("model " + path + ": truncated header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw FormatError("model " + path + ": corrupt header: " + e.what());
  }

  GsnModel model;
  try {
    model.format_version = header.at("version").get<std::uint32_t>();
    model.class_names = header.at("classes").get<std::vector<std::string>>();
    model.config = config_from_json(header.at("config"));
    model.dictionary.zero_atom_replaced = header.at("dict").at("zero_atom_replaced").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError("model " + path + ": bad header field: " + e.what());
  }

  std::uint64_t payload_start = 4 + 4 + 8 + header_len;
  std::map<std::string, Tensor> loaded;
  for (const auto& entry : header.at("tensors")) {
    std::string name = entry.at("name").get<std::string>();
    std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    in.seekg(static_cast<std::streamoff>(payload_start + offset));
    if (!in) throw FormatError("model " + path + ": bad tensor offset for " + name);
    loaded[name] = tensor_read(in);
  }

  auto take = [&](const std::string& name) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw FormatError("model " + path + ": missing tensor " + name);
    return it->second;
  };

  const PipelineConfig& cfg = model.config;
  std::size_t layer_count = cfg.gcn_hidden.size() + 1;
  for (std::size_t l = 0; l < layer_count; ++l) {
    GcnLayer layer;
    layer.weight = matrix_from_tensor(take("gcn.layer" + std::to_string(l) + ".W"));
    layer.bias = vector_from_tensor(take("gcn.layer" + std::to_string(l) + ".b"));
    layer.mode = cfg.propagation;
    layer.activation = l + 1 == layer_count ? Activation::kIdentity : Activation::kRelu;
    model.encoder.layers.push_back(std::move(layer));
  }
  model.encoder.readout = cfg.readout;
  model.classifier.weight = matrix_from_tensor(take("clf.W"));
  model.classifier.bias = vector_from_tensor(take("clf.b"));
  model.dictionary.atoms = matrix_from_tensor(take("dict.D"));
  model.feature_mean = vector_from_tensor(take("feat.mu"));
  model.feature_scale = vector_from_tensor(take("feat.sigma"));

  // Header config and tensor shapes must agree.
  for (std::size_t l = 0; l < layer_count; ++l) {
    Index want_out = l < cfg.gcn_hidden.size() ? cfg.gcn_hidden[l] : cfg.atom_dim;
    if (model.encoder.layers[l].weight.cols() != want_out ||
        model.encoder.layers[l].bias.size() != want_out)
      throw FormatError("model " + path + ": gcn.layer" + std::to_string(l) +
                        " shape disagrees with config");
    if (l > 0 && model.encoder.layers[l].weight.rows() !=
                     model.encoder.layers[l - 1].weight.cols())
      throw FormatError("model " + path + ": gcn layer width chain broken at layer " +
                        std::to_string(l));
  }
  if (model.classifier.weight.rows() != cfg.feature_vector_dim() ||
      model.classifier.weight.cols() != static_cast<Index>(model.class_names.size()) ||
      model.classifier.bias.size() != static_cast<Index>(model.class_names.size()))
    throw FormatError("model " + path + ": classifier shape disagrees with config");
  if (model.dictionary.atoms.rows() != cfg.atom_dim ||
      model.dictionary.atoms.cols() != cfg.dict_atoms)
    throw FormatError("model " + path + ": dictionary shape disagrees with config");
  if (model.feature_mean.size() != cfg.feature_vector_dim() ||
      model.feature_scale.size() != cfg.feature_vector_dim())
    throw FormatError("model " + path + ": standardization shape disagrees with config");
  return model;
}

long count_parameters(const GsnModel& model) {
  long total = 0;
  for (const auto& layer : model.encoder.layers)
    total += static_cast<long>(layer.weight.size()) + static_cast<long>(layer.bias.size());
  total += static_cast<long>(model.classifier.weight.size()) +
           static_cast<long>(model.classifier.bias.size());
  return total;
}

std::string model_summary(const GsnModel& model) {
  std::ostringstream out;
  out << "GSN model (format v" << model.format_version << ")\n";
  out << "classes:";
  for (const auto& c : model.class_names) out << " " << c;
  out << "\n";
  out << "config: " << config_json(model.config) << "\n";
  out << "tensors:\n";
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    const auto& layer = model.encoder.layers[l];
    out << "  gcn.layer" << l << ".W  " << shape_str(layer.weight) << "\n";
    out << "  gcn.layer" << l << ".b  " << layer.bias.size() << "\n";
  }
  out << "  clf.W  " << shape_str(model.classifier.weight) << "\n";
  out << "  clf.b  " << model.classifier.bias.size() << "\n";
  out << "  dict.D  " << shape_str(model.dictionary.atoms) << " (frozen, not counted)\n";
  out << "  feat.mu  " << model.feature_mean.size() << " (frozen, not counted)\n";
  out << "  feat.sigma  " << model.feature_scale.size() << " (frozen, not counted)\n";
  out << "trainable parameters: " << count_parameters(model) << "\n";
  return out.str();
}

std::string metrics_json(const Metrics& metrics, const std::vector<std::string>& class_names) {
  json j;
  j["accuracy"] = metrics.accuracy;
  j["total"] = metrics.total;
  j["classes"] = class_names;
  json confusion = json::array();
  for (Index r = 0; r < metrics.confusion.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < metrics.confusion.cols(); ++c) row.push_back(metrics.confusion(r, c));
    confusion.push_back(row);
  }
  j["confusion"] = confusion;
  json per_class = json::array();
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    json e;
    e["name"] = class_names[c];
    e["precision"] = metrics.precision[c];
    e["recall"] = metrics.recall[c];
    e["support"] = metrics.confusion.row(static_cast<Index>(c)).sum();
    per_class.push_back(e);
  }
  j["per_class"] = per_class;
  return j.dump(2);
}

std::string metrics_table(const Metrics& metrics, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "accuracy %.4f (%d samples)\n", metrics.accuracy,
                metrics.total);
  out << line;
  out << "class                precision   recall  support\n";
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    std::snprintf(line, sizeof(line), "%-20s %9.4f %8.4f %8d\n", class_names[c].c_str(),
                  metrics.precision[c], metrics.recall[c],
                  metrics.confusion.row(static_cast<Index>(c)).sum());
    out << line;
  }
  return out.str();
}

}  // namespace gsn
