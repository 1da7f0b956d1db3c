#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gsn/cli.hpp"
#include "gsn/dataset.hpp"
#include "gsn/image.hpp"
#include "gsn/superpixels.hpp"
#include "gsn/tensor_io.hpp"
#include "gsn/errors.hpp"
#include "gsn/pipeline.hpp"

using namespace gsn;

namespace {

std::filesystem::path scratch_dir() {
  auto p = std::filesystem::temp_directory_path() / "gsn_pipeline_tests";
  std::filesystem::create_directories(p);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small synthetic dataset shared by the end-to-end cases, generated once.
const std::string& tiny_dataset() {
  static std::string dir = [] {
    std::string d = (scratch_dir() / "tiny_data").string();
    gen_synth(d, 2, 8, 32, 99);
    return d;
  }();
  return dir;
}

PipelineConfig tiny_config() {
  PipelineConfig cfg;
  cfg.superpixels = 16;
  cfg.knn_k = 3;
  cfg.clusters = 2;
  cfg.atom_dim = 8;
  cfg.gcn_hidden = {12};
  cfg.dict_atoms = 6;
  cfg.dict_rounds = 3;
  cfg.max_epochs = 5;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("config defaults, round trip, unknown keys and bad values") {
  PipelineConfig def = parse_config("{}");
  CHECK(def.superpixels == 64);
  CHECK(def.learning_rate == doctest::Approx(0.001));
  CHECK(def.max_epochs == 100);

  PipelineConfig cfg = tiny_config();
  PipelineConfig back = parse_config(config_json(cfg));
  CHECK(config_json(back) == config_json(cfg));

  CHECK_THROWS_AS(parse_config("{\"supperpixels\": 3}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"superpixels\": \"lots\"}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"learning_rate\": 0}"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("gen_synth writes the promised files deterministically") {
  auto dir_a = (scratch_dir() / "synth_a").string();
  auto dir_b = (scratch_dir() / "synth_b").string();
  gen_synth(dir_a, 4, 3, 32, 123);
  gen_synth(dir_b, 4, 3, 32, 123);

  DatasetManifest m = load_dataset(dir_a);
  CHECK(m.entries.size() == 12);
  CHECK(m.class_names == std::vector<std::string>{"checker", "radial", "stripes_h", "stripes_v"});

  for (const auto& e : m.entries) {
    CHECK(read_file(dir_a + "/" + e.filename) == read_file(dir_b + "/" + e.filename));
  }
  CHECK(read_file(dir_a + "/labels.csv") == read_file(dir_b + "/labels.csv"));

  auto two = (scratch_dir() / "synth_two").string();
  gen_synth(two, 2, 2, 32, 5);
  DatasetManifest m2 = load_dataset(two);
  CHECK(m2.class_names == std::vector<std::string>{"stripes_h", "stripes_v"});
}

TEST_CASE("load_dataset rejects malformed inputs with line numbers") {
  auto dir = (scratch_dir() / "bad_data").string();
  std::filesystem::create_directories(dir);
  { std::ofstream(dir + "/a.png") << "stub"; }

  auto write_csv = [&](const std::string& text) {
    std::ofstream out(dir + "/labels.csv");
    out << text;
  };

  write_csv("wrong,header\n");
  CHECK_THROWS_AS(load_dataset(dir), IngestError);

  write_csv("filename,label\n");
  try {
    load_dataset(dir);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("no samples") != std::string::npos);
  }

  write_csv("filename,label\na.png,x\na.png,y\n");
  try {
    load_dataset(dir);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  write_csv("filename,label\nmissing.png,x\n");
  try {
    load_dataset(dir);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  write_csv("filename,label\na.png,beta\n");
  DatasetManifest m = load_dataset(dir);
  CHECK(m.entries.size() == 1);
  CHECK(m.class_names == std::vector<std::string>{"beta"});
}

TEST_CASE("dataset class ids are alphabetical") {
  auto dir = (scratch_dir() / "alpha_data").string();
  std::filesystem::create_directories(dir);
  { std::ofstream(dir + "/1.png") << "stub"; }
  { std::ofstream(dir + "/2.png") << "stub"; }
  {
    std::ofstream out(dir + "/labels.csv");
    out << "filename,label\n1.png,b\n2.png,a\n";
  }
  DatasetManifest m = load_dataset(dir);
  CHECK(m.class_names == std::vector<std::string>{"a", "b"});
  CHECK(m.entries[0].filename == "1.png");
  CHECK(m.entries[0].class_id == 1);
  CHECK(m.entries[1].class_id == 0);
}

TEST_CASE("count_parameters closed forms") {
  GsnModel model;
  model.config = tiny_config();
  SeededRng rng(1);

  // single linear layer Z=10 -> C=4 with bias: (10+1)*4 = 44
  model.classifier = make_classifier(10, 4, rng);
  model.encoder.layers.clear();
  CHECK(count_parameters(model) == 44);

  // two GCN layers 37 -> 64 -> 32 with biases: 37*64+64 + 64*32+32 = 4512
  AtomEncoder enc = make_atom_encoder({37, 64, 32}, PropagationMode::kRenormalized,
                                      Readout::kMean, rng);
  model.encoder = enc;
  model.classifier = SoftmaxClassifier{};
  model.classifier.weight = Matrix::Zero(0, 0);
  model.classifier.bias = Vector::Zero(0);
  CHECK(count_parameters(model) == 4512);
}

TEST_CASE("full pipeline: prepare, train, save, load, evaluate") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  require_trainable(manifest);
  PipelineConfig cfg = tiny_config();

  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  REQUIRE(images.size() == manifest.entries.size());
  for (const auto& img : images) {
    CHECK(static_cast<int>(img.subgraphs.size()) == cfg.clusters);
    CHECK(img.pooled.size() == 37);
  }

  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  CHECK(static_cast<int>(result.log.size()) == cfg.max_epochs);
  for (const auto& e : result.log) CHECK(e.lr > 0);

  // model round trip is byte exact
  auto model_a = (scratch_dir() / "model_a.gsnm").string();
  auto model_b = (scratch_dir() / "model_b.gsnm").string();
  save_model(model_a, result.model);
  GsnModel loaded = load_model(model_a);
  save_model(model_b, loaded);
  CHECK(read_file(model_a) == read_file(model_b));

  CHECK(loaded.class_names == manifest.class_names);
  CHECK(count_parameters(loaded) == count_parameters(result.model));

  Metrics metrics = evaluate_model(loaded, images);
  CHECK(metrics.total == static_cast<int>(images.size()));
  CHECK(metrics.accuracy >= 0.0);
  CHECK(metrics.accuracy <= 1.0);

  std::string js = metrics_json(metrics, loaded.class_names);
  CHECK(js.find("\"accuracy\"") != std::string::npos);
  std::string summary = model_summary(loaded);
  CHECK(summary.find("dict.D") != std::string::npos);
  CHECK(summary.find(std::to_string(count_parameters(loaded))) != std::string::npos);
}

TEST_CASE("training is deterministic: identical seeds give identical models") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  cfg.max_epochs = 3;

  std::vector<PreparedImage> images_a = prepare_dataset(manifest, cfg);
  std::vector<PreparedImage> images_b = prepare_dataset(manifest, cfg);
  TrainResult a = train_gsn(images_a, manifest.class_names, cfg);
  TrainResult b = train_gsn(images_b, manifest.class_names, cfg);

  auto path_a = (scratch_dir() / "det_a.gsnm").string();
  auto path_b = (scratch_dir() / "det_b.gsnm").string();
  save_model(path_a, a.model);
  save_model(path_b, b.model);
  CHECK(read_file(path_a) == read_file(path_b));
}

TEST_CASE("training loss decreases on a fixed tiny dataset with small LR") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  cfg.learning_rate = 1e-4;
  cfg.max_epochs = 20;
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  REQUIRE(result.log.size() == 20);
  CHECK(result.log.back().train_loss < result.log.front().train_loss);
}

TEST_CASE("zero-epoch training returns an initialized model with empty log") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  cfg.max_epochs = 0;
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  CHECK(result.log.empty());
  CHECK(result.model.dictionary.atom_count() == cfg.dict_atoms);
  auto path = (scratch_dir() / "zero_epoch.gsnm").string();
  save_model(path, result.model);  // still a complete, serializable model
  CHECK(load_model(path).class_names == manifest.class_names);
}

TEST_CASE("use_sparse_codes widens the feature vector and still trains") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  cfg.use_sparse_codes = true;
  cfg.max_epochs = 2;
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  CHECK(result.model.classifier.feature_dim() ==
        cfg.clusters * (cfg.atom_dim + cfg.dict_atoms));
  Metrics metrics = evaluate_model(result.model, images);
  CHECK(metrics.total == static_cast<int>(images.size()));
}

TEST_CASE("pipeline gradients match finite differences end to end") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  cfg.superpixels = 9;
  cfg.clusters = 2;
  cfg.atom_dim = 3;
  cfg.gcn_hidden = {4};
  cfg.max_epochs = 0;
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  TrainResult init = train_gsn(images, manifest.class_names, cfg);
  GsnModel model = init.model;

  const PreparedImage& img = images[0];
  PipelineTape tape = pipeline_forward(model, img, img.label);
  GradientBundle grads = pipeline_backward(model, tape);

  const double eps = 1e-5;
  auto loss_of = [&](const GsnModel& m) { return pipeline_forward(m, img, img.label).loss; };

  int checked = 0;
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    for (Index i = 0; i < model.encoder.layers[l].weight.rows(); i += 2) {
      for (Index j = 0; j < model.encoder.layers[l].weight.cols(); j += 2) {
        GsnModel plus = model, minus = model;
        plus.encoder.layers[l].weight(i, j) += eps;
        minus.encoder.layers[l].weight(i, j) -= eps;
        double fd = (loss_of(plus) - loss_of(minus)) / (2 * eps);
        double an = grads.encoder.weight[l](i, j);
        double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
        CHECK(std::abs(an - fd) / denom < 1e-4);
        ++checked;
      }
    }
  }
  for (Index i = 0; i < model.classifier.weight.rows(); i += 3) {
    for (Index j = 0; j < model.classifier.weight.cols(); ++j) {
      GsnModel plus = model, minus = model;
      plus.classifier.weight(i, j) += eps;
      minus.classifier.weight(i, j) -= eps;
      double fd = (loss_of(plus) - loss_of(minus)) / (2 * eps);
      double an = grads.classifier_weight(i, j);
      double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
      CHECK(std::abs(an - fd) / denom < 1e-4);
      ++checked;
    }
  }
  CHECK(checked > 20);
  CHECK_THROWS_AS(pipeline_backward(model, PipelineTape{}), StateError);
}

TEST_CASE("model loading rejects corrupt files") {
  auto path = (scratch_dir() / "not_a_model.gsnm").string();
  { std::ofstream(path, std::ios::binary) << "XXXXjunkjunkjunk"; }
  try {
    load_model(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("magic") != std::string::npos);
  }
  CHECK_THROWS_AS(load_model("/nonexistent/model.gsnm"), IoError);
}

TEST_CASE("cli surface: negative paths and exit codes") {
  std::ostringstream out, err;

  // missing config file -> exit 2
  int rc = run_cli({"train", "--config", "/nonexistent.json", "--data", tiny_dataset(), "--out",
                    (scratch_dir() / "x.gsnm").string()},
                   out, err);
  CHECK(rc == 2);
  CHECK(err.str().rfind("error:config:", 0) == 0);

  // unknown config key -> exit 2 naming the key
  auto bad_cfg = (scratch_dir() / "bad.json").string();
  { std::ofstream(bad_cfg) << "{\"no_such_knob\": 1}"; }
  err.str("");
  rc = run_cli({"train", "--config", bad_cfg, "--data", tiny_dataset(), "--out",
                (scratch_dir() / "x.gsnm").string()},
               out, err);
  CHECK(rc == 2);
  CHECK(err.str().find("no_such_knob") != std::string::npos);

  // corrupt model -> format error, exit 1
  auto junk = (scratch_dir() / "junk.gsnm").string();
  { std::ofstream(junk, std::ios::binary) << "bogus"; }
  err.str("");
  rc = run_cli({"inspect", "--model", junk}, out, err);
  CHECK(rc == 1);
  CHECK(err.str().rfind("error:format:", 0) == 0);

  // usage error -> exit 2
  err.str("");
  rc = run_cli({"frobnicate"}, out, err);
  CHECK(rc == 2);
}

TEST_CASE("cli end to end: train, inspect, eval, predict") {
  auto cfg_path = (scratch_dir() / "cli_cfg.json").string();
  { std::ofstream(cfg_path) << config_json(tiny_config()); }
  auto model_path = (scratch_dir() / "cli_model.gsnm").string();

  std::ostringstream out, err;
  int rc = run_cli({"train", "--config", cfg_path, "--data", tiny_dataset(), "--out", model_path},
                   out, err);
  REQUIRE(rc == 0);
  CHECK(std::filesystem::exists(model_path));
  CHECK(std::filesystem::exists(model_path + ".log.csv"));

  // log has <= max_epochs rows plus header
  std::ifstream log(model_path + ".log.csv");
  std::string line;
  int rows = 0;
  std::getline(log, line);
  CHECK(line == "epoch,lr,train_loss,val_loss,val_accuracy");
  while (std::getline(log, line))
    if (!line.empty()) ++rows;
  CHECK(rows <= tiny_config().max_epochs);

  out.str("");
  rc = run_cli({"inspect", "--model", model_path}, out, err);
  REQUIRE(rc == 0);
  CHECK(out.str().find("trainable parameters:") != std::string::npos);
  CHECK(out.str().find("stripes_h") != std::string::npos);

  out.str("");
  rc = run_cli({"eval", "--model", model_path, "--data", tiny_dataset()}, out, err);
  REQUIRE(rc == 0);
  CHECK(out.str().find("\"accuracy\"") != std::string::npos);

  out.str("");
  DatasetManifest manifest = load_dataset(tiny_dataset());
  rc = run_cli({"predict", "--model", model_path, "--image", manifest.path_of(0)}, out, err);
  REQUIRE(rc == 0);
  std::string prediction = out.str();
  CHECK(prediction.find('\t') != std::string::npos);

  // eval against a dataset with different classes is an error
  auto other = (scratch_dir() / "other_classes").string();
  gen_synth(other, 4, 1, 32, 55);
  err.str("");
  rc = run_cli({"eval", "--model", model_path, "--data", other}, out, err);
  CHECK(rc == 2);
  CHECK(err.str().rfind("error:config:", 0) == 0);
}

TEST_CASE("imported feature tensors drive the whole pipeline") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig probe = tiny_config();

  // Per-image GSNT files, [S, 6]: superpixel counts come from the same
  // segmentation settings the import run will use.
  auto feat_dir = (scratch_dir() / "imported_feats").string();
  std::filesystem::create_directories(feat_dir);
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    ImageBuffer img = load_image(manifest.path_of(i));
    SuperpixelMap sp = slic_superpixels(img, probe.superpixels, probe.compactness, probe.seed);
    std::vector<float> data(static_cast<std::size_t>(sp.count) * 6);
    SeededRng rng(1000 + i);
    for (auto& v : data) v = static_cast<float>(rng.uniform(-1, 1));
    std::string stem = manifest.entries[i].filename;
    stem.resize(stem.find_last_of('.'));
    tensor_write_file(feat_dir + "/" + stem + ".gsnt",
                      {static_cast<std::uint64_t>(sp.count), 6}, data);
  }

  PipelineConfig cfg = tiny_config();
  cfg.extractor = "import:" + feat_dir;
  cfg.max_epochs = 2;
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  CHECK(images.front().subgraphs.front().node_features.cols() == 6);
  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  CHECK(result.model.encoder.input_dim() == 6);

  // missing per-image tensor file is an io error
  std::filesystem::remove(feat_dir + "/" + manifest.entries[0].filename.substr(
                              0, manifest.entries[0].filename.find_last_of('.')) + ".gsnt");
  CHECK_THROWS_AS(prepare_dataset(manifest, cfg), IoError);
}

TEST_CASE("training rejects degenerate datasets") {
  DatasetManifest manifest = load_dataset(tiny_dataset());
  PipelineConfig cfg = tiny_config();
  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);

  // single class
  std::vector<PreparedImage> one_class = images;
  for (auto& img : one_class) img.label = 0;
  CHECK_THROWS_AS(train_gsn(one_class, {"only"}, cfg), ConfigError);

  // too few images
  std::vector<PreparedImage> single(images.begin(), images.begin() + 1);
  CHECK_THROWS_AS(train_gsn(single, manifest.class_names, cfg), ConfigError);

  // label outside the class list
  std::vector<PreparedImage> bad = images;
  bad[0].label = 99;
  CHECK_THROWS_AS(train_gsn(bad, manifest.class_names, cfg), ConfigError);
}
