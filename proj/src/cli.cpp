#include "gsn/cli.hpp"

#include <CLI11.hpp>
#include <cstdint>

#include "gsn/dataset.hpp"
#include "gsn/errors.hpp"
#include "gsn/image.hpp"
#include "gsn/pipeline.hpp"

namespace gsn {
namespace {

// Eval and predict must see the class layout the model was trained with.
void check_classes(const GsnModel& model, const DatasetManifest& manifest) {
  if (model.class_names != manifest.class_names) {
    std::string got;
    for (const auto& c : manifest.class_names) got += (got.empty() ? "" : ",") + c;
    std::string want;
    for (const auto& c : model.class_names) want += (want.empty() ? "" : ",") + c;
    throw ConfigError("dataset classes [" + got + "] do not match model classes [" + want + "]");
  }
}

int cmd_gen_synth(const std::string& out_dir, int classes, int per_class, int size,
                  std::uint64_t seed, std::ostream& out) {
  gen_synth(out_dir, classes, per_class, size, seed);
  out << "wrote " << classes * per_class << " images to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& model_path, std::string log_path, std::ostream& out) {
  PipelineConfig cfg = load_config_file(config_path);
  DatasetManifest manifest = load_dataset(data_dir);
  require_trainable(manifest);

  std::vector<PreparedImage> images = prepare_dataset(manifest, cfg);
  TrainResult result = train_gsn(images, manifest.class_names, cfg);
  save_model(model_path, result.model);
  if (log_path.empty()) log_path = model_path + ".log.csv";
  write_train_log_csv(log_path, result.log);

  out << "trained on " << images.size() << " images, " << result.log.size() << " epochs\n";
  if (!result.log.empty()) {
    const EpochLog& last = result.log.back();
    out << "final val_loss " << last.val_loss << ", val_accuracy " << last.val_accuracy << "\n";
  }
  out << "model written to " << model_path << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, std::ostream& out) {
  GsnModel model = load_model(model_path);
  DatasetManifest manifest = load_dataset(data_dir);
  check_classes(model, manifest);
  std::vector<PreparedImage> images = prepare_dataset(manifest, model.config);
  Metrics metrics = evaluate_model(model, images);
  out << metrics_json(metrics, model.class_names) << "\n\n";
  out << metrics_table(metrics, model.class_names);
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& image_path, std::ostream& out) {
  GsnModel model = load_model(model_path);
  ImageBuffer img = load_image(image_path);
  PreparedImage prepared = prepare_image(img, model.config);
  Vector f = feature_vector(model, prepared);
  auto [cls, probs] = predict(model.classifier, f);
  out << model.class_names[static_cast<std::size_t>(cls)] << "\t" << probs(cls) << "\n";
  return 0;
}

int cmd_inspect(const std::string& model_path, std::ostream& out) {
  GsnModel model = load_model(model_path);
  out << model_summary(model);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph Sub-Graph Network image classifier"};
  app.require_subcommand(1);

  std::string out_dir, config_path, data_dir, model_path, image_path, log_path;
  int classes = 4, per_class = 50, size = 64;
  std::uint64_t seed = 7;

  CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic texture dataset");
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--classes", classes, "number of texture classes (2-4)");
  gen->add_option("--per-class", per_class, "images per class");
  gen->add_option("--size", size, "image side length");
  gen->add_option("--seed", seed, "generator seed");

  CLI::App* train = app.add_subcommand("train", "train a model on a labeled dataset");
  train->add_option("--config", config_path, "pipeline config JSON")->required();
  train->add_option("--data", data_dir, "dataset directory with labels.csv")->required();
  train->add_option("--out", model_path, "output model path")->required();
  train->add_option("--log", log_path, "training log CSV path (default <out>.log.csv)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a model, print metrics JSON");
  eval->add_option("--model", model_path, "model path")->required();
  eval->add_option("--data", data_dir, "dataset directory with labels.csv")->required();

  CLI::App* pred = app.add_subcommand("predict", "classify one image");
  pred->add_option("--model", model_path, "model path")->required();
  pred->add_option("--image", image_path, "image path (PNG or PPM)")->required();

  CLI::App* inspect = app.add_subcommand("inspect", "print model summary");
  inspect->add_option("--model", model_path, "model path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // --help lands here.
      out << app.help();
      return 0;
    }
    err << "error:usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(out_dir, classes, per_class, size, seed, out);
    if (train->parsed()) return cmd_train(config_path, data_dir, model_path, log_path, out);
    if (eval->parsed()) return cmd_eval(model_path, data_dir, out);
    if (pred->parsed()) return cmd_predict(model_path, image_path, out);
    if (inspect->parsed()) return cmd_inspect(model_path, out);
  } catch (const Error& e) {
    err << "error:" << e.category() << ": " << e.what() << "\n";
    return (e.category() == "config" || e.category() == "ingest") ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error:internal: " << e.what() << "\n";
    return 1;
  }
  err << "error:usage: no subcommand\n";
  return 2;
}

}  // namespace gsn
