#include "gsn/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "gsn/errors.hpp"
#include "gsn/imagegraph.hpp"
#include "gsn/superpixels.hpp"
#include "gsn/util.hpp"

namespace gsn {

void PipelineConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  need(superpixels >= 1, "superpixels must be >= 1");
  need(compactness > 0.0, "compactness must be positive");
  need(knn_k >= 1, "knn_k must be >= 1");
  need(clusters >= 1, "clusters must be >= 1");
  need(atom_dim >= 1, "atom_dim must be >= 1");
  for (int w : gcn_hidden) need(w >= 1, "gcn_hidden entries must be >= 1");
  need(dict_atoms >= 1, "dict_atoms must be >= 1");
  need(dict_rounds >= 0, "dict_rounds must be >= 0");
  need(lambda >= 0.0, "lambda must be nonnegative");
  need(learning_rate > 0.0, "learning_rate must be positive");
  need(max_epochs >= 0, "max_epochs must be >= 0");
  need(patience >= 1, "patience must be >= 1");
  need(val_split > 0.0 && val_split < 1.0, "val_split must be in (0, 1)");
  need(batch_size >= 0, "batch_size must be >= 0");
  need(extractor == "handcrafted" || extractor.rfind("import:", 0) == 0,
       "extractor must be 'handcrafted' or 'import:<dir>'");
}

PreparedImage prepare_image(const ImageBuffer& img, const PipelineConfig& cfg,
                            const std::string& import_path) {
  SuperpixelMap sp = slic_superpixels(img, cfg.superpixels, cfg.compactness, cfg.seed);

  std::string extractor = cfg.extractor;
  if (extractor.rfind("import:", 0) == 0) {
    if (import_path.empty())
      throw ConfigError("imported features require a per-image tensor path");
    extractor = "import:" + import_path;
  }
  Matrix features = extract_features(img, sp, extractor);

  // Clustering needs at least as many nodes as clusters; graphs need k < S.
  if (sp.count < 2)
    throw ConfigError("image produced a single superpixel; raise the superpixel target");
  int k = std::min(cfg.knn_k, sp.count - 1);
  Graph g = build_graph(features, sp, k);

  if (sp.count < cfg.clusters)
    throw ConfigError("image produced " + std::to_string(sp.count) +
                      " superpixels but config wants " + std::to_string(cfg.clusters) +
                      " clusters");
  ClusterPartition part =
      kmeans(g.node_features, cfg.clusters, SeededRng(cfg.seed).derive(1).seed());
  part = canonicalize(part, g.node_positions);

  PreparedImage out;
  out.subgraphs = extract_subgraphs(g, part, cfg.propagation == PropagationMode::kSpectral);
  out.pooled = g.node_features.colwise().mean().transpose();
  return out;
}

std::vector<PreparedImage> prepare_dataset(const DatasetManifest& manifest,
                                           const PipelineConfig& cfg) {
  std::vector<PreparedImage> out(manifest.entries.size());
  std::string import_dir;
  if (cfg.extractor.rfind("import:", 0) == 0) import_dir = cfg.extractor.substr(7);

  parallel_for(manifest.entries.size(), [&](std::size_t i) {
    ImageBuffer img = load_image(manifest.path_of(i));
    std::string import_path;
    if (!import_dir.empty()) {
      std::string stem = manifest.entries[i].filename;
      std::size_t dot = stem.find_last_of('.');
      if (dot != std::string::npos) stem.resize(dot);
      import_path = import_dir + "/" + stem + ".gsnt";
    }
    out[i] = prepare_image(img, cfg, import_path);
    out[i].label = manifest.entries[i].class_id;
  });
  return out;
}

std::vector<Vector> image_atoms(const AtomEncoder& enc, const PreparedImage& img) {
  std::vector<Vector> atoms;
  atoms.reserve(img.subgraphs.size());
  for (const auto& sg : img.subgraphs) atoms.push_back(encode_atom(enc, sg));
  return atoms;
}

void GradientBundle::add(const GradientBundle& other) {
  encoder.add(other.encoder);
  classifier_weight += other.classifier_weight;
  classifier_bias += other.classifier_bias;
}

void GradientBundle::scale(double s) {
  encoder.scale(s);
  classifier_weight *= s;
  classifier_bias *= s;
}

namespace {

GradientBundle zero_bundle(const GsnModel& model) {
  GradientBundle g;
  g.encoder = zero_gradients(model.encoder);
  g.classifier_weight = Matrix::Zero(model.classifier.weight.rows(), model.classifier.weight.cols());
  g.classifier_bias = Vector::Zero(model.classifier.bias.size());
  return g;
}

std::vector<Vector> sparse_code_blocks(const GsnModel& model, const std::vector<Vector>& atoms) {
  std::vector<Vector> codes;
  codes.reserve(atoms.size());
  for (const auto& a : atoms)
    codes.push_back(sparse_code(model.dictionary, a, model.config.lambda).coefficients);
  return codes;
}

}  // namespace

namespace {

Vector standardize(const GsnModel& model, const Vector& raw) {
  if (model.feature_mean.size() != raw.size() || model.feature_scale.size() != raw.size())
    throw StateError("model has no feature standardization for length " +
                     std::to_string(raw.size()));
  return (raw - model.feature_mean).cwiseQuotient(model.feature_scale);
}

}  // namespace

PipelineTape pipeline_forward(const GsnModel& model, const PreparedImage& img, int label) {
  if (static_cast<int>(img.subgraphs.size()) != model.config.clusters)
    throw ShapeError("pipeline_forward: image has " + std::to_string(img.subgraphs.size()) +
                     " clusters, config wants " + std::to_string(model.config.clusters));
  PipelineTape tape;
  std::vector<Vector> atoms;
  atoms.reserve(img.subgraphs.size());
  for (const auto& sg : img.subgraphs) {
    tape.atom_traces.push_back(encode_atom_traced(model.encoder, sg));
    atoms.push_back(tape.atom_traces.back().atom);
  }
  if (model.config.use_sparse_codes) {
    std::vector<Vector> codes = sparse_code_blocks(model, atoms);
    tape.features = standardize(model, concat_features(atoms, &codes));
  } else {
    tape.features = standardize(model, concat_features(atoms, nullptr));
  }
  tape.probabilities = softmax_probabilities(model.classifier, tape.features);
  tape.label = label;
  tape.loss = cross_entropy(tape.probabilities, label);
  tape.recorded = true;
  return tape;
}

GradientBundle pipeline_backward(const GsnModel& model, const PipelineTape& tape) {
  if (!tape.recorded) throw StateError("pipeline_backward: no forward pass recorded");

  GradientBundle grads = zero_bundle(model);

  // d loss / d logits = p - onehot(label)
  Vector dlogits = tape.probabilities;
  dlogits(tape.label) -= 1.0;

  grads.classifier_weight = tape.features * dlogits.transpose();
  grads.classifier_bias = dlogits;

  // d loss / d raw feature passes through the standardization scale.
  Vector dfeatures =
      (model.classifier.weight * dlogits).cwiseQuotient(model.feature_scale);

  // Atom blocks occupy the first clusters*atom_dim entries; code blocks (if
  // any) follow and receive no gradient.
  const Index d = model.encoder.layers.back().weight.cols();
  for (std::size_t c = 0; c < tape.atom_traces.size(); ++c) {
    Vector datom = dfeatures.segment(static_cast<Index>(c) * d, d);
    atom_backward(model.encoder, tape.atom_traces[c], datom, grads.encoder);
  }
  return grads;
}

Vector feature_vector(const GsnModel& model, const PreparedImage& img) {
  if (static_cast<int>(img.subgraphs.size()) != model.config.clusters)
    throw ShapeError("feature_vector: image has " + std::to_string(img.subgraphs.size()) +
                     " clusters, config wants " + std::to_string(model.config.clusters));
  std::vector<Vector> atoms = image_atoms(model.encoder, img);
  if (model.config.use_sparse_codes) {
    std::vector<Vector> codes = sparse_code_blocks(model, atoms);
    return standardize(model, concat_features(atoms, &codes));
  }
  return standardize(model, concat_features(atoms, nullptr));
}

namespace {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

Split split_dataset(std::size_t n, double val_fraction, SeededRng rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  Split s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

void apply_gradients(GsnModel& model, const GradientBundle& grads, double lr) {
  for (std::size_t l = 0; l < model.encoder.layers.size(); ++l) {
    model.encoder.layers[l].weight -= lr * grads.encoder.weight[l];
    model.encoder.layers[l].bias -= lr * grads.encoder.bias[l];
  }
  model.classifier.weight -= lr * grads.classifier_weight;
  model.classifier.bias -= lr * grads.classifier_bias;
}

}  // namespace

TrainResult train_gsn(const std::vector<PreparedImage>& images,
                      const std::vector<std::string>& class_names, const PipelineConfig& cfg) {
  cfg.validate();
  if (images.size() < 2) throw ConfigError("train: need at least 2 images to split");
  if (class_names.size() < 2) throw ConfigError("train: need at least 2 classes");
  for (const auto& img : images) {
    if (img.label < 0 || img.label >= static_cast<int>(class_names.size()))
      throw ConfigError("train: image with label outside the class list");
  }

  const int feat_dim = static_cast<int>(images.front().subgraphs.front().node_features.cols());
  SeededRng root(cfg.seed);

  TrainResult result;
  GsnModel& model = result.model;
  model.config = cfg;
  model.class_names = class_names;

  std::vector<int> widths;
  widths.push_back(feat_dim);
  widths.insert(widths.end(), cfg.gcn_hidden.begin(), cfg.gcn_hidden.end());
  widths.push_back(cfg.atom_dim);
  SeededRng enc_rng = root.derive(2);
  model.encoder = make_atom_encoder(widths, cfg.propagation, cfg.readout, enc_rng);

  SeededRng clf_rng = root.derive(3);
  model.classifier = make_classifier(cfg.feature_vector_dim(),
                                     static_cast<int>(class_names.size()), clf_rng);

  // Dictionary stage: atoms from the freshly initialized encoder over the
  // whole training set become the signal batch; the learned dictionary is
  // frozen before supervised training.
  {
    Matrix signals(cfg.atom_dim, static_cast<Index>(images.size()) * cfg.clusters);
    std::vector<std::vector<Vector>> all_atoms(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      all_atoms[i] = image_atoms(model.encoder, images[i]);
    });
    Index col = 0;
    for (const auto& atoms : all_atoms)
      for (const auto& a : atoms) signals.col(col++) = a;
    DictionaryLearnResult learned = learn_dictionary(
        signals, cfg.dict_atoms, cfg.lambda, cfg.dict_rounds, root.derive(4).seed());
    model.dictionary = std::move(learned.dictionary);
  }

  // Fit the frozen feature standardization on the training set under the
  // initial encoder.
  {
    Matrix feats(cfg.feature_vector_dim(), static_cast<Index>(images.size()));
    parallel_for(images.size(), [&](std::size_t i) {
      std::vector<Vector> atoms = image_atoms(model.encoder, images[i]);
      if (cfg.use_sparse_codes) {
        std::vector<Vector> codes;
        for (const auto& a : atoms)
          codes.push_back(sparse_code(model.dictionary, a, cfg.lambda).coefficients);
        feats.col(static_cast<Index>(i)) = concat_features(atoms, &codes);
      } else {
        feats.col(static_cast<Index>(i)) = concat_features(atoms, nullptr);
      }
    });
    model.feature_mean = feats.rowwise().mean();
    Matrix centered = feats.colwise() - model.feature_mean;
    Vector var = centered.array().square().rowwise().mean();
    // Dead dimensions must not explode when they drift during training.
    model.feature_scale = var.array().sqrt().max(1e-3);
  }

  if (cfg.max_epochs == 0) return result;

  Split split = split_dataset(images.size(), cfg.val_split, root.derive(5));
  PlateauScheduler scheduler(cfg.learning_rate, cfg.patience);

  auto mean_val_loss = [&](double* accuracy) {
    std::vector<double> losses(split.val.size());
    std::vector<int> predicted(split.val.size()), actual(split.val.size());
    parallel_for(split.val.size(), [&](std::size_t i) {
      const PreparedImage& img = images[split.val[i]];
      Vector f = feature_vector(model, img);
      auto [cls, probs] = predict(model.classifier, f);
      losses[i] = cross_entropy(probs, img.label);
      predicted[i] = cls;
      actual[i] = img.label;
    });
    double sum = std::accumulate(losses.begin(), losses.end(), 0.0);
    if (accuracy) {
      int correct = 0;
      for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == actual[i]) ++correct;
      *accuracy = static_cast<double>(correct) / static_cast<double>(split.val.size());
    }
    return sum / static_cast<double>(split.val.size());
  };

  double best_val = std::numeric_limits<double>::infinity();
  GsnModel best_model = model;
  SeededRng batch_rng = root.derive(6);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double lr = scheduler.lr();

    std::vector<std::size_t> order = split.train;
    if (cfg.batch_size > 0) batch_rng.shuffle(order);
    std::size_t batch = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size)
                                           : order.size();

    double train_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      GradientBundle grads = zero_bundle(model);
      std::vector<GradientBundle> partial(stop - start, grads);
      std::vector<double> losses(stop - start);
      parallel_for(stop - start, [&](std::size_t j) {
        const PreparedImage& img = images[order[start + j]];
        PipelineTape tape = pipeline_forward(model, img, img.label);
        partial[j] = pipeline_backward(model, tape);
        losses[j] = tape.loss;
      });
      for (std::size_t j = 0; j < partial.size(); ++j) {
        grads.add(partial[j]);
        train_loss_sum += losses[j];
      }
      grads.scale(1.0 / static_cast<double>(stop - start));
      apply_gradients(model, grads, lr);
    }
    double train_loss = train_loss_sum / static_cast<double>(order.size());

    double val_accuracy = 0.0;
    double val_loss = mean_val_loss(&val_accuracy);
    result.log.push_back({epoch, lr, train_loss, val_loss, val_accuracy});

    if (val_loss < best_val) {
      best_val = val_loss;
      best_model = model;
    }
    scheduler.observe(val_loss);
  }

  result.model = std::move(best_model);
  return result;
}

Metrics evaluate_model(const GsnModel& model, const std::vector<PreparedImage>& images) {
  if (images.empty()) throw ConfigError("evaluate: empty dataset");
  std::vector<int> predicted(images.size()), actual(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    Vector f = feature_vector(model, images[i]);
    predicted[i] = predict(model.classifier, f).first;
    actual[i] = images[i].label;
  });
  return compute_metrics(predicted, actual, static_cast<int>(model.class_names.size()));
}

BaselineResult train_linear_baseline(const std::vector<PreparedImage>& images, int class_count,
                                     const PipelineConfig& cfg) {
  if (images.size() < 2) throw ConfigError("baseline: need at least 2 images to split");
  const int dim = static_cast<int>(images.front().pooled.size());
  SeededRng root(cfg.seed);

  BaselineResult result;
  SeededRng clf_rng = root.derive(30);
  result.classifier = make_classifier(dim, class_count, clf_rng);

  // Same frozen standardization treatment as the main model.
  {
    Matrix feats(dim, static_cast<Index>(images.size()));
    for (std::size_t i = 0; i < images.size(); ++i)
      feats.col(static_cast<Index>(i)) = images[i].pooled;
    result.feature_mean = feats.rowwise().mean();
    Matrix centered = feats.colwise() - result.feature_mean;
    Vector var = centered.array().square().rowwise().mean();
    result.feature_scale = var.array().sqrt().max(1e-3);
  }
  auto standardized = [&](const PreparedImage& img) {
    return Vector((img.pooled - result.feature_mean).cwiseQuotient(result.feature_scale));
  };

  if (cfg.max_epochs == 0) return result;

  Split split = split_dataset(images.size(), cfg.val_split, root.derive(5));
  PlateauScheduler scheduler(cfg.learning_rate, cfg.patience);
  double best_val = std::numeric_limits<double>::infinity();
  SoftmaxClassifier best_clf = result.classifier;
  SeededRng batch_rng = root.derive(6);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double lr = scheduler.lr();
    std::vector<std::size_t> order = split.train;
    if (cfg.batch_size > 0) batch_rng.shuffle(order);
    std::size_t batch = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size)
                                           : order.size();

    double train_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      Matrix dw = Matrix::Zero(dim, class_count);
      Vector db = Vector::Zero(class_count);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const PreparedImage& img = images[order[idx]];
        Vector f = standardized(img);
        Vector p = softmax_probabilities(result.classifier, f);
        train_loss += cross_entropy(p, img.label);
        p(img.label) -= 1.0;
        dw += f * p.transpose();
        db += p;
      }
      double inv = 1.0 / static_cast<double>(stop - start);
      result.classifier.weight -= lr * inv * dw;
      result.classifier.bias -= lr * inv * db;
    }
    train_loss /= static_cast<double>(order.size());

    double val_loss = 0.0;
    int correct = 0;
    for (std::size_t i : split.val) {
      auto [cls, probs] = predict(result.classifier, standardized(images[i]));
      val_loss += cross_entropy(probs, images[i].label);
      if (cls == images[i].label) ++correct;
    }
    val_loss /= static_cast<double>(split.val.size());
    double val_acc = static_cast<double>(correct) / static_cast<double>(split.val.size());
    result.log.push_back({epoch, lr, train_loss, val_loss, val_acc});

    if (val_loss < best_val) {
      best_val = val_loss;
      best_clf = result.classifier;
    }
    scheduler.observe(val_loss);
  }
  result.classifier = std::move(best_clf);
  return result;
}

Metrics evaluate_baseline(const BaselineResult& baseline,
                          const std::vector<PreparedImage>& images) {
  if (images.empty()) throw ConfigError("evaluate: empty dataset");
  std::vector<int> predicted(images.size()), actual(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    Vector f =
        (images[i].pooled - baseline.feature_mean).cwiseQuotient(baseline.feature_scale);
    predicted[i] = predict(baseline.classifier, f).first;
    actual[i] = images[i].label;
  }
  return compute_metrics(predicted, actual, baseline.classifier.class_count());
}

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training log " + path);
  out << "epoch,lr,train_loss,val_loss,val_accuracy\n";
  char line[160];
  for (const auto& e : log) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g,%.10g\n", e.epoch, e.lr, e.train_loss,
                  e.val_loss, e.val_accuracy);
    out << line;
  }
}

}  // namespace gsn
