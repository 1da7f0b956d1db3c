#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsn/classify.hpp"
#include "gsn/clustering.hpp"
#include "gsn/dataset.hpp"
#include "gsn/dictionary.hpp"
#include "gsn/gcn.hpp"
#include "gsn/image.hpp"
#include "gsn/types.hpp"

namespace gsn {

// Every knob of the pipeline. Serialized as flat JSON with exhaustive key
// validation: unknown keys are a ConfigError, missing keys take these
// defaults.
struct PipelineConfig {
  int superpixels = 64;
  double compactness = 10.0;
  int knn_k = 8;
  int clusters = 4;
  int atom_dim = 32;
  std::vector<int> gcn_hidden = {64};
  PropagationMode propagation = PropagationMode::kRenormalized;
  Readout readout = Readout::kMean;
  int dict_atoms = 32;
  int dict_rounds = 20;
  double lambda = 0.1;
  bool use_sparse_codes = false;
  double learning_rate = 1e-3;
  int max_epochs = 100;
  int patience = 5;
  double val_split = 0.2;
  int batch_size = 1;  // 0 = full batch
  std::uint64_t seed = 42;
  std::string extractor = "handcrafted";

  // Classifier input width: per-cluster atoms, plus per-cluster sparse
  // codes when enabled.
  int feature_vector_dim() const {
    return clusters * (atom_dim + (use_sparse_codes ? dict_atoms : 0));
  }

  void validate() const;
};

PipelineConfig parse_config(const std::string& json_text);
std::string config_json(const PipelineConfig& cfg);
PipelineConfig load_config_file(const std::string& path);

// Trained pipeline state. Serializes to a single file: "GSNM" magic, u32
// version, u64 header length, JSON header (config, classes, tensor
// directory), then concatenated GSNT tensor records.
struct GsnModel {
  std::uint32_t format_version = 1;
  PipelineConfig config;
  std::vector<std::string> class_names;
  AtomEncoder encoder;
  Dictionary dictionary;
  SoftmaxClassifier classifier;
  // Frozen per-dimension standardization of the classifier input, fitted on
  // the training set under the initial encoder. The classifier reads
  // (f - mean) / scale; algebraically still an affine softmax of f, but
  // plain gradient descent conditions far better. Not trainable.
  Vector feature_mean;
  Vector feature_scale;
};

void save_model(const std::string& path, const GsnModel& model);
GsnModel load_model(const std::string& path);

// Trainable parameter count: GCN weights/biases plus classifier
// weights/biases. The dictionary is frozen after learning and excluded.
long count_parameters(const GsnModel& model);

std::string model_summary(const GsnModel& model);

// Image after graph construction and clustering; everything the trainable
// stages consume.
struct PreparedImage {
  std::vector<Subgraph> subgraphs;  // canonical cluster order
  Vector pooled;                    // mean normalized superpixel feature
  int label = -1;
};

// extractor comes from cfg; for imported features pass the per-image tensor
// path through import_path (used when cfg.extractor starts with "import:").
PreparedImage prepare_image(const ImageBuffer& img, const PipelineConfig& cfg,
                            const std::string& import_path = "");
std::vector<PreparedImage> prepare_dataset(const DatasetManifest& manifest,
                                           const PipelineConfig& cfg);

// One atom per subgraph, canonical order.
std::vector<Vector> image_atoms(const AtomEncoder& enc, const PreparedImage& img);

// Gradients of the scalar loss for every trainable parameter.
struct GradientBundle {
  EncoderGradients encoder;
  Matrix classifier_weight;
  Vector classifier_bias;

  void add(const GradientBundle& other);
  void scale(double s);
};

// Forward record of one image: atoms, optional sparse codes, concatenated
// feature vector, class distribution, cross-entropy loss.
struct PipelineTape {
  std::vector<AtomTrace> atom_traces;
  Vector features;
  Vector probabilities;
  int label = -1;
  double loss = 0.0;
  bool recorded = false;
};

PipelineTape pipeline_forward(const GsnModel& model, const PreparedImage& img, int label);

// Exact gradients for the recorded forward pass. Sparse-code feature blocks
// are treated as constants (the dictionary is frozen); gradients flow
// through atoms, concatenation and softmax. Throws StateError when the tape
// was not recorded.
GradientBundle pipeline_backward(const GsnModel& model, const PipelineTape& tape);

// Inference-path feature vector (atoms + optional codes, canonical order).
Vector feature_vector(const GsnModel& model, const PreparedImage& img);

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  GsnModel model;
  std::vector<EpochLog> log;
};

// Staged training: learn the dictionary from initial-encoder atoms and
// freeze it, then gradient-descend encoder + classifier jointly on mean
// cross-entropy with the halve-on-plateau schedule. Keeps the
// best-validation parameter snapshot. Deterministic in (images, config).
TrainResult train_gsn(const std::vector<PreparedImage>& images,
                      const std::vector<std::string>& class_names, const PipelineConfig& cfg);

Metrics evaluate_model(const GsnModel& model, const std::vector<PreparedImage>& images);

// Linear softmax on mean-pooled superpixel features, trained with the same
// schedule and the same frozen train-set standardization; the comparison
// baseline for the synthetic experiment.
struct BaselineResult {
  SoftmaxClassifier classifier;
  Vector feature_mean;
  Vector feature_scale;
  std::vector<EpochLog> log;
};

BaselineResult train_linear_baseline(const std::vector<PreparedImage>& images, int class_count,
                                     const PipelineConfig& cfg);
Metrics evaluate_baseline(const BaselineResult& baseline,
                          const std::vector<PreparedImage>& images);

std::string metrics_json(const Metrics& metrics, const std::vector<std::string>& class_names);
std::string metrics_table(const Metrics& metrics, const std::vector<std::string>& class_names);
void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace gsn
