#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oneshot/dataset.hpp"
#include "oneshot/model.hpp"
#include "oneshot/optimizer.hpp"
#include "oneshot/pairs.hpp"

namespace oneshot {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double margin = 2.0;
  std::uint64_t seed = 0;
  std::size_t steps_per_epoch = 0;  // 0: ceil(training images / batch_size)
  double validation_fraction = 0.1;
  std::size_t validation_pairs = 200;
  std::size_t workers = 1;
  AugmentConfig augment;
  bool augment_enabled = true;
  bool shared_augment = false;
  // Checkpoints go to checkpoint_dir (if set): model.ossd + train_state.ossd at
  // the end and model_epoch_<e>.ossd every checkpoint_every epochs.
  std::filesystem::path checkpoint_dir;
  std::size_t checkpoint_every = 0;

  /// Table-1 Siamese defaults.
  static TrainConfig siamese_defaults() { return {}; }
  /// Baseline CNN: 120 epochs, batch 128, 20% held out.
  static TrainConfig classifier_defaults();

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;  // wall clock, excluded from deterministic reports
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t steps = 0;
  std::size_t steps_per_epoch = 0;
  std::size_t train_images = 0;
  std::size_t validation_images = 0;
  double heldout_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> classes;
  std::string final_checkpoint;
};

struct TrainResult {
  Network network;
  AdamState optimizer;
  TrainReport report;
};

/// Mean contrastive loss of `pairs` under `encoder`. Never mutates weights.
double validate_pairs(const Network& encoder, std::span<const PairSample> pairs, double margin);

/// Contrastive-loss training of the shared-weight encoder on sampled pairs.
/// 10% of every training class is held out to build a fixed validation pair set.
TrainResult train_siamese(std::span<const LabeledImage> train_set, const NetworkSpec& spec,
                          const TrainConfig& config);

enum class ClassifierHead;

/// Supervised baseline. Splits `dataset` 80/20 (stratified, seeded by
/// config.seed), trains with cross-entropy and reports held-out accuracy.
/// spec.output_dim() must equal the number of classes.
TrainResult train_classifier(std::span<const LabeledImage> dataset, const NetworkSpec& spec,
                             const TrainConfig& config, ClassifierHead head);

/// The held-out 20% used by train_classifier for the same seed.
DatasetSplit classifier_split(std::span<const LabeledImage> dataset, std::uint64_t seed,
                              double test_fraction = 0.2);

/// Validation pair set used by train_siamese: derived from the held-out part
/// of `train_set` for the same config.
std::vector<PairSample> siamese_validation_pairs(std::span<const LabeledImage> holdout,
                                                 std::size_t side, const TrainConfig& config);

}  // namespace oneshot
