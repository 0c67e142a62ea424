#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "oneshot/dataset.hpp"
#include "oneshot/model.hpp"
#include "oneshot/pairs.hpp"

namespace oneshot {

struct EvalReport {
  std::string protocol;
  double accuracy = 0.0;
  std::size_t episodes = 0;
  std::size_t queries = 0;
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::map<std::string, double> stats;
  double latency_mean = std::numeric_limits<double>::quiet_NaN();
  double latency_std = std::numeric_limits<double>::quiet_NaN();

  std::size_t confusion_total() const;
};

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const float> values);
/// Index of the smallest value; ties go to the lowest index.
std::size_t argmin_lowest(std::span<const double> values);

/// One support image per class plus the queries of an N-way one-shot trial.
/// Indices refer to the evaluated dataset.
struct Episode {
  std::vector<std::size_t> support;  // support[c] for class c
  std::vector<std::size_t> queries;
};

struct EpisodeConfig {
  std::size_t episodes = 1000;
  std::size_t queries_per_class = 15;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Draws a support image per class and up to queries_per_class further images
/// of each class as queries. Throws ProtocolError for a class with < 2 images.
Episode sample_episode(const std::vector<std::vector<std::size_t>>& members, std::size_t queries_per_class,
                       Rng& rng);

/// N-way one-shot accuracy over every class in `test_set`: each query goes to
/// the class of the nearest support embedding. Accuracy is averaged over episodes.
EvalReport oneshot_nway(const Network& encoder, std::span<const LabeledImage> test_set,
                        const EpisodeConfig& config);

/// Same episodes with raw normalized pixels in place of embeddings.
EvalReport knn_episodic(std::span<const LabeledImage> test_set, std::size_t side, const EpisodeConfig& config);

/// 1-NN by raw-pixel Euclidean distance against one prototype per class, after
/// the same resize/normalize as the network input.
EvalReport knn_baseline(std::span<const LabeledImage> prototypes, std::span<const LabeledImage> queries,
                        std::size_t side);

struct Verification {
  bool same_class = false;
  float distance = 0.0f;
};

/// same_class = D < margin.
Verification verify_pair(const Network& encoder, const Tensor& x1, const Tensor& x2, double margin);

/// Fraction of pairs whose thresholded decision matches the label.
EvalReport verification_accuracy(const Network& encoder, std::span<const PairSample> pairs, double margin,
                                 std::size_t workers = 1);
EvalReport verification_accuracy(std::span<const double> distances, std::span<const PairLabel> labels,
                                 double margin);

/// Argmax of the classifier output against each image's label. `classes` maps
/// output units to labels.
EvalReport classifier_accuracy(const Network& classifier, std::span<const LabeledImage> test_set,
                               std::span<const std::string> classes, ClassifierHead head);

struct LatencyStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t samples = 0;
};

/// Seconds per encode call over `repetitions` passes through `images`, after
/// one untimed warm-up pass.
LatencyStats measure_latency(const Network& encoder, std::span<const Tensor> images, std::size_t repetitions);

}  // namespace oneshot
