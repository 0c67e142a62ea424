#include "oneshot/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "oneshot/ops.hpp"
#include "oneshot/parallel.hpp"

namespace oneshot {

std::size_t EvalReport::confusion_total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) {
    for (auto v : row) n += v;
  }
  return n;
}

std::size_t argmax_lowest(std::span<const float> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t argmin_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

namespace {

std::vector<std::vector<std::size_t>> class_members(std::span<const LabeledImage> set,
                                                    const std::vector<std::string>& classes) {
  std::vector<std::vector<std::size_t>> members(classes.size());
  const auto idx = label_indices(set, classes);
  for (std::size_t i = 0; i < idx.size(); ++i) members[idx[i]].push_back(i);
  return members;
}

std::vector<std::vector<std::size_t>> square(std::size_t n) {
  return std::vector<std::vector<std::size_t>>(n, std::vector<std::size_t>(n, 0));
}

double squared_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s;
}

// Shared episodic loop: `features` holds one vector per dataset image.
EvalReport run_episodes(const char* protocol, std::span<const LabeledImage> test_set,
                        const std::vector<Tensor>& features, const EpisodeConfig& config) {
  if (config.episodes == 0) throw ProtocolError("at least one episode is required");
  const auto classes = class_order(test_set);
  if (classes.size() < 2) throw ProtocolError("one-shot evaluation needs at least 2 test classes");
  const auto members = class_members(test_set, classes);
  const auto labels = label_indices(test_set, classes);

  EvalReport report;
  report.protocol = protocol;
  report.classes = classes;
  report.confusion = square(classes.size());
  report.episodes = config.episodes;
  double accuracy_sum = 0.0;
  std::vector<double> dist(classes.size());
  for (std::size_t e = 0; e < config.episodes; ++e) {
    Rng rng = Rng::derive(config.seed, {string_key("episode"), e});
    const Episode ep = sample_episode(members, config.queries_per_class, rng);
    std::size_t correct = 0;
    for (std::size_t q : ep.queries) {
      for (std::size_t c = 0; c < classes.size(); ++c) dist[c] = squared_distance(features[q], features[ep.support[c]]);
      const std::size_t predicted = argmin_lowest(dist);
      ++report.confusion[labels[q]][predicted];
      if (predicted == labels[q]) ++correct;
    }
    report.queries += ep.queries.size();
    accuracy_sum += ep.queries.empty() ? 0.0 : double(correct) / double(ep.queries.size());
  }
  report.accuracy = accuracy_sum / double(config.episodes);
  return report;
}

std::vector<Tensor> preprocess_all(std::span<const LabeledImage> set, std::size_t side, std::size_t workers) {
  std::vector<Tensor> out(set.size());
  parallel_for(0, set.size(), workers, [&](std::size_t i) { out[i] = preprocess(set[i].image, side); });
  return out;
}

}  // namespace

Episode sample_episode(const std::vector<std::vector<std::size_t>>& members, std::size_t queries_per_class,
                       Rng& rng) {
  Episode ep;
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() < 2) {
      throw ProtocolError("class " + std::to_string(c) + " has " + std::to_string(members[c].size()) +
                          " image(s); one-shot episodes need at least 2 per class");
    }
  }
  ep.support.resize(members.size());
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::vector<std::size_t> pool = members[c];
    // Partial Fisher-Yates: slot 0 is the support image, the next slots the queries.
    const std::size_t take = std::min(pool.size(), queries_per_class + 1);
    for (std::size_t k = 0; k < take; ++k) std::swap(pool[k], pool[k + rng.uniform_index(pool.size() - k)]);
    ep.support[c] = pool[0];
    for (std::size_t k = 1; k < take; ++k) ep.queries.push_back(pool[k]);
  }
  return ep;
}

EvalReport oneshot_nway(const Network& encoder, std::span<const LabeledImage> test_set,
                        const EpisodeConfig& config) {
  // encode is pure, so every image is embedded once and reused across episodes.
  const std::vector<Tensor> inputs = preprocess_all(test_set, encoder.spec().input_side, config.workers);
  std::vector<Tensor> embeddings(test_set.size());
  parallel_for(0, test_set.size(), config.workers, [&](std::size_t i) { embeddings[i] = encode(encoder, inputs[i]); });
  EvalReport report = run_episodes("oneshot", test_set, embeddings, config);
  report.protocol = "oneshot_" + std::to_string(report.classes.size()) + "way";
  return report;
}

EvalReport knn_episodic(std::span<const LabeledImage> test_set, std::size_t side, const EpisodeConfig& config) {
  EvalReport report = run_episodes("knn", test_set, preprocess_all(test_set, side, config.workers), config);
  report.protocol = "knn1_" + std::to_string(report.classes.size()) + "way";
  return report;
}

EvalReport knn_baseline(std::span<const LabeledImage> prototypes, std::span<const LabeledImage> queries,
                        std::size_t side) {
  const auto classes = class_order(prototypes);
  if (classes.size() != prototypes.size()) {
    throw ProtocolError("knn_baseline expects exactly one prototype per class");
  }
  const auto proto = preprocess_all(prototypes, side, 1);
  const auto labels = label_indices(queries, classes);
  EvalReport report;
  report.protocol = "knn1";
  report.classes = classes;
  report.confusion = square(classes.size());
  report.episodes = 1;
  report.queries = queries.size();
  std::size_t correct = 0;
  std::vector<double> dist(classes.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Tensor x = preprocess(queries[q].image, side);
    for (std::size_t c = 0; c < classes.size(); ++c) dist[c] = squared_distance(x, proto[c]);
    const std::size_t predicted = argmin_lowest(dist);
    ++report.confusion[labels[q]][predicted];
    if (predicted == labels[q]) ++correct;
  }
  report.accuracy = queries.empty() ? 0.0 : double(correct) / double(queries.size());
  return report;
}

Verification verify_pair(const Network& encoder, const Tensor& x1, const Tensor& x2, double margin) {
  const float d = siamese_distance(encoder, x1, x2);
  return {double(d) < margin, d};
}

EvalReport verification_accuracy(std::span<const double> distances, std::span<const PairLabel> labels,
                                 double margin) {
  if (distances.size() != labels.size()) throw ShapeError("verification_accuracy: distances/labels length mismatch");
  if (distances.empty()) throw ProtocolError("verification_accuracy: empty pair set");
  EvalReport report;
  report.protocol = "verification";
  report.classes = {"different", "same"};
  report.confusion = square(2);
  report.episodes = 1;
  report.queries = distances.size();
  std::size_t correct = 0;
  double same_sum = 0.0, diff_sum = 0.0;
  std::size_t same_n = 0, diff_n = 0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const std::size_t truth = label_value(labels[i]);
    const std::size_t predicted = distances[i] < margin ? 1 : 0;
    ++report.confusion[truth][predicted];
    if (truth == predicted) ++correct;
    (truth ? same_sum : diff_sum) += distances[i];
    ++(truth ? same_n : diff_n);
  }
  report.accuracy = double(correct) / double(distances.size());
  report.stats["margin"] = margin;
  if (same_n) report.stats["mean_same_distance"] = same_sum / double(same_n);
  if (diff_n) report.stats["mean_different_distance"] = diff_sum / double(diff_n);
  return report;
}

EvalReport verification_accuracy(const Network& encoder, std::span<const PairSample> pairs, double margin,
                                 std::size_t workers) {
  std::vector<double> distances(pairs.size());
  std::vector<PairLabel> labels(pairs.size());
  parallel_for(0, pairs.size(), workers, [&](std::size_t i) {
    distances[i] = verify_pair(encoder, pairs[i].x1, pairs[i].x2, margin).distance;
    labels[i] = pairs[i].y;
  });
  return verification_accuracy(distances, labels, margin);
}

EvalReport classifier_accuracy(const Network& classifier, std::span<const LabeledImage> test_set,
                               std::span<const std::string> classes, ClassifierHead head) {
  if (classes.size() != classifier.spec().output_dim()) {
    throw SpecError("classifier has " + std::to_string(classifier.spec().output_dim()) + " outputs for " +
                    std::to_string(classes.size()) + " classes");
  }
  const auto labels = label_indices(test_set, classes);
  EvalReport report;
  report.protocol = "cnn";
  report.classes.assign(classes.begin(), classes.end());
  report.confusion = square(classes.size());
  report.episodes = 1;
  report.queries = test_set.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const Tensor probs = classify(classifier, preprocess(test_set[i].image, classifier.spec().input_side), head);
    const std::size_t predicted = argmax_lowest(probs.data());
    ++report.confusion[labels[i]][predicted];
    if (predicted == labels[i]) ++correct;
  }
  report.accuracy = test_set.empty() ? 0.0 : double(correct) / double(test_set.size());
  return report;
}

LatencyStats measure_latency(const Network& encoder, std::span<const Tensor> images, std::size_t repetitions) {
  if (repetitions == 0) throw DomainError("measure_latency: repetitions must be positive");
  if (images.empty()) throw DomainError("measure_latency: no images");
  for (const auto& img : images) (void)encode(encoder, img);

  std::vector<double> samples;
  samples.reserve(images.size() * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (const auto& img : images) {
      const auto start = std::chrono::steady_clock::now();
      const Tensor e = encode(encoder, img);
      const auto stop = std::chrono::steady_clock::now();
      if (e.empty()) throw ContractError("encode returned an empty embedding");
      samples.push_back(std::chrono::duration<double>(stop - start).count());
    }
  }
  LatencyStats stats;
  stats.samples = samples.size();
  double sum = 0.0;
  for (double s : samples) sum += s;
  stats.mean = sum / double(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - stats.mean) * (s - stats.mean);
  stats.stddev = samples.size() > 1 ? std::sqrt(var / double(samples.size() - 1)) : 0.0;
  return stats;
}

}  // namespace oneshot
