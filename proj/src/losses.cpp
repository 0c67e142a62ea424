#include "oneshot/losses.hpp"

#include <algorithm>
#include <cmath>

#include "oneshot/ops.hpp"

namespace oneshot {

void ContrastiveConfig::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) {
    throw ConfigError("contrastive margin must be positive, got " + std::to_string(margin));
  }
}

LossAndGrad contrastive_loss(double distance, PairLabel y, const ContrastiveConfig& cfg) {
  if (!(distance >= 0.0)) {
    throw DomainError("contrastive_loss needs a non-negative distance, got " + std::to_string(distance));
  }
  if (y == PairLabel::Same) return {0.5 * distance * distance, distance};
  const double hinge = std::max(0.0, cfg.margin - distance);
  return {0.5 * hinge * hinge, -hinge};
}

BatchLoss batch_contrastive_loss(std::span<const double> distances, std::span<const PairLabel> labels,
                                 const ContrastiveConfig& cfg) {
  if (distances.size() != labels.size()) {
    throw ShapeError("batch_contrastive_loss: " + std::to_string(distances.size()) + " distances but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (distances.empty()) throw DomainError("batch_contrastive_loss on an empty batch");
  const double inv = 1.0 / double(distances.size());
  BatchLoss out;
  out.grads.reserve(distances.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const LossAndGrad lg = contrastive_loss(distances[i], labels[i], cfg);
    sum += lg.loss;
    out.grads.push_back(lg.grad * inv);
  }
  out.loss = sum * inv;
  return out;
}

CrossEntropyResult cross_entropy(const Tensor& probs, std::size_t target) {
  if (target >= probs.size()) {
    throw IndexError("cross_entropy target " + std::to_string(target) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  double total = 0.0;
  for (float p : probs.data()) total += p;
  if (!(total > 0.0)) throw DomainError("cross_entropy: probabilities sum to zero");

  CrossEntropyResult out;
  out.grad = Tensor(probs.shape());
  const double normalized = double(probs[target]) / total;
  if (normalized < kLogFloor) {
    out.loss = -std::log(kLogFloor);
    return out;  // clamped: flat in the probabilities
  }
  out.loss = -std::log(normalized);
  // d/dp_j [ -log p_t + log sum_k p_k ] = -[j == t] / p_t + 1 / sum
  for (std::size_t j = 0; j < probs.size(); ++j) {
    double g = 1.0 / total;
    if (j == target) g -= 1.0 / double(probs[target]);
    out.grad[j] = static_cast<float>(g);
  }
  return out;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::size_t target) {
  if (target >= logits.size()) {
    throw IndexError("softmax_cross_entropy target " + std::to_string(target) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  CrossEntropyResult out;
  out.grad = softmax(logits);
  out.loss = -std::log(std::max(double(out.grad[target]), kLogFloor));
  out.grad[target] -= 1.0f;
  return out;
}

}  // namespace oneshot
