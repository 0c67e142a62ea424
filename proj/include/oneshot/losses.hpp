#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oneshot/tensor.hpp"

namespace oneshot {

struct ContrastiveConfig {
  double margin = 2.0;

  /// Throws ConfigError unless margin > 0.
  void validate() const;
};

/// y = 1 for a same-class pair, 0 otherwise.
enum class PairLabel : int { Different = 0, Same = 1 };

inline int label_value(PairLabel y) { return static_cast<int>(y); }

struct LossAndGrad {
  double loss = 0.0;
  double grad = 0.0;  // dLoss/dD
};

/// y * D^2 / 2 + (1 - y) * max(0, m - D)^2 / 2. Throws DomainError for D < 0.
LossAndGrad contrastive_loss(double distance, PairLabel y, const ContrastiveConfig& cfg);

struct BatchLoss {
  double loss = 0.0;               // mean over the batch
  std::vector<double> grads;       // dMeanLoss/dD_i, already divided by batch size
};

BatchLoss batch_contrastive_loss(std::span<const double> distances, std::span<const PairLabel> labels,
                                 const ContrastiveConfig& cfg);

inline constexpr double kLogFloor = 1e-12;

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor grad;  // d loss / d probs (or logits for the softmax variant)
};

/// Categorical cross-entropy over sigmoid outputs: probs are renormalized to
/// sum to one before -log(p_target). The log argument is clamped at kLogFloor.
CrossEntropyResult cross_entropy(const Tensor& probs, std::size_t target);

/// Softmax cross-entropy taking raw logits; gradient is softmax - onehot.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, std::size_t target);

}  // namespace oneshot
