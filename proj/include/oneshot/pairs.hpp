#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "oneshot/augment.hpp"
#include "oneshot/dataset.hpp"
#include "oneshot/losses.hpp"

namespace oneshot {

struct PairSample {
  Tensor x1;
  Tensor x2;
  PairLabel y = PairLabel::Different;
  std::size_t index1 = 0;  // positions in the source dataset
  std::size_t index2 = 0;
};

struct PairSamplerConfig {
  std::size_t side = 100;
  double same_prob = 0.5;
  bool augment = true;
  AugmentConfig augment_config;
  // One shared draw for both members instead of independent draws.
  bool shared_augment = false;
};

/// Draws (x1, x2, y): with probability same_prob two distinct images of one
/// uniformly chosen class (y = 1), otherwise one image from each of two
/// distinct uniformly chosen classes (y = 0). Each member is augmented,
/// resized and normalized.
class PairSampler {
 public:
  PairSampler(std::span<const LabeledImage> dataset, PairSamplerConfig config);

  PairSample sample(Rng& rng) const;

  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const PairSamplerConfig& config() const noexcept { return config_; }

 private:
  Tensor prepare(std::size_t index, const AugmentParams& params) const;

  std::span<const LabeledImage> dataset_;
  PairSamplerConfig config_;
  std::vector<std::string> classes_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Writes "idx,file1,file2,y" rows for debugging a pair sequence.
void write_pair_csv(const std::filesystem::path& path, std::span<const PairSample> pairs,
                    std::span<const LabeledImage> dataset);

}  // namespace oneshot
