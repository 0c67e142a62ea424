#include "oneshot/pairs.hpp"

#include <algorithm>
#include <fstream>

namespace oneshot {

PairSampler::PairSampler(std::span<const LabeledImage> dataset, PairSamplerConfig config)
    : dataset_(dataset), config_(std::move(config)), classes_(class_order(dataset)) {
  members_.resize(classes_.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = std::find(classes_.begin(), classes_.end(), dataset[i].label);
    members_[std::size_t(it - classes_.begin())].push_back(i);
  }
}

Tensor PairSampler::prepare(std::size_t index, const AugmentParams& params) const {
  const GrayImage& src = dataset_[index].image;
  if (!config_.augment) return preprocess(src, config_.side);
  return preprocess(apply_augment(src, params, config_.augment_config), config_.side);
}

PairSample PairSampler::sample(Rng& rng) const {
  if (classes_.empty()) throw SamplingError("cannot sample pairs from an empty dataset");
  PairSample out;
  if (rng.bernoulli(config_.same_prob)) {
    const std::size_t c = rng.uniform_index(classes_.size());
    const auto& pool = members_[c];
    if (pool.size() < 2) {
      throw SamplingError("class '" + classes_[c] + "' has " + std::to_string(pool.size()) +
                          " image(s); a same-class pair needs at least 2");
    }
    const std::size_t a = rng.uniform_index(pool.size());
    std::size_t b = rng.uniform_index(pool.size() - 1);
    if (b >= a) ++b;
    out.index1 = pool[a];
    out.index2 = pool[b];
    out.y = PairLabel::Same;
  } else {
    if (classes_.size() < 2) throw SamplingError("a different-class pair needs at least 2 classes");
    const std::size_t c1 = rng.uniform_index(classes_.size());
    std::size_t c2 = rng.uniform_index(classes_.size() - 1);
    if (c2 >= c1) ++c2;
    out.index1 = members_[c1][rng.uniform_index(members_[c1].size())];
    out.index2 = members_[c2][rng.uniform_index(members_[c2].size())];
    out.y = PairLabel::Different;
  }
  const AugmentParams p1 = draw_augment(config_.augment_config, rng);
  const AugmentParams p2 = config_.shared_augment ? p1 : draw_augment(config_.augment_config, rng);
  out.x1 = prepare(out.index1, p1);
  out.x2 = prepare(out.index2, p2);
  return out;
}

void write_pair_csv(const std::filesystem::path& path, std::span<const PairSample> pairs,
                    std::span<const LabeledImage> dataset) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "idx,file1,file2,y\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << i << ',' << dataset[pairs[i].index1].source << ',' << dataset[pairs[i].index2].source << ','
        << label_value(pairs[i].y) << '\n';
  }
}

}  // namespace oneshot
