#include "oneshot/training.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "oneshot/checkpoint.hpp"
#include "oneshot/evaluation.hpp"
#include "oneshot/losses.hpp"
#include "oneshot/ops.hpp"
#include "oneshot/parallel.hpp"

namespace oneshot {

TrainConfig TrainConfig::classifier_defaults() {
  TrainConfig c;
  c.batch_size = 128;
  c.epochs = 120;
  c.validation_fraction = 0.2;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0,1)");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in [0,1)");
  }
  if (workers == 0) throw ConfigError("workers must be positive");
  ContrastiveConfig{margin}.validate();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Sums per-sample gradients in ascending sample order. Samples are processed in
// groups of `workers`, each into its own buffer, so the reduction order (and
// therefore every bit of the result) is independent of the worker count.
class GradientReducer {
 public:
  GradientReducer(const Network& net, std::size_t workers) : workers_(std::max<std::size_t>(1, workers)) {
    for (std::size_t w = 0; w < workers_; ++w) buffers_.push_back(net.zero_grads());
    total_ = net.zero_grads();
  }

  void reduce(std::size_t samples, const std::function<void(std::size_t, std::vector<Tensor>&)>& fill) {
    for (auto& t : total_) t.fill(0.0f);
    for (std::size_t start = 0; start < samples; start += workers_) {
      const std::size_t stop = std::min(samples, start + workers_);
      parallel_for(start, stop, workers_, [&](std::size_t i) {
        auto& buf = buffers_[i - start];
        for (auto& t : buf) t.fill(0.0f);
        fill(i, buf);
      });
      for (std::size_t i = start; i < stop; ++i) {
        for (std::size_t p = 0; p < total_.size(); ++p) add_inplace(total_[p], buffers_[i - start][p]);
      }
    }
  }

  void store_into(Network& net) const {
    auto& params = net.params();
    for (std::size_t p = 0; p < params.size(); ++p) params[p].grad = total_[p];
  }

  const std::vector<Tensor>& total() const { return total_; }

 private:
  std::size_t workers_;
  std::vector<std::vector<Tensor>> buffers_;
  std::vector<Tensor> total_;
};

[[noreturn]] void abort_non_finite(const char* what, std::size_t epoch, std::size_t batch, double loss,
                                   const Network& net, const std::vector<Tensor>& grads) {
  std::ostringstream msg;
  msg << what << ": non-finite value at epoch " << epoch << ", batch " << batch << " (loss " << loss
      << "); gradient norms:";
  for (std::size_t p = 0; p < grads.size(); ++p) {
    msg << ' ' << net.params()[p].name << '=' << l2_norm(grads[p].data());
  }
  throw TrainingError(msg.str());
}

void maybe_checkpoint(const TrainConfig& config, const Network& net, std::size_t epoch) {
  if (config.checkpoint_dir.empty() || config.checkpoint_every == 0) return;
  if (epoch % config.checkpoint_every != 0) return;
  save_checkpoint(net, config.checkpoint_dir / ("model_epoch_" + std::to_string(epoch) + ".ossd"));
}

std::string final_checkpoint(const TrainConfig& config, const Network& net, const AdamState& adam) {
  if (config.checkpoint_dir.empty()) return {};
  const auto path = config.checkpoint_dir / "model.ossd";
  save_checkpoint(net, path);
  save_training_state(net, adam, config.checkpoint_dir / "train_state.ossd");
  return path.string();
}

AdamState make_adam(const TrainConfig& config) {
  AdamState adam;
  adam.hyper.lr = config.lr;
  adam.hyper.beta1 = config.beta1;
  adam.hyper.beta2 = config.beta2;
  return adam;
}

PairSamplerConfig sampler_config(std::size_t side, const TrainConfig& config) {
  PairSamplerConfig sc;
  sc.side = side;
  sc.augment = config.augment_enabled;
  sc.augment_config = config.augment;
  sc.shared_augment = config.shared_augment;
  return sc;
}

bool can_sample_pairs(std::span<const LabeledImage> set) {
  const auto hist = class_histogram(set);
  if (hist.size() < 2) return false;
  for (const auto& [label, n] : hist) {
    if (n < 2) return false;
  }
  return true;
}

}  // namespace

double validate_pairs(const Network& encoder, std::span<const PairSample> pairs, double margin) {
  if (pairs.empty()) throw DomainError("validate_pairs: empty pair set");
  std::vector<double> distances;
  std::vector<PairLabel> labels;
  for (const auto& p : pairs) {
    distances.push_back(siamese_distance(encoder, p.x1, p.x2));
    labels.push_back(p.y);
  }
  return batch_contrastive_loss(distances, labels, ContrastiveConfig{margin}).loss;
}

std::vector<PairSample> siamese_validation_pairs(std::span<const LabeledImage> holdout, std::size_t side,
                                                 const TrainConfig& config) {
  std::vector<PairSample> pairs;
  if (config.validation_pairs == 0 || !can_sample_pairs(holdout)) return pairs;
  const PairSampler sampler(holdout, sampler_config(side, config));
  Rng rng = Rng::derive(config.seed, {string_key("validation-pairs")});
  for (std::size_t i = 0; i < config.validation_pairs; ++i) pairs.push_back(sampler.sample(rng));
  return pairs;
}

TrainResult train_siamese(std::span<const LabeledImage> train_set, const NetworkSpec& spec,
                          const TrainConfig& config) {
  config.validate();
  spec.validate();
  if (!can_sample_pairs(train_set)) {
    throw ConfigError("siamese training needs at least 2 classes with at least 2 images each");
  }
  const ContrastiveConfig loss_cfg{config.margin};

  DatasetSplit split = holdout_split(train_set, config.validation_fraction, config.seed);
  if (!can_sample_pairs(split.first)) {
    throw ConfigError("too few images remain for training after the validation holdout");
  }
  const Dataset& fit = split.first;
  const std::vector<PairSample> val_pairs = siamese_validation_pairs(split.second, spec.input_side, config);
  const PairSampler sampler(fit, sampler_config(spec.input_side, config));

  TrainResult result{init_network(spec, config.seed), make_adam(config), {}};
  Network& net = result.network;
  TrainReport& report = result.report;
  report.classes = sampler.classes();
  report.train_images = fit.size();
  report.validation_images = split.second.size();
  report.steps_per_epoch = config.steps_per_epoch
                               ? config.steps_per_epoch
                               : (fit.size() + config.batch_size - 1) / config.batch_size;

  GradientReducer reducer(net, config.workers);
  const std::size_t batch = config.batch_size;
  std::vector<PairSample> pairs(batch);
  std::vector<ForwardTrace<float>> traces1(batch), traces2(batch);
  std::vector<Tensor> emb1(batch), emb2(batch);
  std::vector<double> distances(batch);
  std::vector<PairLabel> labels(batch);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < report.steps_per_epoch; ++step) {
      Rng rng = Rng::derive(config.seed, {string_key("batch"), epoch, step});
      for (std::size_t i = 0; i < batch; ++i) {
        pairs[i] = sampler.sample(rng);
        labels[i] = pairs[i].y;
      }
      parallel_for(0, batch, config.workers, [&](std::size_t i) {
        emb1[i] = net.forward(pairs[i].x1, &traces1[i]);
        emb2[i] = net.forward(pairs[i].x2, &traces2[i]);
        distances[i] = euclidean_distance(emb1[i], emb2[i]);
      });
      for (double d : distances) {
        if (!std::isfinite(d)) abort_non_finite("train_siamese", epoch, step, d, net, reducer.total());
      }
      const BatchLoss loss = batch_contrastive_loss(distances, labels, loss_cfg);

      reducer.reduce(batch, [&](std::size_t i, std::vector<Tensor>& grads) {
        auto [g1, g2] = euclidean_distance_backward(emb1[i], emb2[i], static_cast<float>(loss.grads[i]));
        net.backward(traces1[i], g1, grads);
        net.backward(traces2[i], g2, grads);
      });
      bool finite = std::isfinite(loss.loss);
      for (const auto& g : reducer.total()) finite = finite && all_finite(g.data());
      if (!finite) abort_non_finite("train_siamese", epoch, step, loss.loss, net, reducer.total());

      reducer.store_into(net);
      adam_step(net.params(), result.optimizer);
      loss_sum += loss.loss;
      ++report.steps;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = report.steps_per_epoch ? loss_sum / double(report.steps_per_epoch) : 0.0;
    if (!val_pairs.empty()) rec.val_loss = validate_pairs(net, val_pairs, config.margin);
    rec.seconds = seconds_since(start);
    report.epochs.push_back(rec);
    maybe_checkpoint(config, net, epoch);
  }
  report.final_checkpoint = final_checkpoint(config, net, result.optimizer);
  return result;
}

DatasetSplit classifier_split(std::span<const LabeledImage> dataset, std::uint64_t seed, double test_fraction) {
  return holdout_split(dataset, test_fraction, seed);
}

TrainResult train_classifier(std::span<const LabeledImage> dataset, const NetworkSpec& spec,
                             const TrainConfig& config, ClassifierHead head) {
  config.validate();
  spec.validate();
  const std::vector<std::string> classes = class_order(dataset);
  if (classes.size() != spec.output_dim()) {
    throw SpecError("classifier has " + std::to_string(spec.output_dim()) + " outputs but the dataset has " +
                    std::to_string(classes.size()) + " classes");
  }
  DatasetSplit split = classifier_split(dataset, config.seed, config.validation_fraction);
  const Dataset& fit = split.first;
  const Dataset& held = split.second;
  if (fit.empty()) throw ConfigError("classifier training split is empty");
  const std::vector<std::size_t> fit_labels = label_indices(fit, classes);

  TrainResult result{init_network(spec, config.seed), make_adam(config), {}};
  Network& net = result.network;
  TrainReport& report = result.report;
  report.classes = classes;
  report.train_images = fit.size();
  report.validation_images = held.size();
  report.steps_per_epoch = config.steps_per_epoch
                               ? config.steps_per_epoch
                               : (fit.size() + config.batch_size - 1) / config.batch_size;

  // Held-out evaluation is fixed, so preprocess it once.
  std::vector<Tensor> held_inputs;
  for (const auto& item : held) held_inputs.push_back(preprocess(item.image, spec.input_side));
  const std::vector<std::size_t> held_labels = label_indices(held, classes);

  auto sample_loss = [head](const Tensor& logits, std::size_t target) {
    if (head == ClassifierHead::Softmax) return softmax_cross_entropy(logits, target);
    CrossEntropyResult ce = cross_entropy(sigmoid(logits), target);
    ce.grad = sigmoid_backward(logits, ce.grad);
    return ce;
  };

  GradientReducer reducer(net, config.workers);
  const std::size_t n = fit.size();
  const std::size_t positions = config.steps_per_epoch ? report.steps_per_epoch * config.batch_size : n;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    // Position k of the epoch maps to permutation k / n, entry k % n.
    std::vector<std::vector<std::size_t>> perms;
    auto position_index = [&](std::size_t k) {
      while (perms.size() <= k / n) {
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        Rng shuffle = Rng::derive(config.seed, {string_key("shuffle"), epoch, perms.size()});
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[shuffle.uniform_index(i)]);
        perms.push_back(std::move(perm));
      }
      return perms[k / n][k % n];
    };

    for (std::size_t step = 0; step < report.steps_per_epoch; ++step) {
      std::vector<std::size_t> members;
      for (std::size_t k = step * config.batch_size; k < std::min(positions, (step + 1) * config.batch_size); ++k) {
        members.push_back(position_index(k));
      }
      const std::size_t b = members.size();
      std::vector<Tensor> inputs(b);
      Rng aug_rng = Rng::derive(config.seed, {string_key("cnn-augment"), epoch, step});
      for (std::size_t i = 0; i < b; ++i) {
        const GrayImage& img = fit[members[i]].image;
        const AugmentParams params = draw_augment(config.augment, aug_rng);
        inputs[i] = preprocess(config.augment_enabled ? apply_augment(img, params, config.augment) : img,
                               spec.input_side);
      }
      std::vector<ForwardTrace<float>> traces(b);
      std::vector<CrossEntropyResult> losses(b);
      parallel_for(0, b, config.workers, [&](std::size_t i) {
        const Tensor logits = net.forward(inputs[i], &traces[i]);
        losses[i] = sample_loss(logits, fit_labels[members[i]]);
      });
      double batch_loss = 0.0;
      for (const auto& l : losses) batch_loss += l.loss;
      batch_loss /= double(b);
      const float scale = 1.0f / float(b);

      reducer.reduce(b, [&](std::size_t i, std::vector<Tensor>& grads) {
        Tensor g = losses[i].grad;
        for (auto& v : g.data()) v *= scale;
        net.backward(traces[i], g, grads);
      });
      bool finite = std::isfinite(batch_loss);
      for (const auto& g : reducer.total()) finite = finite && all_finite(g.data());
      if (!finite) abort_non_finite("train_classifier", epoch, step, batch_loss, net, reducer.total());
      reducer.store_into(net);
      adam_step(net.params(), result.optimizer);
      loss_sum += batch_loss;
      ++loss_count;
      ++report.steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_count ? loss_sum / double(loss_count) : 0.0;
    if (!held.empty()) {
      double val = 0.0;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < held.size(); ++i) {
        const Tensor logits = net.forward(held_inputs[i]);
        val += sample_loss(logits, held_labels[i]).loss;
        if (argmax_lowest(logits.data()) == held_labels[i]) ++correct;
      }
      rec.val_loss = val / double(held.size());
      rec.val_accuracy = double(correct) / double(held.size());
    }
    rec.seconds = seconds_since(start);
    report.epochs.push_back(rec);
    maybe_checkpoint(config, net, epoch);
  }
  if (!held.empty()) {
    report.heldout_accuracy = classifier_accuracy(net, held, classes, head).accuracy;
  }
  report.final_checkpoint = final_checkpoint(config, net, result.optimizer);
  return result;
}

}  // namespace oneshot
