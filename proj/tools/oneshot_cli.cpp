// oneshot: command-line driver for training and evaluating the Siamese
// one-shot defect recognizer and its baselines.
//
// Exit codes: 0 success, 1 data/model error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "oneshot/checkpoint.hpp"
#include "oneshot/dataset.hpp"
#include "oneshot/evaluation.hpp"
#include "oneshot/report.hpp"
#include "oneshot/synth.hpp"
#include "oneshot/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oneshot;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(item, &used);
    if (used != item.size() || v == 0) throw ConfigError("expected a list of positive integers, got '" + text + "'");
    out.push_back(v);
  }
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ONESHOT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("ONESHOT_SEED is not an integer: ") + env);
    }
  }
  return 0;
}

// Architecture flags shared by the training commands.
struct SpecFlags {
  double scale = 1.0;
  std::size_t input_side = 0;
  std::string channels;
  std::string fc;
  bool embedding_relu = false;

  void add(CLI::App& cmd) {
    cmd.add_option("--spec-scale", scale, "Shrink input side, channels and hidden widths by this factor")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--input-side", input_side, "Override the network input side (pixels)");
    cmd.add_option("--channels", channels, "Override conv channels, e.g. 4,8,8");
    cmd.add_option("--fc", fc, "Override dense layer sizes, e.g. 500,500,5");
  }

  NetworkSpec resolve(NetworkSpec base) const {
    NetworkSpec spec = scale_spec(base, scale);
    if (input_side) spec.input_side = input_side;
    if (!channels.empty()) spec.conv_channels = split_sizes(channels);
    if (!fc.empty()) spec.fc_sizes = split_sizes(fc);
    spec.final_relu = embedding_relu;
    spec.validate();
    return spec;
  }
};

struct OutputTarget {
  std::string path;

  void emit(const json& doc) const {
    if (path.empty()) {
      std::cout << dump_json(doc);
    } else {
      write_json(doc, path);
    }
  }
  void manifest(const json& doc) const {
    if (!path.empty()) write_json(doc, path + ".manifest.json");
  }
};

json manifest_base(const std::string& command, std::uint64_t seed) {
  return {{"command", command}, {"format", 1}, {"seed", seed}};
}

Dataset load_or_fail(const std::string& dir) {
  LoadedDataset loaded = load_dataset(dir);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(loaded.images);
}

std::vector<std::string> resolve_classes(const std::string& text, const Dataset& data) {
  if (text.empty() || text == "all") return class_order(data);
  return split_list(text);
}

Dataset select_classes(const Dataset& data, const std::vector<std::string>& classes) {
  return split_by_class(data, classes, std::span<const std::string>{}).first;
}

// Optional stratified holdout shared by train-siamese and eval-oneshot, so a
// model can be trained on 80% of some classes and evaluated on the other 20%.
struct HoldoutFlags {
  double fraction = 0.0;
  std::uint64_t seed = 0;
  void add(CLI::App& cmd, const char* what) {
    cmd.add_option("--holdout", fraction, what)->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--holdout-seed", seed, "Seed of the stratified holdout split");
  }
  json to_json() const { return {{"fraction", fraction}, {"seed", seed}}; }
};

// ---------------------------------------------------------------------------

struct SynthCmd {
  std::size_t classes = kSyntheticFamilies;
  std::size_t count = 60;
  std::size_t side = 64;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Write a synthetic texture dataset (<class>_<index>.pgm)");
    cmd->add_option("--classes", classes, "Number of texture families (1-6)")->check(CLI::Range(1, 6));
    cmd->add_option("--count", count, "Images per class")->check(CLI::PositiveNumber);
    cmd->add_option("--side", side, "Image side in pixels")->check(CLI::Range(8, 4096));
    cmd->add_option("--seed", seed, "Generator seed");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("synth", seed);
    m["config"] = {{"classes", classes}, {"count", count}, {"side", side}};
    m["outputs"] = {{"dir", out}};
    fs::create_directories(out);
    write_json(m, fs::path(out) / "manifest.json");
    write_dataset(synth_dataset(classes, count, side, seed), out);
  }
};

// The checkpoint path is stored relative to the run directory so that reports
// from identical runs match byte for byte wherever they were written.
void write_train_report(TrainReport report, const fs::path& out) {
  if (!report.final_checkpoint.empty()) report.final_checkpoint = fs::path(report.final_checkpoint).filename().string();
  write_json(to_json(report), out / "report.json");
}

struct TrainSiameseCmd {
  std::string data;
  std::string train_classes = "RS,Pa,In";
  TrainConfig config;
  SpecFlags spec;
  HoldoutFlags holdout;
  bool no_augment = false;
  bool dry_run = false;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train-siamese", "Train the Siamese encoder with contrastive loss");
    cmd->add_option("--data", data, "Dataset directory")->required();
    cmd->add_option("--train-classes", train_classes, "Comma-separated training classes, or 'all'");
    cmd->add_option("--epochs", config.epochs);
    cmd->add_option("--batch-size", config.batch_size)->check(CLI::PositiveNumber);
    cmd->add_option("--lr", config.lr)->check(CLI::PositiveNumber);
    cmd->add_option("--beta1", config.beta1);
    cmd->add_option("--beta2", config.beta2);
    cmd->add_option("--margin", config.margin)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", config.seed, "Seed (default: $ONESHOT_SEED or 0)");
    cmd->add_option("--steps-per-epoch", config.steps_per_epoch, "0 = ceil(images / batch size)");
    cmd->add_option("--validation-fraction", config.validation_fraction);
    cmd->add_option("--validation-pairs", config.validation_pairs);
    cmd->add_option("--workers", config.workers)->check(CLI::PositiveNumber);
    cmd->add_option("--checkpoint-every", config.checkpoint_every, "Epoch interval for extra checkpoints");
    cmd->add_flag("--shared-augment", config.shared_augment, "Apply one augmentation draw to both pair members");
    cmd->add_flag("--no-augment", no_augment, "Disable augmentation");
    cmd->add_flag("--embedding-relu", spec.embedding_relu, "ReLU on the embedding layer");
    cmd->add_flag("--dry-run", dry_run, "Write the manifest and stop");
    spec.add(*cmd);
    holdout.add(*cmd, "Train only on the stratified complement of this test fraction");
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    config.augment_enabled = !no_augment;
    config.checkpoint_dir = out;
    const NetworkSpec net_spec = spec.resolve(default_encoder_spec());
    config.validate();

    json m = manifest_base("train-siamese", config.seed);
    m["config"] = {{"train_classes", train_classes},
                   {"epochs", config.epochs},
                   {"batch_size", config.batch_size},
                   {"lr", config.lr},
                   {"beta1", config.beta1},
                   {"beta2", config.beta2},
                   {"margin", config.margin},
                   {"steps_per_epoch", config.steps_per_epoch},
                   {"validation_fraction", config.validation_fraction},
                   {"validation_pairs", config.validation_pairs},
                   {"augment", config.augment_enabled},
                   {"shared_augment", config.shared_augment},
                   {"workers", config.workers},
                   {"checkpoint_every", config.checkpoint_every},
                   {"holdout", holdout.to_json()},
                   {"spec", to_json(net_spec)}};
    m["inputs"] = {{"data", data}, {"data_hash", directory_content_hash(data)}};
    m["outputs"] = {{"dir", out}};
    fs::create_directories(out);
    write_json(m, fs::path(out) / "manifest.json");
    if (dry_run) return;

    Dataset all = load_or_fail(data);
    if (holdout.fraction > 0.0) all = holdout_split(all, holdout.fraction, holdout.seed).first;
    const Dataset train = select_classes(all, resolve_classes(train_classes, all));
    const TrainResult result = train_siamese(train, net_spec, config);
    write_curve_csv(result.report, fs::path(out) / "curve.csv");
    write_train_report(result.report, out);
    write_json(timing_json(result.report), fs::path(out) / "timing.json");
  }
};

struct TrainCnnCmd {
  std::string data;
  std::string classes = "all";
  TrainConfig config = TrainConfig::classifier_defaults();
  SpecFlags spec;
  std::string head = "sigmoid";
  bool no_augment = false;
  bool dry_run = false;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train-cnn", "Train the baseline CNN classifier");
    cmd->add_option("--data", data, "Dataset directory")->required();
    cmd->add_option("--classes", classes, "Comma-separated classes, or 'all'");
    cmd->add_option("--epochs", config.epochs);
    cmd->add_option("--batch-size", config.batch_size)->check(CLI::PositiveNumber);
    cmd->add_option("--lr", config.lr)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", config.seed, "Seed; also fixes the 80/20 split");
    cmd->add_option("--holdout", config.validation_fraction, "Held-out test fraction");
    cmd->add_option("--steps-per-epoch", config.steps_per_epoch);
    cmd->add_option("--workers", config.workers)->check(CLI::PositiveNumber);
    cmd->add_option("--checkpoint-every", config.checkpoint_every);
    cmd->add_option("--head", head, "Output head")->check(CLI::IsMember({"sigmoid", "softmax"}));
    cmd->add_flag("--no-augment", no_augment);
    cmd->add_flag("--dry-run", dry_run, "Write the manifest and stop");
    spec.add(*cmd);
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    config.augment_enabled = !no_augment;
    config.checkpoint_dir = out;
    config.validate();
    Dataset all = load_or_fail(data);
    const auto cls = resolve_classes(classes, all);
    const Dataset set = select_classes(all, cls);
    const auto order = class_order(set);
    const NetworkSpec net_spec = spec.resolve(default_classifier_spec(order.size()));

    json m = manifest_base("train-cnn", config.seed);
    m["config"] = {{"classes", order},
                   {"epochs", config.epochs},
                   {"batch_size", config.batch_size},
                   {"lr", config.lr},
                   {"holdout", config.validation_fraction},
                   {"steps_per_epoch", config.steps_per_epoch},
                   {"augment", config.augment_enabled},
                   {"head", head},
                   {"workers", config.workers},
                   {"spec", to_json(net_spec)}};
    m["inputs"] = {{"data", data}, {"data_hash", directory_content_hash(data)}};
    m["outputs"] = {{"dir", out}};
    fs::create_directories(out);
    write_json(m, fs::path(out) / "manifest.json");
    if (dry_run) return;

    const TrainResult result = train_classifier(
        set, net_spec, config, head == "softmax" ? ClassifierHead::Softmax : ClassifierHead::Sigmoid);
    write_curve_csv(result.report, fs::path(out) / "curve.csv");
    write_train_report(result.report, out);
    write_json(timing_json(result.report), fs::path(out) / "timing.json");
  }
};

struct EvalOneshotCmd {
  std::string data;
  std::string checkpoint;
  std::string test_classes = "Cr,PS,Sc";
  EpisodeConfig episodes;
  HoldoutFlags holdout;
  bool embedding_relu = false;
  std::string confusion_csv;
  OutputTarget out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-oneshot", "N-way one-shot accuracy on test classes");
    cmd->add_option("--data", data)->required();
    cmd->add_option("--checkpoint", checkpoint)->required();
    cmd->add_option("--test-classes", test_classes, "Comma-separated classes, or 'all'");
    cmd->add_option("--episodes", episodes.episodes)->check(CLI::PositiveNumber);
    cmd->add_option("--queries", episodes.queries_per_class, "Queries per class per episode");
    cmd->add_option("--seed", episodes.seed);
    cmd->add_option("--workers", episodes.workers)->check(CLI::PositiveNumber);
    cmd->add_flag("--embedding-relu", embedding_relu);
    holdout.add(*cmd, "Evaluate only the stratified holdout of this fraction");
    cmd->add_option("--confusion-csv", confusion_csv);
    cmd->add_option("--out", out.path, "Report path (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("eval-oneshot", episodes.seed);
    m["config"] = {{"test_classes", test_classes},
                   {"episodes", episodes.episodes},
                   {"queries_per_class", episodes.queries_per_class},
                   {"holdout", holdout.to_json()}};
    m["inputs"] = {{"data", data},
                   {"data_hash", directory_content_hash(data)},
                   {"checkpoint", checkpoint},
                   {"checkpoint_hash", file_content_hash(checkpoint)}};
    out.manifest(m);
    const Network net = load_checkpoint(checkpoint, embedding_relu);
    Dataset all = load_or_fail(data);
    if (holdout.fraction > 0.0) all = holdout_split(all, holdout.fraction, holdout.seed).second;
    const Dataset test = select_classes(all, resolve_classes(test_classes, all));
    const EvalReport report = oneshot_nway(net, test, episodes);
    if (!confusion_csv.empty()) write_confusion_csv(report, confusion_csv);
    out.emit(to_json(report));
  }
};

struct EvalVerifyCmd {
  std::string data;
  std::string checkpoint;
  std::string test_classes = "Cr,PS,Sc";
  std::size_t pairs = 1000;
  double margin = 2.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool augment = false;
  bool embedding_relu = false;
  std::string pair_csv;
  OutputTarget out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-verify", "Pair verification accuracy with threshold D < margin");
    cmd->add_option("--data", data)->required();
    cmd->add_option("--checkpoint", checkpoint)->required();
    cmd->add_option("--test-classes", test_classes);
    cmd->add_option("--pairs", pairs)->check(CLI::PositiveNumber);
    cmd->add_option("--margin", margin)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed);
    cmd->add_option("--workers", workers)->check(CLI::PositiveNumber);
    cmd->add_flag("--augment", augment, "Augment test pairs like training pairs");
    cmd->add_flag("--embedding-relu", embedding_relu);
    cmd->add_option("--pair-csv", pair_csv, "Dump the sampled pair sequence");
    cmd->add_option("--out", out.path);
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("eval-verify", seed);
    m["config"] = {{"test_classes", test_classes}, {"pairs", pairs}, {"margin", margin}, {"augment", augment}};
    m["inputs"] = {{"data", data},
                   {"data_hash", directory_content_hash(data)},
                   {"checkpoint", checkpoint},
                   {"checkpoint_hash", file_content_hash(checkpoint)}};
    out.manifest(m);
    const Network net = load_checkpoint(checkpoint, embedding_relu);
    const Dataset all = load_or_fail(data);
    const Dataset test = select_classes(all, resolve_classes(test_classes, all));
    PairSamplerConfig sc;
    sc.side = net.spec().input_side;
    sc.augment = augment;
    const PairSampler sampler(test, sc);
    Rng rng = Rng::derive(seed, {string_key("verify-pairs")});
    std::vector<PairSample> sampled;
    for (std::size_t i = 0; i < pairs; ++i) sampled.push_back(sampler.sample(rng));
    if (!pair_csv.empty()) write_pair_csv(pair_csv, sampled, test);
    out.emit(to_json(verification_accuracy(net, sampled, margin, workers)));
  }
};

struct EvalKnnCmd {
  std::string data;
  std::string classes = "all";
  std::size_t side = 100;
  EpisodeConfig episodes;
  std::string confusion_csv;
  OutputTarget out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-knn", "Raw-pixel 1-NN baseline with one prototype per class");
    cmd->add_option("--data", data)->required();
    cmd->add_option("--classes", classes, "Comma-separated classes, or 'all'");
    cmd->add_option("--side", side, "Image side after resizing")->check(CLI::Range(8, 4096));
    cmd->add_option("--episodes", episodes.episodes)->check(CLI::PositiveNumber);
    cmd->add_option("--queries", episodes.queries_per_class);
    cmd->add_option("--seed", episodes.seed);
    cmd->add_option("--confusion-csv", confusion_csv);
    cmd->add_option("--out", out.path);
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("eval-knn", episodes.seed);
    m["config"] = {{"classes", classes},
                   {"side", side},
                   {"episodes", episodes.episodes},
                   {"queries_per_class", episodes.queries_per_class}};
    m["inputs"] = {{"data", data}, {"data_hash", directory_content_hash(data)}};
    out.manifest(m);
    const Dataset all = load_or_fail(data);
    const Dataset test = select_classes(all, resolve_classes(classes, all));
    const EvalReport report = knn_episodic(test, side, episodes);
    if (!confusion_csv.empty()) write_confusion_csv(report, confusion_csv);
    out.emit(to_json(report));
  }
};

struct EvalCnnCmd {
  std::string data;
  std::string checkpoint;
  std::string classes = "all";
  double holdout = 0.2;
  std::uint64_t seed = 0;
  std::string head = "sigmoid";
  std::string confusion_csv;
  OutputTarget out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval-cnn", "Held-out accuracy of the baseline CNN");
    cmd->add_option("--data", data)->required();
    cmd->add_option("--checkpoint", checkpoint)->required();
    cmd->add_option("--classes", classes, "Must match the classes used by train-cnn");
    cmd->add_option("--holdout", holdout, "Held-out fraction used by train-cnn");
    cmd->add_option("--seed", seed, "Seed used by train-cnn (fixes the split)");
    cmd->add_option("--head", head)->check(CLI::IsMember({"sigmoid", "softmax"}));
    cmd->add_option("--confusion-csv", confusion_csv);
    cmd->add_option("--out", out.path);
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("eval-cnn", seed);
    m["config"] = {{"classes", classes}, {"holdout", holdout}, {"head", head}};
    m["inputs"] = {{"data", data},
                   {"data_hash", directory_content_hash(data)},
                   {"checkpoint", checkpoint},
                   {"checkpoint_hash", file_content_hash(checkpoint)}};
    out.manifest(m);
    const Network net = load_checkpoint(checkpoint);
    const Dataset all = load_or_fail(data);
    const Dataset set = select_classes(all, resolve_classes(classes, all));
    const auto order = class_order(set);
    const Dataset held = classifier_split(set, seed, holdout).second;
    const EvalReport report = classifier_accuracy(
        net, held, order, head == "softmax" ? ClassifierHead::Softmax : ClassifierHead::Sigmoid);
    if (!confusion_csv.empty()) write_confusion_csv(report, confusion_csv);
    out.emit(to_json(report));
  }
};

struct LatencyCmd {
  std::string checkpoint;
  std::string data;
  std::size_t count = 8;
  std::size_t repetitions = 5;
  std::uint64_t seed = 0;
  OutputTarget out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("latency", "Mean seconds per encoded image on one thread");
    cmd->add_option("--checkpoint", checkpoint)->required();
    cmd->add_option("--data", data, "Images to encode (default: synthetic)");
    cmd->add_option("--count", count, "Number of images")->check(CLI::PositiveNumber);
    cmd->add_option("--repetitions", repetitions);
    cmd->add_option("--seed", seed);
    cmd->add_option("--out", out.path);
    cmd->callback([this] { run(); });
  }

  void run() {
    json m = manifest_base("latency", seed);
    m["config"] = {{"count", count}, {"repetitions", repetitions}};
    m["inputs"] = {{"checkpoint", checkpoint}, {"checkpoint_hash", file_content_hash(checkpoint)}, {"data", data}};
    out.manifest(m);
    const Network net = load_checkpoint(checkpoint);
    const std::size_t side = net.spec().input_side;
    Dataset images = data.empty() ? synth_dataset(kSyntheticFamilies, (count + kSyntheticFamilies - 1) / kSyntheticFamilies, side, seed)
                                  : load_or_fail(data);
    if (images.size() > count) images.resize(count);
    std::vector<Tensor> inputs;
    for (const auto& item : images) inputs.push_back(preprocess(item.image, side));
    const LatencyStats stats = measure_latency(net, inputs, repetitions);
    json doc = timing_json(stats);
    doc["protocol"] = "latency";
    doc["parameters"] = net.parameter_count();
    out.emit(doc);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot surface-defect recognition with a Siamese network"};
  app.require_subcommand(1);
  SynthCmd synth;
  TrainSiameseCmd train_siamese_cmd;
  TrainCnnCmd train_cnn;
  EvalOneshotCmd eval_oneshot;
  EvalVerifyCmd eval_verify;
  EvalKnnCmd eval_knn;
  EvalCnnCmd eval_cnn;
  LatencyCmd latency;

  // Seeds fall back to $ONESHOT_SEED when no --seed is given.
  try {
    const std::uint64_t seed = default_seed();
    synth.seed = seed;
    train_siamese_cmd.config.seed = seed;
    train_cnn.config.seed = seed;
    eval_oneshot.episodes.seed = seed;
    eval_verify.seed = seed;
    eval_knn.episodes.seed = seed;
    eval_cnn.seed = seed;
    latency.seed = seed;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  synth.add(app);
  train_siamese_cmd.add(app);
  train_cnn.add(app);
  eval_oneshot.add(app);
  eval_verify.add(app);
  eval_knn.add(app);
  eval_cnn.add(app);
  latency.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
