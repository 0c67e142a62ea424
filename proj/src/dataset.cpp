#include "oneshot/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "oneshot/error.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

const std::vector<std::string>& known_classes() {
  static const std::vector<std::string> classes = [] {
    std::vector<std::string> all = kNeuClasses;
    for (std::size_t i = 0; i < 6; ++i) all.push_back(synthetic_class_name(i));
    return all;
  }();
  return classes;
}

std::string synthetic_class_name(std::size_t class_index) { return "Syn" + std::to_string(class_index); }

std::string class_from_filename(const std::string& filename) {
  const auto underscore = filename.find('_');
  if (underscore == std::string::npos || underscore == 0) {
    throw LabeledDataError("file '" + filename + "' does not follow the <class>_<index> naming convention");
  }
  std::string prefix = filename.substr(0, underscore);
  const auto& known = known_classes();
  if (std::find(known.begin(), known.end(), prefix) == known.end()) {
    throw LabeledDataError("file '" + filename + "' has unknown class prefix '" + prefix + "'");
  }
  return prefix;
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Numeric part after the first underscore, for natural ordering of "Cr_2" before "Cr_10".
long file_index(const std::string& stem) {
  const auto underscore = stem.find('_');
  long value = 0;
  bool any = false;
  for (std::size_t i = underscore + 1; i < stem.size() && std::isdigit(static_cast<unsigned char>(stem[i])); ++i) {
    value = value * 10 + (stem[i] - '0');
    any = true;
  }
  return any ? value : -1;
}

}  // namespace

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw LabeledDataError("dataset directory '" + dir.string() + "' does not exist");
  }
  struct Entry {
    std::size_t class_rank;
    long index;
    std::string name;
    std::filesystem::path path;
    std::string label;
  };
  const auto& known = known_classes();
  std::vector<Entry> entries;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const std::string ext = lower(item.path().extension().string());
    if (ext != ".pgm" && ext != ".bmp") continue;
    const std::string name = item.path().filename().string();
    std::string label = class_from_filename(name);
    const auto rank = std::size_t(std::find(known.begin(), known.end(), label) - known.begin());
    entries.push_back({rank, file_index(item.path().stem().string()), name, item.path(), std::move(label)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.class_rank, a.index, a.name) < std::tie(b.class_rank, b.index, b.name);
  });

  LoadedDataset out;
  for (const auto& e : entries) {
    out.images.push_back({read_image(e.path), e.label, e.name});
    ++out.histogram[e.label];
  }
  if (out.images.empty()) out.warnings.push_back("no PGM/BMP images found in " + dir.string());
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& item : dataset) write_pgm(item.image, dir / item.source);
}

std::vector<std::string> class_order(std::span<const LabeledImage> dataset) {
  std::vector<std::string> order;
  for (const auto& item : dataset) {
    if (std::find(order.begin(), order.end(), item.label) == order.end()) order.push_back(item.label);
  }
  return order;
}

std::map<std::string, std::size_t> class_histogram(std::span<const LabeledImage> dataset) {
  std::map<std::string, std::size_t> hist;
  for (const auto& item : dataset) ++hist[item.label];
  return hist;
}

DatasetSplit split_by_class(std::span<const LabeledImage> dataset, std::span<const std::string> train_classes,
                            std::span<const std::string> test_classes) {
  const std::set<std::string> train(train_classes.begin(), train_classes.end());
  const std::set<std::string> test(test_classes.begin(), test_classes.end());
  for (const auto& c : train) {
    if (test.count(c)) throw ConfigError("class '" + c + "' is in both the train and test lists");
  }
  const auto hist = class_histogram(dataset);
  for (const auto* group : {&train, &test}) {
    for (const auto& c : *group) {
      if (!hist.count(c)) throw ConfigError("requested class '" + c + "' has no images in the dataset");
    }
  }
  DatasetSplit split;
  for (const auto& item : dataset) {
    if (train.count(item.label)) {
      split.first.push_back(item);
    } else if (test.count(item.label)) {
      split.second.push_back(item);
    }
  }
  return split;
}

DatasetSplit holdout_split(std::span<const LabeledImage> dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("holdout fraction must lie in [0,1], got " + std::to_string(fraction));
  }
  const auto classes = class_order(dataset);
  std::vector<bool> held(dataset.size(), false);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset[i].label == classes[c]) members.push_back(i);
    }
    // Fisher-Yates with the library generator keeps the split platform-independent.
    Rng rng = Rng::derive(seed, {string_key("holdout"), c});
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.uniform_index(i)]);
    const auto take = static_cast<std::size_t>(std::lround(fraction * double(members.size())));
    for (std::size_t k = 0; k < take; ++k) held[members[k]] = true;
  }
  DatasetSplit split;
  for (std::size_t i = 0; i < dataset.size(); ++i) (held[i] ? split.second : split.first).push_back(dataset[i]);
  return split;
}

std::vector<std::size_t> label_indices(std::span<const LabeledImage> dataset,
                                       std::span<const std::string> classes) {
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  for (const auto& item : dataset) {
    auto it = std::find(classes.begin(), classes.end(), item.label);
    if (it == classes.end()) throw LabeledDataError("label '" + item.label + "' is not among the model's classes");
    out.push_back(std::size_t(it - classes.begin()));
  }
  return out;
}

}  // namespace oneshot
