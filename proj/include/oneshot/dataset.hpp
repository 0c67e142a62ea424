#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oneshot/image.hpp"

namespace oneshot {

/// NEU surface-defect classes: crazing, inclusion, patches, pitted surface,
/// rolled-in scale, scratches.
inline const std::vector<std::string> kNeuClasses{"Cr", "In", "Pa", "PS", "RS", "Sc"};
inline const std::vector<std::string> kDefaultTrainClasses{"RS", "Pa", "In"};
inline const std::vector<std::string> kDefaultTestClasses{"Cr", "PS", "Sc"};

/// Labels accepted by load_dataset: the NEU classes and the synthetic families.
const std::vector<std::string>& known_classes();
std::string synthetic_class_name(std::size_t class_index);

struct LabeledImage {
  GrayImage image;
  std::string label;
  std::string source;  // file name, e.g. "Cr_17.pgm"
};

using Dataset = std::vector<LabeledImage>;

struct LoadedDataset {
  Dataset images;
  std::map<std::string, std::size_t> histogram;
  std::vector<std::string> warnings;
};

/// Class of a file named "<class>_<index>.<ext>". Throws LabeledDataError for an
/// unknown or missing prefix.
std::string class_from_filename(const std::string& filename);

/// Loads every *.pgm / *.bmp in `dir` (sorted by class, then numeric index).
/// An empty directory yields an empty dataset plus a warning.
LoadedDataset load_dataset(const std::filesystem::path& dir);

/// Writes the dataset as "<source>" PGM files into `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Distinct labels in order of first appearance. This order defines class
/// indices everywhere (tie-breaking, classifier outputs).
std::vector<std::string> class_order(std::span<const LabeledImage> dataset);
std::map<std::string, std::size_t> class_histogram(std::span<const LabeledImage> dataset);

struct DatasetSplit {
  Dataset first;
  Dataset second;
};

/// Partitions by class. Throws ConfigError when the lists overlap or name a
/// class that has no images.
DatasetSplit split_by_class(std::span<const LabeledImage> dataset, std::span<const std::string> train_classes,
                            std::span<const std::string> test_classes);

/// Stratified split: round(fraction * n) images of every class go to `second`.
/// Relative order is preserved in both halves.
DatasetSplit holdout_split(std::span<const LabeledImage> dataset, double fraction, std::uint64_t seed);

/// Index of each image's label within `classes`. Throws LabeledDataError for a
/// label not in the list.
std::vector<std::size_t> label_indices(std::span<const LabeledImage> dataset,
                                       std::span<const std::string> classes);

}  // namespace oneshot
