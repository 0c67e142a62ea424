#pragma once

#include <cstdint>

#include "oneshot/dataset.hpp"

namespace oneshot {

inline constexpr std::size_t kSyntheticFamilies = 6;

/// Procedural grayscale textures standing in for a defect dataset. Families:
///   0 oriented stripes, 1 blob field, 2 line scratches,
///   3 line lattice, 4 speckle, 5 smooth gradient bands.
/// Every image gets its own phase, position, brightness and contrast.
/// Labels are synthetic_class_name(class_index); sources follow "<class>_<i>.pgm".
Dataset synth_generate(std::size_t class_index, std::size_t count, std::size_t side, std::uint64_t seed);

/// synth_generate for classes 0..num_classes-1, concatenated.
Dataset synth_dataset(std::size_t num_classes, std::size_t count_per_class, std::size_t side,
                      std::uint64_t seed);

}  // namespace oneshot
