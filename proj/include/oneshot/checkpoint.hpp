#pragma once

// Checkpoint file layout (little-endian, no padding):
//
//   "OSSD" | u32 version=1
//   | u32 input_side | u32 n_conv | u32 channels... | u32 n_fc | u32 sizes...
//   | u32 tensor_count
//   | per tensor: u16 name_len | name (UTF-8) | u8 rank | u32 dims... | f32 data...

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oneshot/model.hpp"
#include "oneshot/optimizer.hpp"

namespace oneshot {

inline constexpr char kCheckpointMagic[4] = {'O', 'S', 'S', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  NetworkSpec spec;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
/// Throws FormatError naming the byte offset of the first inconsistency.
CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Network& network, const std::filesystem::path& path);
/// `final_relu` is a runtime option and is not part of the file.
Network load_checkpoint(const std::filesystem::path& path, bool final_relu = false);

/// Model tensors plus Adam moments ("adam.m.<name>", "adam.v.<name>"), the
/// step counter ("adam.t") and hyperparameters ("adam.hyper": lr, beta1, beta2, eps, each as three floats summing exactly to the double).
void save_training_state(const Network& network, const AdamState& state,
                         const std::filesystem::path& path);
std::pair<Network, AdamState> load_training_state(const std::filesystem::path& path,
                                                  bool final_relu = false);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace oneshot
