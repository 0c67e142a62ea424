#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "oneshot/evaluation.hpp"
#include "oneshot/model.hpp"
#include "oneshot/training.hpp"

namespace oneshot {

// JSON documents here contain no wall-clock data, so identical runs produce
// identical bytes. Timings are serialized separately by the *_timing helpers.

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const TrainReport& report);
nlohmann::json timing_json(const TrainReport& report);
nlohmann::json timing_json(const LatencyStats& stats);

/// "epoch,train_loss,val_loss,seconds"
void write_curve_csv(const TrainReport& report, const std::filesystem::path& path);
/// Header "true\\predicted,<classes...>", one row per true class.
void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
std::string dump_json(const nlohmann::json& doc);

/// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_hash(std::span<const std::uint8_t> bytes);
/// Tree-style id over the regular files of `dir` (sorted by name).
std::string directory_content_hash(const std::filesystem::path& dir);
std::string file_content_hash(const std::filesystem::path& path);

}  // namespace oneshot
