#include "oneshot/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "oneshot/checkpoint.hpp"

namespace oneshot {
namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string sha1_hex(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, a.data(), a.size());
  EVP_DigestUpdate(ctx, b.data(), b.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace

nlohmann::json to_json(const NetworkSpec& spec) {
  return {{"input_side", spec.input_side},
          {"conv_channels", spec.conv_channels},
          {"fc_sizes", spec.fc_sizes},
          {"final_relu", spec.final_relu}};
}

NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_side = j.at("input_side").get<std::size_t>();
  spec.conv_channels = j.at("conv_channels").get<std::vector<std::size_t>>();
  spec.fc_sizes = j.at("fc_sizes").get<std::vector<std::size_t>>();
  spec.final_relu = j.value("final_relu", false);
  spec.validate();
  return spec;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j{{"protocol", report.protocol},
                   {"accuracy", report.accuracy},
                   {"episodes", report.episodes},
                   {"queries", report.queries},
                   {"classes", report.classes},
                   {"confusion", report.confusion}};
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [k, v] : report.stats) stats[k] = number_or_null(v);
  j["stats"] = stats;
  return j;
}

nlohmann::json to_json(const TrainReport& report) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", number_or_null(e.val_loss)},
                      {"val_accuracy", number_or_null(e.val_accuracy)}});
  }
  return {{"epochs", epochs},
          {"steps", report.steps},
          {"steps_per_epoch", report.steps_per_epoch},
          {"train_images", report.train_images},
          {"validation_images", report.validation_images},
          {"heldout_accuracy", number_or_null(report.heldout_accuracy)},
          {"classes", report.classes},
          {"final_checkpoint", report.final_checkpoint}};
}

nlohmann::json timing_json(const TrainReport& report) {
  nlohmann::json seconds = nlohmann::json::array();
  double total = 0.0;
  for (const auto& e : report.epochs) {
    seconds.push_back(e.seconds);
    total += e.seconds;
  }
  return {{"epoch_seconds", seconds}, {"total_seconds", total}};
}

nlohmann::json timing_json(const LatencyStats& stats) {
  return {{"mean_seconds", stats.mean}, {"stddev_seconds", stats.stddev}, {"samples", stats.samples}};
}

void write_curve_csv(const TrainReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(9);
  out << "epoch,train_loss,val_loss,seconds\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (std::isfinite(e.val_loss)) out << e.val_loss;
    out << ',' << e.seconds << '\n';
  }
}

void write_confusion_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "true\\predicted";
  for (const auto& c : report.classes) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < report.confusion.size(); ++r) {
    out << (r < report.classes.size() ? report.classes[r] : std::to_string(r));
    for (auto v : report.confusion[r]) out << ',' << v;
    out << '\n';
  }
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  const std::string text = dump_json(doc);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string git_blob_hash(std::span<const std::uint8_t> bytes) {
  const std::string header = "blob " + std::to_string(bytes.size());
  std::vector<std::uint8_t> prefix(header.begin(), header.end());
  prefix.push_back(0);
  return sha1_hex(prefix, bytes);
}

std::string file_content_hash(const std::filesystem::path& path) { return git_blob_hash(read_file_bytes(path)); }

std::string directory_content_hash(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  for (const auto& item : std::filesystem::directory_iterator(dir)) {
    if (item.is_regular_file()) names.push_back(item.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  std::string listing;
  for (const auto& name : names) listing += name + '\0' + file_content_hash(dir / name) + '\n';
  return sha1_hex(std::span(reinterpret_cast<const std::uint8_t*>(listing.data()), listing.size()), {});
}

}  // namespace oneshot
