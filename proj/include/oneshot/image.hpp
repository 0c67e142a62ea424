#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace oneshot {

/// 8-bit single-channel image, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h, fill) {}
  GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px);

  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5), maxval <= 255. Comments in the header are skipped.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);

/// Uncompressed 8-bit palettized BMP with a gray palette (R == G == B).
GrayImage decode_bmp(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_bmp(const GrayImage& image);

/// Dispatches on the file's magic bytes. Throws FormatError for anything that
/// is not an 8-bit single-channel PGM or BMP.
GrayImage read_image(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

}  // namespace oneshot
