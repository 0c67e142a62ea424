#include "oneshot/image.hpp"

#include <cctype>
#include <string>

#include "oneshot/checkpoint.hpp"
#include "oneshot/error.hpp"

namespace oneshot {

GrayImage::GrayImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> px)
    : width(w), height(h), pixels(std::move(px)) {
  if (pixels.size() != width * height) {
    throw ShapeError("image of " + std::to_string(width) + "x" + std::to_string(height) + " needs " +
                     std::to_string(width * height) + " pixels, got " + std::to_string(pixels.size()));
  }
}

namespace {

class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw FormatError(std::string("PGM ") + what + " is too large");
    }
    if (digits == 0) {
      throw FormatError(std::string("PGM header: expected ") + what + " at byte offset " +
                        std::to_string(pos_));
    }
    return value;
  }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t(b[at]) | std::uint32_t(b[at + 1]) << 8 | std::uint32_t(b[at + 2]) << 16 |
         std::uint32_t(b[at + 3]) << 24;
}
std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint16_t(b[at] | b[at + 1] << 8);
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("not a PNM file");
  if (bytes[1] != '5') {
    throw FormatError(std::string("PNM type P") + char(bytes[1]) +
                      " is not an 8-bit binary grayscale image (P5 required)");
  }
  PnmHeader header(bytes);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (width == 0 || height == 0) throw FormatError("PGM has zero width or height");
  if (maxval == 0 || maxval > 255) {
    throw FormatError("PGM maxval " + std::to_string(maxval) + " is not 8-bit");
  }
  if (header.pos() >= bytes.size() || !std::isspace(bytes[header.pos()])) {
    throw FormatError("PGM header not terminated by whitespace");
  }
  header.advance();
  const std::size_t start = header.pos();
  if (bytes.size() - start < width * height) {
    throw FormatError("PGM pixel data truncated: need " + std::to_string(width * height) +
                      " bytes at offset " + std::to_string(start) + ", have " +
                      std::to_string(bytes.size() - start));
  }
  std::vector<std::uint8_t> px(bytes.begin() + long(start), bytes.begin() + long(start + width * height));
  for (auto v : px) {
    if (v > maxval) throw FormatError("PGM pixel exceeds maxval");
  }
  return GrayImage(width, height, std::move(px));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

GrayImage decode_bmp(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M') throw FormatError("not a BMP file");
  const std::uint32_t data_offset = le32(bytes, 10);
  const std::uint32_t dib_size = le32(bytes, 14);
  if (dib_size < 40) throw FormatError("unsupported BMP header size " + std::to_string(dib_size));
  const auto width = static_cast<std::int32_t>(le32(bytes, 18));
  const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
  const std::uint16_t bpp = le16(bytes, 28);
  const std::uint32_t compression = le32(bytes, 30);
  std::uint32_t colors = le32(bytes, 46);
  if (bpp != 8) throw FormatError("BMP has " + std::to_string(bpp) + " bits per pixel, need 8");
  if (compression != 0) throw FormatError("compressed BMP is not supported");
  if (width <= 0 || raw_height == 0) throw FormatError("BMP has invalid dimensions");
  if (colors == 0) colors = 256;
  if (colors > 256) throw FormatError("BMP palette too large");

  const std::size_t palette_at = 14 + dib_size;
  if (palette_at + 4 * std::size_t(colors) > bytes.size()) throw FormatError("BMP palette truncated");
  std::vector<std::uint8_t> gray(256, 0);
  for (std::uint32_t i = 0; i < colors; ++i) {
    const std::uint8_t b = bytes[palette_at + 4 * i], g = bytes[palette_at + 4 * i + 1],
                       r = bytes[palette_at + 4 * i + 2];
    if (r != g || g != b) throw FormatError("BMP palette is not grayscale (multi-channel image)");
    gray[i] = g;
  }

  const std::size_t w = std::size_t(width);
  const bool top_down = raw_height < 0;
  const std::size_t h = std::size_t(top_down ? -std::int64_t(raw_height) : raw_height);
  const std::size_t stride = (w + 3) & ~std::size_t(3);
  if (data_offset + stride * h > bytes.size()) throw FormatError("BMP pixel data truncated");

  GrayImage img(w, h);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t src_row = top_down ? row : h - 1 - row;
    const std::uint8_t* src = bytes.data() + data_offset + src_row * stride;
    for (std::size_t col = 0; col < w; ++col) {
      if (src[col] >= colors) throw FormatError("BMP pixel index outside palette");
      img.at(row, col) = gray[src[col]];
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_bmp(const GrayImage& image) {
  const std::size_t stride = (image.width + 3) & ~std::size_t(3);
  const std::uint32_t data_offset = 14 + 40 + 256 * 4;
  const auto file_size = std::uint32_t(data_offset + stride * image.height);
  std::vector<std::uint8_t> out{'B', 'M'};
  put32(out, file_size);
  put32(out, 0);
  put32(out, data_offset);
  put32(out, 40);
  put32(out, std::uint32_t(image.width));
  put32(out, std::uint32_t(image.height));
  put16(out, 1);
  put16(out, 8);
  put32(out, 0);
  put32(out, std::uint32_t(stride * image.height));
  put32(out, 2835);
  put32(out, 2835);
  put32(out, 256);
  put32(out, 0);
  for (int i = 0; i < 256; ++i) {
    for (int c = 0; c < 3; ++c) out.push_back(std::uint8_t(i));
    out.push_back(0);
  }
  for (std::size_t row = image.height; row-- > 0;) {
    for (std::size_t col = 0; col < image.width; ++col) out.push_back(image.at(row, col));
    for (std::size_t pad = image.width; pad < stride; ++pad) out.push_back(0);
  }
  return out;
}

GrayImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return decode_bmp(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  throw FormatError(path.string() + ": not a PGM or BMP image");
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_pgm(image));
}

}  // namespace oneshot
