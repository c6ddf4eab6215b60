#include "agegloh/imageio.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

#include "agegloh/error.hpp"

namespace agegloh {
namespace {

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

// Cursor over the PGM byte stream; header tokens are whitespace separated and
// may be interleaved with '#' comments running to end of line.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' &&
               bytes_[pos_] != '\r')
          ++pos_;
      } else {
        break;
      }
    }
  }

  // Reads an unsigned decimal token; returns false if none is present.
  bool read_uint(long long& out, bool allow_comments) {
    if (allow_comments) {
      skip_space_and_comments();
    } else {
      while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
    }
    const std::size_t start = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) &&
           bytes_[pos_] != '#')
      ++pos_;
    empty_token_ = start == pos_;
    if (empty_token_) return false;
    const char* first = reinterpret_cast<const char*>(bytes_.data() + start);
    const char* last = reinterpret_cast<const char*>(bytes_.data() + pos_);
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && out >= 0;
  }

  bool at_end() const { return pos_ >= bytes_.size(); }
  bool token_was_empty() const { return empty_token_; }
  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::uint8_t peek() const { return bytes_[pos_]; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  bool empty_token_ = false;
};

}  // namespace

GrayImage make_image(int height, int width, std::vector<std::uint8_t> pixels) {
  if (height < 1 || width < 1 ||
      pixels.size() != static_cast<std::size_t>(height) * width) {
    throw Error(ErrorCode::InvalidParams,
                "image dimensions " + std::to_string(height) + "x" +
                    std::to_string(width) + " do not match " +
                    std::to_string(pixels.size()) + " pixels");
  }
  return GrayImage{height, width, std::move(pixels)};
}

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '2' && bytes[1] != '5')) {
    throw Error(ErrorCode::MalformedHeader, "expected PGM magic P2 or P5");
  }
  const bool binary = bytes[1] == '5';
  Reader in(bytes);
  in.advance(2);
  if (!in.at_end() && !is_space(in.peek()) && in.peek() != '#') {
    throw Error(ErrorCode::MalformedHeader, "expected PGM magic P2 or P5");
  }

  long long width = 0, height = 0, maxval = 0;
  if (!in.read_uint(width, true) || !in.read_uint(height, true)) {
    throw Error(ErrorCode::MalformedHeader, "non-numeric image dimensions");
  }
  if (width < 1 || height < 1 || width > (1 << 20) || height > (1 << 20)) {
    throw Error(ErrorCode::MalformedHeader, "image dimensions out of range");
  }
  if (!in.read_uint(maxval, true)) {
    throw Error(ErrorCode::MalformedHeader, "non-numeric maxval");
  }
  if (maxval < 1) {
    throw Error(ErrorCode::MalformedHeader, "maxval must be positive");
  }
  if (maxval > 255) {
    throw Error(ErrorCode::UnsupportedMaxval,
                "maxval " + std::to_string(maxval) + " exceeds 255");
  }

  const auto count = static_cast<std::size_t>(width * height);
  // Every pixel needs at least one byte in either encoding; reject before
  // allocating for absurd headers.
  if (in.remaining() < count) {
    throw Error(ErrorCode::TruncatedPixelData,
                "expected " + std::to_string(count) + " pixels, only " +
                    std::to_string(in.remaining()) + " bytes remain");
  }
  std::vector<std::uint8_t> pixels(count);
  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (in.at_end() || !is_space(in.peek())) {
      throw Error(ErrorCode::TruncatedPixelData, "missing raster data");
    }
    in.advance(1);
    if (in.remaining() < count) {
      throw Error(ErrorCode::TruncatedPixelData,
                  "expected " + std::to_string(count) + " pixel bytes, got " +
                      std::to_string(in.remaining()));
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint8_t v = bytes[in.pos() + i];
      if (v > maxval) {
        throw Error(ErrorCode::MalformedPixelData,
                    "pixel value exceeds maxval");
      }
      pixels[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      long long v = 0;
      if (!in.read_uint(v, false)) {
        if (in.token_was_empty() && in.at_end()) {
          throw Error(ErrorCode::TruncatedPixelData,
                      "expected " + std::to_string(count) +
                          " pixel values, got " + std::to_string(i));
        }
        throw Error(ErrorCode::MalformedPixelData,
                    "non-numeric pixel value at index " + std::to_string(i));
      }
      if (v > maxval) {
        throw Error(ErrorCode::MalformedPixelData,
                    "pixel value exceeds maxval at index " + std::to_string(i));
      }
      pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return GrayImage{static_cast<int>(height), static_cast<int>(width),
                   std::move(pixels)};
}

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::MissingFile, path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  try {
    return parse_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img,
               bool binary) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  }
  file << (binary ? "P5" : "P2") << '\n'
       << img.width << ' ' << img.height << '\n'
       << 255 << '\n';
  if (binary) {
    file.write(reinterpret_cast<const char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size()));
  } else {
    for (int r = 0; r < img.height; ++r) {
      for (int c = 0; c < img.width; ++c) {
        file << static_cast<int>(img.at(r, c)) << (c + 1 < img.width ? ' ' : '\n');
      }
    }
  }
  if (!file) {
    throw Error(ErrorCode::IoError, "write failed: " + path.string());
  }
}

const GrayImage& check_dims(const GrayImage& img, int expected_h,
                            int expected_w) {
  if (img.height != expected_h || img.width != expected_w) {
    throw Error(ErrorCode::DimensionMismatch,
                "image is " + std::to_string(img.height) + "x" +
                    std::to_string(img.width) + ", expected " +
                    std::to_string(expected_h) + "x" +
                    std::to_string(expected_w));
  }
  return img;
}

}  // namespace agegloh
