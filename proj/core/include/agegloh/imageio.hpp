#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace agegloh {

// Aligned grayscale face image, row-major with top-left origin.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

/// Builds an image, throwing InvalidParams when dimensions and pixel count
/// disagree.
GrayImage make_image(int height, int width, std::vector<std::uint8_t> pixels);

/// Parses a binary (P5) or ASCII (P2) PGM held in memory. Header comments
/// starting with '#' are skipped. Either returns a complete image or throws.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);

GrayImage load_pgm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const GrayImage& img,
               bool binary = true);

/// Returns `img` unchanged if it is expected_h x expected_w, otherwise throws
/// DimensionMismatch.
const GrayImage& check_dims(const GrayImage& img, int expected_h,
                            int expected_w);

}  // namespace agegloh
