#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "agegloh/imageio.hpp"

namespace agegloh {

/// Per-pixel gradient magnitude and orientation, row-major like GrayImage.
/// Orientation is the angle of (gx, gy) in [0, 2pi) with gy measured along
/// increasing row index.
struct GradientField {
  int height = 0;
  int width = 0;
  std::vector<double> magnitude;
  std::vector<double> orientation;

  double mag(int row, int col) const {
    return magnitude[static_cast<std::size_t>(row) * width + col];
  }
  double angle(int row, int col) const {
    return orientation[static_cast<std::size_t>(row) * width + col];
  }
};

/// Dense-grid log-polar descriptor configuration. The defaults give
/// 360 patches x 136 bins = 48,960 dimensions on a 68x62 face.
struct GlohParams {
  int patch_size = 10;
  int stride = 3;
  std::vector<double> radii{2.0, 3.0, 5.0};
  int n_sectors = 8;
  int n_orient = 8;
  std::optional<double> clip_threshold = 0.2;

  // Central disc plus one ring of sectors per outer radius.
  int spatial_bins() const { return 1 + 2 * n_sectors; }
  int block_dim() const { return spatial_bins() * n_orient; }

  /// Throws InvalidParams if any invariant is violated.
  void validate() const;
};

struct PatchOrigin {
  int row = 0;
  int col = 0;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

struct FeatureVector {
  Eigen::VectorXd values;
  int block_dim = 0;

  Eigen::Index size() const { return values.size(); }
  auto block(Eigen::Index patch) const {
    return values.segment(patch * block_dim, block_dim);
  }
};

/// Central differences inside, one-sided differences on the border.
GradientField compute_gradients(const GrayImage& img);

std::vector<PatchOrigin> patch_grid(int height, int width,
                                    const GlohParams& params);

/// Spatial bin of the offset (dr, dc) from the patch center, or -1 when it
/// falls outside the outermost radius.
int spatial_bin(double dr, double dc, const GlohParams& params);

int orientation_bin(double angle, int n_orient);

std::vector<double> patch_descriptor(const GradientField& grad,
                                     PatchOrigin origin,
                                     const GlohParams& params);

/// L2 normalize, optionally clip each entry and renormalize. The zero vector
/// maps to itself.
std::vector<double> normalize_descriptor(std::vector<double> vec,
                                         std::optional<double> clip_threshold);

std::size_t feature_length(int height, int width, const GlohParams& params);

FeatureVector extract_gloh(const GrayImage& img, const GlohParams& params);

}  // namespace agegloh
