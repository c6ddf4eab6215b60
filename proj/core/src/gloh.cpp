#include "agegloh/gloh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "agegloh/error.hpp"

namespace agegloh {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

int angular_bin(double angle, int n) {
  const int b = static_cast<int>(std::floor(angle / (kTwoPi / n)));
  return std::clamp(b, 0, n - 1);
}

// Spatial bin of every pixel in a patch, row-major within the patch. Depends
// only on the parameters so one table serves every patch of an image.
std::vector<int> spatial_table(const GlohParams& params) {
  const int p = params.patch_size;
  const double center = (p - 1) / 2.0;
  std::vector<int> table(static_cast<std::size_t>(p) * p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c)
      table[static_cast<std::size_t>(r) * p + c] =
          spatial_bin(r - center, c - center, params);
  return table;
}

void accumulate_patch(const GradientField& grad, PatchOrigin origin,
                      const GlohParams& params, std::span<const int> table,
                      std::span<double> hist) {
  const int p = params.patch_size;
  std::fill(hist.begin(), hist.end(), 0.0);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      const int sbin = table[static_cast<std::size_t>(r) * p + c];
      if (sbin < 0) continue;
      const double m = grad.mag(origin.row + r, origin.col + c);
      if (m == 0.0) continue;
      const int obin =
          orientation_bin(grad.angle(origin.row + r, origin.col + c),
                          params.n_orient);
      hist[static_cast<std::size_t>(sbin) * params.n_orient + obin] += m;
    }
  }
}

void normalize_in_place(std::span<double> v, std::optional<double> clip) {
  double norm2 = 0.0;
  for (double x : v) {
    if (x < 0.0) throw Error(ErrorCode::NegativeEntry, "negative histogram entry");
    norm2 += x * x;
  }
  if (norm2 == 0.0) return;
  double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  if (!clip) return;
  norm2 = 0.0;
  for (double& x : v) {
    x = std::min(x, *clip);
    norm2 += x * x;
  }
  inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

}  // namespace

void GlohParams::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidParams, what);
  };
  if (patch_size < 1) fail("patch_size must be >= 1");
  if (stride < 1) fail("stride must be >= 1");
  if (n_sectors < 1) fail("n_sectors must be >= 1");
  if (n_orient < 1) fail("n_orient must be >= 1");
  if (radii.size() != 3) fail("exactly 3 radii are required");
  if (radii[0] <= 0.0 || radii[1] <= radii[0] || radii[2] <= radii[1])
    fail("radii must be positive and strictly ascending");
  if (radii[2] > patch_size / 2.0 + 1.0)
    fail("outer radius exceeds patch_size/2 + 1");
  if (clip_threshold && !(*clip_threshold > 0.0 && *clip_threshold <= 1.0))
    fail("clip_threshold must lie in (0, 1]");
}

GradientField compute_gradients(const GrayImage& img) {
  const int h = img.height, w = img.width;
  GradientField g{h, w, std::vector<double>(img.pixels.size()),
                  std::vector<double>(img.pixels.size())};
  auto I = [&](int r, int c) { return static_cast<double>(img.at(r, c)); };
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double gx = 0.0, gy = 0.0;
      if (w > 1) {
        if (c == 0) gx = I(r, 1) - I(r, 0);
        else if (c == w - 1) gx = I(r, w - 1) - I(r, w - 2);
        else gx = (I(r, c + 1) - I(r, c - 1)) / 2.0;
      }
      if (h > 1) {
        if (r == 0) gy = I(1, c) - I(0, c);
        else if (r == h - 1) gy = I(h - 1, c) - I(h - 2, c);
        else gy = (I(r + 1, c) - I(r - 1, c)) / 2.0;
      }
      const auto i = static_cast<std::size_t>(r) * w + c;
      g.magnitude[i] = std::sqrt(gx * gx + gy * gy);
      g.orientation[i] = wrap_angle(std::atan2(gy, gx));
    }
  }
  return g;
}

std::vector<PatchOrigin> patch_grid(int height, int width,
                                    const GlohParams& params) {
  params.validate();
  if (height < params.patch_size || width < params.patch_size) {
    throw Error(ErrorCode::ImageTooSmall,
                std::to_string(height) + "x" + std::to_string(width) +
                    " is smaller than patch size " +
                    std::to_string(params.patch_size));
  }
  std::vector<PatchOrigin> origins;
  for (int r = 0; r + params.patch_size <= height; r += params.stride)
    for (int c = 0; c + params.patch_size <= width; c += params.stride)
      origins.push_back({r, c});
  return origins;
}

int spatial_bin(double dr, double dc, const GlohParams& params) {
  const double rho = std::sqrt(dr * dr + dc * dc);
  if (rho <= params.radii[0]) return 0;
  if (rho > params.radii[2]) return -1;
  // Image rows grow downward, so the upward axis is -dr.
  const int sector = angular_bin(wrap_angle(std::atan2(-dr, dc)), params.n_sectors);
  const int ring = rho <= params.radii[1] ? 0 : 1;
  return 1 + ring * params.n_sectors + sector;
}

int orientation_bin(double angle, int n_orient) {
  return angular_bin(angle, n_orient);
}

std::vector<double> patch_descriptor(const GradientField& grad,
                                     PatchOrigin origin,
                                     const GlohParams& params) {
  params.validate();
  if (origin.row < 0 || origin.col < 0 ||
      origin.row + params.patch_size > grad.height ||
      origin.col + params.patch_size > grad.width) {
    throw Error(ErrorCode::PatchOutOfBounds,
                "patch at (" + std::to_string(origin.row) + "," +
                    std::to_string(origin.col) + ") exceeds " +
                    std::to_string(grad.height) + "x" +
                    std::to_string(grad.width));
  }
  const auto table = spatial_table(params);
  std::vector<double> hist(static_cast<std::size_t>(params.block_dim()));
  accumulate_patch(grad, origin, params, table, hist);
  normalize_in_place(hist, params.clip_threshold);
  return hist;
}

std::vector<double> normalize_descriptor(std::vector<double> vec,
                                         std::optional<double> clip_threshold) {
  normalize_in_place(vec, clip_threshold);
  return vec;
}

std::size_t feature_length(int height, int width, const GlohParams& params) {
  return patch_grid(height, width, params).size() *
         static_cast<std::size_t>(params.block_dim());
}

FeatureVector extract_gloh(const GrayImage& img, const GlohParams& params) {
  const auto origins = patch_grid(img.height, img.width, params);
  const auto grad = compute_gradients(img);
  const auto table = spatial_table(params);
  const int dim = params.block_dim();

  FeatureVector out{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(origins.size()) * dim), dim};
  for (std::size_t p = 0; p < origins.size(); ++p) {
    std::span<double> block(out.values.data() + p * dim, static_cast<std::size_t>(dim));
    accumulate_patch(grad, origins[p], params, table, block);
    normalize_in_place(block, params.clip_threshold);
  }
  return out;
}

}  // namespace agegloh
