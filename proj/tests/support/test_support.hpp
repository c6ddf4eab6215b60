#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "agegloh/imageio.hpp"
#include "agegloh/mtl.hpp"
#include "agegloh/rng.hpp"

namespace agegloh::testing {

// Random regression tasks with standard normal features and labels built from
// a sparse planted W plus noise.
inline std::vector<TaskDataset> random_tasks(int K, int L, int N, std::uint64_t seed,
                                             int support = 5, double noise = 0.5) {
  Rng rng(seed);
  std::vector<TaskDataset> tasks;
  WeightMatrix W = WeightMatrix::Zero(K, L);
  for (int s = 0; s < std::min(support, K); ++s) {
    const auto k = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K)));
    for (int l = 0; l < L; ++l) W(k, l) = rng.uniform(-2.0, 2.0);
  }
  for (int l = 0; l < L; ++l) {
    TaskDataset t{"t" + std::to_string(l), Eigen::MatrixXd(N, K), Eigen::VectorXd(N)};
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < K; ++k) t.X(i, k) = rng.normal();
    t.y = t.X * W.col(l);
    for (int i = 0; i < N; ++i) t.y(i) += noise * rng.normal();
    tasks.push_back(std::move(t));
  }
  return tasks;
}

inline GrayImage random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(h) * w);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng.below(256));
  return make_image(h, w, std::move(px));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(
                                               std::filesystem::file_time_type::clock::now()
                                                   .time_since_epoch()
                                                   .count()));
    path_ = std::filesystem::temp_directory_path() /
            ("agegloh_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Minimizer of 0.5 ||u - v||^2 + tau ||u||_2 by damped Newton on the smoothed
// norm sqrt(||u||^2 + mu^2), with mu driven toward zero. Uses no knowledge of
// the closed-form shrinkage.
inline Eigen::VectorXd numeric_group_prox(const Eigen::VectorXd& v, double tau) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd u = v;
  auto value = [&](const Eigen::VectorXd& x, double mu) {
    return 0.5 * (x - v).squaredNorm() + tau * std::sqrt(x.squaredNorm() + mu * mu);
  };
  for (double mu = 1.0; mu >= 1e-12; mu *= 0.1) {
    for (int it = 0; it < 200; ++it) {
      const double s = std::sqrt(u.squaredNorm() + mu * mu);
      const Eigen::VectorXd g = (u - v) + tau * u / s;
      Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) * (1.0 + tau / s);
      H -= tau * (u * u.transpose()) / (s * s * s);
      const Eigen::VectorXd d = H.ldlt().solve(g);
      double t = 1.0;
      const double f0 = value(u, mu);
      while (t > 1e-12 && value(u - t * d, mu) > f0 - 1e-4 * t * g.dot(d)) t *= 0.5;
      u -= t * d;
      if ((t * d).norm() < 1e-15) break;
    }
  }
  return u;
}

}  // namespace agegloh::testing
