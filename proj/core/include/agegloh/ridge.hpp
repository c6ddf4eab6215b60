#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace agegloh {

struct RidgeFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

/// Centered ridge regression: solves (Xc^T Xc + alpha I) w = Xc^T yc with a
/// Cholesky factorization, intercept = mean(y) - mean(X) . w.
/// Throws SingularSystem when alpha = 0 and Xc is rank deficient.
RidgeFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double alpha);

/// k-fold cross-validated MAE over `grid`; folds are contiguous blocks of a
/// seeded shuffle. Ties go to the larger alpha.
double select_alpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::span<const double> grid, int k, std::uint64_t seed);

std::vector<double> default_alpha_grid();

struct TaskRidge {
  std::string task;
  double alpha = 0.0;
  Eigen::VectorXd weights;  // one per selected bin
  double intercept = 0.0;
};

struct RidgeModel {
  std::vector<int> selected;
  std::vector<TaskRidge> tasks;
  double clamp_min = 0.0;
  double clamp_max = 0.0;

  const TaskRidge& task(const std::string& label) const;
  bool has_task(const std::string& label) const;
};

/// Columns `selected` of `features`.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& features,
                               std::span<const int> selected);

/// Linear prediction on the selected bins, clamped to the training label
/// range.
double predict(const RidgeModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& x,
               const std::string& task);

/// Prediction before clamping.
double predict_raw(const RidgeModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const std::string& task);

// GLOHRIDGE text format.
void write_model(std::ostream& out, const RidgeModel& model);
void write_model(const std::string& path, const RidgeModel& model);
RidgeModel read_model(std::istream& in);
RidgeModel read_model(const std::string& path);

}  // namespace agegloh
