#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace agegloh {

/// One regression task: rows of X are feature vectors, y the matching ages.
struct TaskDataset {
  std::string task_id;
  Eigen::MatrixXd X;  // N_l x K
  Eigen::VectorXd y;  // N_l
};

/// K x L coefficients: column l belongs to task l, row k groups bin k across
/// tasks.
using WeightMatrix = Eigen::MatrixXd;

enum class Penalty {
  MultiTask,   // lambda * sum_k ||w_k||_2 (rows shared across tasks)
  SingleTask,  // lambda * sum_l ||w^l||_1 (tasks independent)
};

struct SolverOptions {
  int max_iters = 2000;
  double rel_tol = 1e-8;
  double initial_step = 1.0;
  double shrink = 0.5;
  Penalty mode = Penalty::MultiTask;

  void validate() const;
};

struct SelectionResult {
  double lambda = 0.0;
  WeightMatrix W;
  std::vector<int> selected;  // ascending bins with ||w_k||_2 > epsilon
  double epsilon = 1e-8;
};

/// Checks N_l >= 1, a shared K and finite entries. Returns K.
Eigen::Index validate_tasks(std::span<const TaskDataset> data);

/// sum_l (1/N_l) ||y^l - X_l w^l||^2
double smooth_loss(const WeightMatrix& W, std::span<const TaskDataset> data);

/// Column l is (2/N_l) X_l^T (X_l w^l - y^l).
WeightMatrix smooth_gradient(const WeightMatrix& W,
                             std::span<const TaskDataset> data);

double penalty(const WeightMatrix& W, Penalty mode);

double objective(const WeightMatrix& W, std::span<const TaskDataset> data,
                 double lambda, Penalty mode);

/// Proximal map of tau * ||.||_2: shrinks the row toward zero by tau.
Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& row,
                                     double tau);

double soft_threshold(double x, double tau);

/// Smallest lambda at which W = 0 is optimal.
double lambda_max(std::span<const TaskDataset> data, Penalty mode);

/// Accelerated proximal gradient with backtracking, starting from zero.
WeightMatrix solve(std::span<const TaskDataset> data, double lambda,
                   const SolverOptions& opts);

/// Same, starting from `warm_start`.
WeightMatrix solve(std::span<const TaskDataset> data, double lambda,
                   const SolverOptions& opts, const WeightMatrix& warm_start);

/// Cyclic block-coordinate descent over rows, each row solved exactly.
/// Slow; meant as a reference on small instances.
WeightMatrix solve_cd_oracle(std::span<const TaskDataset> data, double lambda,
                             const SolverOptions& opts);

std::vector<int> row_support(const WeightMatrix& W, double epsilon);

/// Bisects lambda on [0, lambda_max] (at most 40 steps, warm started) and
/// keeps the largest support not exceeding `budget`, preferring smaller
/// lambda on ties.
SelectionResult fit_for_budget(std::span<const TaskDataset> data, int budget,
                               const SolverOptions& opts,
                               double epsilon = 1e-8);

// GLOHSEL text format.
void write_selection(std::ostream& out, const SelectionResult& sel);
void write_selection(const std::string& path, const SelectionResult& sel);
SelectionResult read_selection(std::istream& in, Eigen::Index n_bins,
                               Eigen::Index n_tasks);
SelectionResult read_selection(const std::string& path, Eigen::Index n_bins,
                               Eigen::Index n_tasks);

}  // namespace agegloh
