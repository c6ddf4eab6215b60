#include "agegloh/mtl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "agegloh/error.hpp"

namespace agegloh {
namespace {

using Residuals = std::vector<Eigen::VectorXd>;

// Rows of W with any nonzero entry.
std::vector<Eigen::Index> active_rows(const WeightMatrix& W) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index k = 0; k < W.rows(); ++k)
    if ((W.row(k).array() != 0.0).any()) rows.push_back(k);
  return rows;
}

// r_l = X_l w^l - y^l. Iterates are mostly row-sparse, so only active
// columns of X are touched unless the support is large.
void compute_residuals(const WeightMatrix& W, std::span<const TaskDataset> data,
                       Residuals& r) {
  const auto active = active_rows(W);
  const bool dense = active.size() * 4 > static_cast<std::size_t>(W.rows());
  r.resize(data.size());
  for (std::size_t l = 0; l < data.size(); ++l) {
    const auto& t = data[l];
    const auto col = static_cast<Eigen::Index>(l);
    if (dense) {
      r[l].noalias() = t.X * W.col(col);
      r[l] -= t.y;
    } else {
      r[l] = -t.y;
      for (auto k : active) {
        const double w = W(k, col);
        if (w != 0.0) r[l].noalias() += w * t.X.col(k);
      }
    }
  }
}

double loss_from_residuals(const Residuals& r) {
  double f = 0.0;
  for (const auto& v : r) f += v.squaredNorm() / static_cast<double>(v.size());
  return f;
}

void gradient_from_residuals(std::span<const TaskDataset> data,
                             const Residuals& r, WeightMatrix& G) {
  for (std::size_t l = 0; l < data.size(); ++l) {
    const auto& t = data[l];
    G.col(static_cast<Eigen::Index>(l)).noalias() =
        (2.0 / static_cast<double>(t.y.size())) * (t.X.transpose() * r[l]);
  }
}

void prox_in_place(WeightMatrix& V, double tau, Penalty mode) {
  if (mode == Penalty::MultiTask) {
    for (Eigen::Index k = 0; k < V.rows(); ++k) {
      const double norm = V.row(k).norm();
      if (norm <= tau) V.row(k).setZero();
      else V.row(k) *= 1.0 - tau / norm;
    }
  } else {
    V = V.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
  }
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw Error(ErrorCode::NegativeLambda,
                "lambda must be finite and >= 0, got " + std::to_string(lambda));
}

void check_shape(const WeightMatrix& W, Eigen::Index K, std::size_t L) {
  if (W.rows() != K || W.cols() != static_cast<Eigen::Index>(L))
    throw Error(ErrorCode::ShapeMismatch,
                "weight matrix is " + std::to_string(W.rows()) + "x" +
                    std::to_string(W.cols()) + ", expected " +
                    std::to_string(K) + "x" + std::to_string(L));
}

// Minimizes sum_l (a_l u_l^2 - b_l u_l) + lambda ||u||_2 over u. At a
// nonzero optimum u_l = b_l / (2 a_l + lambda / rho) with rho = ||u||, where
// rho solves h(rho) = sum_l b_l^2 / (2 a_l rho + lambda)^2 = 1. h is convex
// and decreasing, so Newton from rho = 0 increases monotonically to the root.
void solve_group_row(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     double lambda, Eigen::VectorXd& u) {
  const Eigen::Index L = a.size();
  if (lambda == 0.0) {
    for (Eigen::Index l = 0; l < L; ++l) u(l) = a(l) > 0.0 ? b(l) / (2.0 * a(l)) : 0.0;
    return;
  }
  if (b.norm() <= lambda) {
    u.setZero();
    return;
  }
  double rho = 0.0;
  for (int it = 0; it < 200; ++it) {
    double h = 0.0, dh = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
      const double d = 2.0 * a(l) * rho + lambda;
      h += b(l) * b(l) / (d * d);
      dh -= 4.0 * a(l) * b(l) * b(l) / (d * d * d);
    }
    if (dh == 0.0) break;
    const double next = rho - (h - 1.0) / dh;
    if (!(next > rho)) break;
    const bool done = next - rho <= 1e-16 * next;
    rho = next;
    if (done) break;
  }
  for (Eigen::Index l = 0; l < L; ++l) u(l) = b(l) / (2.0 * a(l) + lambda / rho);
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidParams, "max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw Error(ErrorCode::InvalidParams, "rel_tol must be > 0");
  if (!(initial_step > 0.0))
    throw Error(ErrorCode::InvalidParams, "initial step must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0))
    throw Error(ErrorCode::InvalidParams, "shrink must lie in (0, 1)");
}

Eigen::Index validate_tasks(std::span<const TaskDataset> data) {
  if (data.empty()) throw Error(ErrorCode::ShapeMismatch, "no tasks given");
  const Eigen::Index K = data.front().X.cols();
  for (const auto& t : data) {
    if (t.X.rows() < 1)
      throw Error(ErrorCode::ShapeMismatch, "task " + t.task_id + " has no samples");
    if (t.X.cols() != K)
      throw Error(ErrorCode::ShapeMismatch, "task " + t.task_id + " has " +
                                                std::to_string(t.X.cols()) +
                                                " features, expected " +
                                                std::to_string(K));
    if (t.y.size() != t.X.rows())
      throw Error(ErrorCode::ShapeMismatch,
                  "task " + t.task_id + " label count differs from row count");
    if (!t.X.allFinite() || !t.y.allFinite())
      throw Error(ErrorCode::NonFiniteEncountered,
                  "task " + t.task_id + " contains non-finite values");
  }
  return K;
}

double smooth_loss(const WeightMatrix& W, std::span<const TaskDataset> data) {
  check_shape(W, validate_tasks(data), data.size());
  Residuals r;
  compute_residuals(W, data, r);
  return loss_from_residuals(r);
}

WeightMatrix smooth_gradient(const WeightMatrix& W,
                             std::span<const TaskDataset> data) {
  check_shape(W, validate_tasks(data), data.size());
  Residuals r;
  compute_residuals(W, data, r);
  WeightMatrix G(W.rows(), W.cols());
  gradient_from_residuals(data, r, G);
  return G;
}

double penalty(const WeightMatrix& W, Penalty mode) {
  if (mode == Penalty::MultiTask) return W.rowwise().norm().sum();
  return W.cwiseAbs().sum();
}

double objective(const WeightMatrix& W, std::span<const TaskDataset> data,
                 double lambda, Penalty mode) {
  check_lambda(lambda);
  return smooth_loss(W, data) + lambda * penalty(W, mode);
}

Eigen::VectorXd group_soft_threshold(const Eigen::Ref<const Eigen::VectorXd>& row,
                                     double tau) {
  const double norm = row.norm();
  if (norm <= tau) return Eigen::VectorXd::Zero(row.size());
  return row * (1.0 - tau / norm);
}

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

double lambda_max(std::span<const TaskDataset> data, Penalty mode) {
  const auto K = validate_tasks(data);
  const WeightMatrix G = -smooth_gradient(WeightMatrix::Zero(K, static_cast<Eigen::Index>(data.size())), data);
  if (mode == Penalty::MultiTask) return G.rowwise().norm().maxCoeff();
  return G.cwiseAbs().maxCoeff();
}

WeightMatrix solve(std::span<const TaskDataset> data, double lambda,
                   const SolverOptions& opts) {
  const auto K = validate_tasks(data);
  return solve(data, lambda, opts,
               WeightMatrix::Zero(K, static_cast<Eigen::Index>(data.size())));
}

WeightMatrix solve(std::span<const TaskDataset> data, double lambda,
                   const SolverOptions& opts, const WeightMatrix& warm_start) {
  opts.validate();
  check_lambda(lambda);
  const auto K = validate_tasks(data);
  const auto L = static_cast<Eigen::Index>(data.size());
  check_shape(warm_start, K, data.size());
  if (!warm_start.allFinite())
    throw Error(ErrorCode::NonFiniteEncountered, "warm start is not finite");

  WeightMatrix G(K, L);
  Residuals r0;
  compute_residuals(WeightMatrix::Zero(K, L), data, r0);
  const double F_zero = loss_from_residuals(r0);
  gradient_from_residuals(data, r0, G);
  const double lam_max = opts.mode == Penalty::MultiTask
                             ? G.rowwise().norm().maxCoeff()
                             : G.cwiseAbs().maxCoeff();
  // Zero satisfies the optimality conditions.
  if (lambda >= lam_max) return WeightMatrix::Zero(K, L);

  WeightMatrix x = warm_start;
  WeightMatrix y = x;
  WeightMatrix z(K, L);
  Residuals r_x, r_y, r_z;
  compute_residuals(x, data, r_x);
  r_y = r_x;
  double f_y = loss_from_residuals(r_y);
  double F_prev = f_y + lambda * penalty(x, opts.mode);
  double theta = 1.0;
  double step = opts.initial_step;

  for (int it = 0; it < opts.max_iters; ++it) {
    gradient_from_residuals(data, r_y, G);

    double f_z = 0.0;
    for (;;) {
      z = y - step * G;
      prox_in_place(z, step * lambda, opts.mode);
      compute_residuals(z, data, r_z);
      f_z = loss_from_residuals(r_z);
      const double q = f_y + (G.array() * (z - y).array()).sum() +
                       (z - y).squaredNorm() / (2.0 * step);
      if (f_z <= q + 1e-12 * std::abs(f_y)) break;
      step *= opts.shrink;
      if (step < std::numeric_limits<double>::min())
        throw Error(ErrorCode::NonFiniteEncountered, "backtracking step underflow");
    }

    const double F = f_z + lambda * penalty(z, opts.mode);
    if (!std::isfinite(F))
      throw Error(ErrorCode::NonFiniteEncountered,
                  "objective diverged at iteration " + std::to_string(it));

    const double theta_next = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
    const double beta = (theta - 1.0) / theta_next;
    // Residuals are affine in W, so r(y) follows from r(z) and r(x).
    y = z + beta * (z - x);
    for (std::size_t l = 0; l < data.size(); ++l)
      r_y[l] = (1.0 + beta) * r_z[l] - beta * r_x[l];
    x.swap(z);
    r_x.swap(r_z);
    f_y = loss_from_residuals(r_y);
    theta = theta_next;

    const bool converged =
        std::abs(F - F_prev) / std::max(1.0, std::abs(F_prev)) < opts.rel_tol;
    F_prev = F;
    if (converged) break;
  }

  if (F_prev > F_zero) return WeightMatrix::Zero(K, L);
  return x;
}

WeightMatrix solve_cd_oracle(std::span<const TaskDataset> data, double lambda,
                             const SolverOptions& opts) {
  opts.validate();
  check_lambda(lambda);
  const auto K = validate_tasks(data);
  const auto L = static_cast<Eigen::Index>(data.size());

  // a(k, l) = ||X_l[:, k]||^2 / N_l
  Eigen::MatrixXd a(K, L);
  std::vector<Eigen::VectorXd> e(data.size());  // y^l - X_l w^l
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto& t = data[static_cast<std::size_t>(l)];
    a.col(l) = t.X.colwise().squaredNorm().transpose() / static_cast<double>(t.y.size());
    e[static_cast<std::size_t>(l)] = t.y;
  }

  WeightMatrix W = WeightMatrix::Zero(K, L);
  Eigen::VectorXd b(L), u(L), ak(L);
  const long max_sweeps = 100L * opts.max_iters;
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index l = 0; l < L; ++l) {
        const auto& t = data[static_cast<std::size_t>(l)];
        const double n = static_cast<double>(t.y.size());
        b(l) = 2.0 / n * t.X.col(k).dot(e[static_cast<std::size_t>(l)]) +
               2.0 * a(k, l) * W(k, l);
      }
      ak = a.row(k).transpose();
      if (opts.mode == Penalty::MultiTask) {
        solve_group_row(ak, b, lambda, u);
      } else {
        for (Eigen::Index l = 0; l < L; ++l)
          u(l) = ak(l) > 0.0 ? soft_threshold(b(l), lambda) / (2.0 * ak(l)) : 0.0;
      }
      for (Eigen::Index l = 0; l < L; ++l) {
        const double delta = u(l) - W(k, l);
        if (delta != 0.0) {
          e[static_cast<std::size_t>(l)] -= delta * data[static_cast<std::size_t>(l)].X.col(k);
          W(k, l) = u(l);
        }
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (!W.allFinite())
      throw Error(ErrorCode::NonFiniteEncountered, "coordinate descent diverged");
    if (sweep % 64 == 63) {
      for (Eigen::Index l = 0; l < L; ++l) {
        const auto& t = data[static_cast<std::size_t>(l)];
        e[static_cast<std::size_t>(l)] = t.y - t.X * W.col(l);
      }
    }
    if (max_change <= 1e-13 * (1.0 + W.cwiseAbs().maxCoeff())) break;
  }
  return W;
}

std::vector<int> row_support(const WeightMatrix& W, double epsilon) {
  std::vector<int> rows;
  for (Eigen::Index k = 0; k < W.rows(); ++k)
    if (W.row(k).norm() > epsilon) rows.push_back(static_cast<int>(k));
  return rows;
}

SelectionResult fit_for_budget(std::span<const TaskDataset> data, int budget,
                               const SolverOptions& opts, double epsilon) {
  const auto K = validate_tasks(data);
  const auto L = static_cast<Eigen::Index>(data.size());
  if (budget < 1 || budget > K)
    throw Error(ErrorCode::BudgetOutOfRange,
                "budget " + std::to_string(budget) + " outside [1, " +
                    std::to_string(K) + "]");

  if (budget == K) {
    // Every support is admissible; the smallest lambda wins ties.
    SelectionResult all{0.0, solve(data, 0.0, opts), {}, epsilon};
    all.selected = row_support(all.W, epsilon);
    return all;
  }

  double lo = 0.0;
  double hi = lambda_max(data, opts.mode);
  SelectionResult best{hi, WeightMatrix::Zero(K, L), {}, epsilon};
  WeightMatrix warm = WeightMatrix::Zero(K, L);

  for (int step = 0; step < 40; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    WeightMatrix W = solve(data, mid, opts, warm);
    auto support = row_support(W, epsilon);
    if (support.size() <= static_cast<std::size_t>(budget)) {
      if (support.size() > best.selected.size() ||
          (support.size() == best.selected.size() && mid < best.lambda)) {
        best = SelectionResult{mid, W, std::move(support), epsilon};
      }
      hi = mid;
    } else {
      lo = mid;
    }
    warm = std::move(W);
  }
  return best;
}

}  // namespace agegloh
