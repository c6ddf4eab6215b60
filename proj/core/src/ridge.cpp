#include "agegloh/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>

#include "agegloh/error.hpp"
#include "agegloh/rng.hpp"

namespace agegloh {

RidgeFit fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   double alpha) {
  if (X.rows() != y.size())
    throw Error(ErrorCode::ShapeMismatch, "ridge: X has " +
                                              std::to_string(X.rows()) +
                                              " rows but y has " +
                                              std::to_string(y.size()));
  if (X.rows() < 1) throw Error(ErrorCode::TooFewSamples, "ridge: no samples");
  if (!(alpha >= 0.0))
    throw Error(ErrorCode::InvalidParams, "ridge: alpha must be >= 0");

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  if (X.cols() == 0) return {Eigen::VectorXd(0), y_mean};

  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  Eigen::MatrixXd A = Xc.transpose() * Xc;
  A.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = Xc.transpose() * yc;

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && alpha == 0.0) {
    // LLT can succeed on numerically singular matrices with tiny pivots.
    const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    const double scale = std::max(A.diagonal().maxCoeff(), 1e-300);
    singular = (d.array().square() <= 1e-13 * scale).any();
  }
  if (singular)
    throw Error(ErrorCode::SingularSystem,
                "ridge normal equations are singular (alpha=" +
                    std::to_string(alpha) + ")");

  RidgeFit fit;
  fit.weights = llt.solve(rhs);
  fit.intercept = y_mean - x_mean.dot(fit.weights);
  return fit;
}

double select_alpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::span<const double> grid, int k, std::uint64_t seed) {
  if (grid.empty()) throw Error(ErrorCode::GridEmpty, "alpha grid is empty");
  if (X.rows() != y.size())
    throw Error(ErrorCode::ShapeMismatch, "select_alpha: X and y disagree");
  if (k < 2 || y.size() < k)
    throw Error(ErrorCode::TooFewSamples,
                "select_alpha: need k >= 2 and at least k samples (k=" +
                    std::to_string(k) + ", n=" + std::to_string(y.size()) + ")");
  if (grid.size() == 1) return grid.front();

  const auto n = static_cast<std::size_t>(y.size());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(std::span<Eigen::Index>(order));

  std::vector<double> abs_err(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    const std::size_t begin = n * f / k, end = n * (f + 1) / k;
    const auto n_test = static_cast<Eigen::Index>(end - begin);
    const auto n_train = static_cast<Eigen::Index>(n) - n_test;
    Eigen::MatrixXd Xtr(n_train, X.cols()), Xte(n_test, X.cols());
    Eigen::VectorXd ytr(n_train), yte(n_test);
    Eigen::Index itr = 0, ite = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= begin && i < end) {
        Xte.row(ite) = X.row(order[i]);
        yte(ite++) = y(order[i]);
      } else {
        Xtr.row(itr) = X.row(order[i]);
        ytr(itr++) = y(order[i]);
      }
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      RidgeFit fit;
      try {
        fit = fit_ridge(Xtr, ytr, grid[g]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularSystem) throw;
        abs_err[g] = std::numeric_limits<double>::infinity();
        continue;
      }
      const Eigen::VectorXd pred = (Xte * fit.weights).array() + fit.intercept;
      abs_err[g] += (pred - yte).cwiseAbs().sum();
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (abs_err[g] < abs_err[best] ||
        (abs_err[g] == abs_err[best] && grid[g] > grid[best]))
      best = g;
  }
  return grid[best];
}

std::vector<double> default_alpha_grid() {
  return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
}

const TaskRidge& RidgeModel::task(const std::string& label) const {
  for (const auto& t : tasks)
    if (t.task == label) return t;
  throw Error(ErrorCode::UnknownTask, "model has no task '" + label + "'");
}

bool RidgeModel::has_task(const std::string& label) const {
  return std::any_of(tasks.begin(), tasks.end(),
                     [&](const TaskRidge& t) { return t.task == label; });
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& features,
                               std::span<const int> selected) {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(selected.size()));
  for (std::size_t j = 0; j < selected.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = features.col(selected[j]);
  return out;
}

double predict_raw(const RidgeModel& model,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const std::string& task) {
  const auto& t = model.task(task);
  if (!model.selected.empty() && x.size() <= model.selected.back())
    throw Error(ErrorCode::FeatureTooShort,
                "feature vector has " + std::to_string(x.size()) +
                    " entries, model needs " +
                    std::to_string(model.selected.back() + 1));
  double yhat = t.intercept;
  for (std::size_t j = 0; j < model.selected.size(); ++j)
    yhat += t.weights(static_cast<Eigen::Index>(j)) * x(model.selected[j]);
  return yhat;
}

double predict(const RidgeModel& model,
               const Eigen::Ref<const Eigen::VectorXd>& x,
               const std::string& task) {
  return std::clamp(predict_raw(model, x, task), model.clamp_min, model.clamp_max);
}

void write_model(std::ostream& out, const RidgeModel& model) {
  out << std::setprecision(17);
  out << "GLOHRIDGE 1\n";
  for (const auto& t : model.tasks) {
    out << "task=" << t.task << '\n';
    out << "alpha=" << t.alpha << '\n';
    out << "intercept=" << t.intercept << '\n';
    out << "clamp=" << model.clamp_min << ' ' << model.clamp_max << '\n';
    for (std::size_t j = 0; j < model.selected.size(); ++j)
      out << model.selected[j] << ' ' << t.weights(static_cast<Eigen::Index>(j)) << '\n';
  }
}

void write_model(const std::string& path, const RidgeModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  write_model(out, model);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

namespace {

[[noreturn]] void bad_model(int line, const std::string& what) {
  throw Error(ErrorCode::MalformedFile,
              "GLOHRIDGE line " + std::to_string(line) + ": " + what);
}

std::string value_of(const std::string& text, const std::string& key, int line) {
  if (text.rfind(key + "=", 0) != 0) bad_model(line, "expected " + key + "=");
  return text.substr(key.size() + 1);
}

double parse_double(const std::string& s, int line) {
  std::istringstream in(s);
  double v = 0.0;
  if (!(in >> v) || !(in >> std::ws).eof()) bad_model(line, "bad number '" + s + "'");
  return v;
}

}  // namespace

RidgeModel read_model(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string s; std::getline(in, s);) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    lines.push_back(std::move(s));
  }
  if (lines.empty() || lines[0] != "GLOHRIDGE 1") bad_model(1, "bad header");

  RidgeModel model;
  bool have_clamp = false, first_task = true;
  std::size_t i = 1;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    const int ln = static_cast<int>(i) + 1;
    if (i + 3 >= lines.size()) bad_model(ln, "incomplete task block");
    TaskRidge t;
    t.task = value_of(lines[i], "task", ln);
    if (t.task.empty()) bad_model(ln, "empty task label");
    t.alpha = parse_double(value_of(lines[i + 1], "alpha", ln + 1), ln + 1);
    t.intercept = parse_double(value_of(lines[i + 2], "intercept", ln + 2), ln + 2);
    std::istringstream cl(value_of(lines[i + 3], "clamp", ln + 3));
    double lo = 0.0, hi = 0.0;
    if (!(cl >> lo >> hi) || !(cl >> std::ws).eof() || lo > hi)
      bad_model(ln + 3, "bad clamp");
    if (have_clamp && (lo != model.clamp_min || hi != model.clamp_max))
      bad_model(ln + 3, "clamp differs between tasks");
    model.clamp_min = lo;
    model.clamp_max = hi;
    have_clamp = true;
    i += 4;

    std::vector<int> bins;
    std::vector<double> weights;
    while (i < lines.size() && !lines[i].empty() && lines[i].rfind("task=", 0) != 0) {
      std::istringstream row(lines[i]);
      long long k = -1;
      double w = 0.0;
      if (!(row >> k >> w) || k < 0 || !(row >> std::ws).eof())
        bad_model(static_cast<int>(i) + 1, "bad weight line");
      bins.push_back(static_cast<int>(k));
      weights.push_back(w);
      ++i;
    }
    if (first_task) {
      if (!std::is_sorted(bins.begin(), bins.end()) ||
          std::adjacent_find(bins.begin(), bins.end()) != bins.end())
        bad_model(ln, "bins must be strictly ascending");
      model.selected = bins;
      first_task = false;
    } else if (bins != model.selected) {
      bad_model(ln, "tasks disagree on selected bins");
    }
    t.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                  static_cast<Eigen::Index>(weights.size()));
    model.tasks.push_back(std::move(t));
  }
  if (model.tasks.empty()) bad_model(1, "no tasks");
  return model;
}

RidgeModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path);
  return read_model(in);
}

}  // namespace agegloh
