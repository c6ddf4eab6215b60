#include "agegloh/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "agegloh/error.hpp"

namespace agegloh {
namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(pred.size()) + " predictions vs " +
                    std::to_string(truth.size()) + " labels");
  if (pred.empty()) throw Error(ErrorCode::Empty, "no predictions");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

double cumulative_score(std::span<const double> pred,
                        std::span<const double> truth, double tolerance) {
  check_pair(pred, truth);
  if (!(tolerance >= 0.0))
    throw Error(ErrorCode::InvalidParams, "tolerance must be >= 0");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (std::abs(pred[i] - truth[i]) <= tolerance) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double abs_error_std(std::span<const double> pred, std::span<const double> truth) {
  const double mean = mae(pred, truth);
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = std::abs(pred[i] - truth[i]) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

EvalReport aggregate(std::span<const FoldPredictions> folds, int cs_max) {
  if (cs_max < 0) throw Error(ErrorCode::InvalidParams, "cs_max must be >= 0");
  EvalReport report;
  std::vector<double> pred, truth;
  for (const auto& f : folds) {
    if (f.pred.empty()) continue;
    report.folds.push_back({f.person_id, f.pred.size(), mae(f.pred, f.truth)});
    pred.insert(pred.end(), f.pred.begin(), f.pred.end());
    truth.insert(truth.end(), f.truth.begin(), f.truth.end());
  }
  if (pred.empty()) throw Error(ErrorCode::Empty, "no test predictions to aggregate");
  report.n = pred.size();
  report.mae = mae(pred, truth);
  report.abs_err_std = abs_error_std(pred, truth);
  for (int j = 0; j <= cs_max; ++j)
    report.cs_curve.push_back(cumulative_score(pred, truth, j));
  return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << std::setprecision(10);
  out << "summary," << report.n << ',' << report.mae << ',' << report.abs_err_std << '\n';
  for (std::size_t j = 0; j < report.cs_curve.size(); ++j)
    out << "cs," << j << ',' << report.cs_curve[j] << '\n';
  for (const auto& f : report.folds)
    out << "fold," << f.person_id << ',' << f.n << ',' << f.mae << '\n';
}

}  // namespace agegloh
