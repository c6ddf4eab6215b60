#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace agegloh {

double mae(std::span<const double> pred, std::span<const double> truth);

/// Fraction of samples with |pred - truth| <= tolerance.
double cumulative_score(std::span<const double> pred,
                        std::span<const double> truth, double tolerance);

/// Population standard deviation of |pred - truth|.
double abs_error_std(std::span<const double> pred, std::span<const double> truth);

struct FoldPredictions {
  std::string person_id;
  std::vector<double> pred;
  std::vector<double> truth;
};

struct FoldSummary {
  std::string person_id;
  std::size_t n = 0;
  double mae = 0.0;
};

struct EvalReport {
  double mae = 0.0;  // pooled over every test sample
  double abs_err_std = 0.0;
  std::vector<FoldSummary> folds;
  std::vector<double> cs_curve;  // cs_curve[j] = CS(j), j = 0..cs_max
  std::size_t n = 0;
};

EvalReport aggregate(std::span<const FoldPredictions> folds, int cs_max = 15);

/// CSV: "summary,<n>,<mae>,<abs_err_std>", then "cs,<j>,<value>" rows, then
/// "fold,<person_id>,<n>,<mae>" rows.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace agegloh
