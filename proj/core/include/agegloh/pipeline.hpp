#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "agegloh/dataset.hpp"
#include "agegloh/gloh.hpp"
#include "agegloh/metrics.hpp"
#include "agegloh/mtl.hpp"
#include "agegloh/ridge.hpp"

namespace agegloh {

struct AgeRange {
  int lo = 0;
  int hi = 130;
};

/// Parses "LO:HI" (inclusive).
AgeRange parse_age_range(const std::string& text);

struct RunConfig {
  GlohParams gloh;
  SolverOptions solver;
  int image_height = 68;
  int image_width = 62;
  int budget = 50;
  std::vector<double> alpha_grid = default_alpha_grid();
  int cv_folds = 5;
  int cs_max = 15;
  std::uint64_t seed = 0;
  bool standardize = false;
  // Center each task's columns and labels before bin selection. Without it
  // the label mean (ages are far from zero) drives which bins are chosen.
  bool center_selection = true;
  std::optional<AgeRange> age_range;

  void validate() const;
};

/// Loads every image of the manifest, checks its size and extracts its
/// descriptor. Row i of the result belongs to manifest sample i.
Eigen::MatrixXd extract_features(const Manifest& manifest,
                                 const std::filesystem::path& base_dir,
                                 const RunConfig& config);

/// Keeps samples whose age lies in the configured range (no-op without one).
void apply_age_range(const RunConfig& config, Manifest& manifest,
                     Eigen::MatrixXd& features);

struct TrainedModel {
  SelectionResult selection;
  RidgeModel ridge;
};

/// Bin selection on `rows` followed by per-task and pooled ridge fits on the
/// selected bins. Weights are expressed on raw (unstandardized) features.
TrainedModel train_model(const Manifest& manifest, const Eigen::MatrixXd& features,
                         std::span<const int> rows, const RunConfig& config);

/// Leave-one-person-out evaluation.
EvalReport evaluate_lopo(const Manifest& manifest, const Eigen::MatrixXd& features,
                         const RunConfig& config);

struct ExtractSummary {
  std::size_t n = 0;
  std::size_t k = 0;
};

// Command entry points behind the CLI. Relative image paths in a manifest are
// resolved against the manifest's directory.
ExtractSummary cmd_extract(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& out_features,
                           const RunConfig& config);

EvalReport cmd_evaluate(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& features_path,
                        const RunConfig& config, std::ostream& report_csv);

SelectionResult cmd_select(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& features_path,
                           const std::filesystem::path& out_selection,
                           const RunConfig& config);

RidgeModel cmd_train(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& out_model,
                     const RunConfig& config,
                     const std::optional<std::filesystem::path>& out_selection = {});

/// Writes "row,pred_age". Rows use their manifest gender when a manifest is
/// given, otherwise the pooled model.
void cmd_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& features_path,
                 const std::optional<std::filesystem::path>& manifest_path,
                 std::ostream& out_csv);

struct SynthLayout {
  int samples_per_person = 5;
  double label_offset = 40.0;
};

struct SynthFiles {
  std::filesystem::path manifest;
  std::filesystem::path features;
  std::vector<std::filesystem::path> task_features;
  std::filesystem::path truth;
};

/// Writes manifest.csv, features.gfv (manifest order), one features_<task>.gfv
/// per task and truth.txt into `out_dir`. Manifest ages are the synthetic
/// labels shifted by `label_offset` and rounded to whole years.
SynthFiles cmd_synth(const SynthSpec& spec, const SynthLayout& layout,
                     const std::filesystem::path& out_dir);

}  // namespace agegloh
