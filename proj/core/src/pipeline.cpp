#include "agegloh/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <thread>

#include "agegloh/error.hpp"
#include "agegloh/feature_io.hpp"
#include "agegloh/imageio.hpp"

namespace agegloh {
namespace {

// Per-column affine map x -> (x - mean) / scale fitted on training rows.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& features, std::span<const int> rows) {
    const Eigen::Index K = features.cols();
    Standardizer s{Eigen::RowVectorXd::Zero(K), Eigen::RowVectorXd::Zero(K)};
    for (int r : rows) s.mean += features.row(r);
    s.mean /= static_cast<double>(rows.size());
    for (int r : rows) s.scale += (features.row(r) - s.mean).array().square().matrix();
    s.scale = (s.scale / static_cast<double>(rows.size())).cwiseSqrt();
    for (Eigen::Index k = 0; k < K; ++k)
      if (!(s.scale(k) > 0.0)) s.scale(k) = 1.0;
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const {
    return (features.rowwise() - mean).array().rowwise() / scale.array();
  }
};

int effective_folds(int requested, Eigen::Index n) {
  return static_cast<int>(std::min<Eigen::Index>(requested, n));
}

double choose_alpha(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const RunConfig& config) {
  const int k = effective_folds(config.cv_folds, y.size());
  if (k < 2) return *std::max_element(config.alpha_grid.begin(), config.alpha_grid.end());
  return select_alpha(X, y, config.alpha_grid, k, config.seed);
}

TaskRidge fit_task(std::string label, const Eigen::MatrixXd& X_selected,
                   const Eigen::VectorXd& y, const RunConfig& config) {
  const double alpha = choose_alpha(X_selected, y, config);
  RidgeFit fit = fit_ridge(X_selected, y, alpha);
  return TaskRidge{std::move(label), alpha, std::move(fit.weights), fit.intercept};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require_rows(const Manifest& manifest, const Eigen::MatrixXd& features) {
  if (features.rows() != static_cast<Eigen::Index>(manifest.size()))
    throw Error(ErrorCode::RowCountMismatch,
                "features have " + std::to_string(features.rows()) +
                    " rows, manifest has " + std::to_string(manifest.size()));
}

std::vector<int> all_rows(std::size_t n) {
  std::vector<int> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
  return rows;
}

}  // namespace

AgeRange parse_age_range(const std::string& text) {
  const auto colon = text.find(':');
  AgeRange range;
  auto parse = [&](std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
  };
  const std::string_view sv(text);
  if (colon == std::string::npos || !parse(sv.substr(0, colon), range.lo) ||
      !parse(sv.substr(colon + 1), range.hi) || range.lo > range.hi)
    throw Error(ErrorCode::InvalidParams, "age range must be LO:HI, got '" + text + "'");
  return range;
}

void RunConfig::validate() const {
  gloh.validate();
  solver.validate();
  if (budget < 1) throw Error(ErrorCode::InvalidParams, "budget must be >= 1");
  if (alpha_grid.empty()) throw Error(ErrorCode::GridEmpty, "alpha grid is empty");
  for (double a : alpha_grid)
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidParams, "alpha values must be >= 0");
  if (cv_folds < 2) throw Error(ErrorCode::InvalidParams, "cv_folds must be >= 2");
  if (cs_max < 0) throw Error(ErrorCode::InvalidParams, "cs_max must be >= 0");
  if (image_height < 1 || image_width < 1)
    throw Error(ErrorCode::InvalidParams, "image dimensions must be positive");
}

Eigen::MatrixXd extract_features(const Manifest& manifest,
                                 const std::filesystem::path& base_dir,
                                 const RunConfig& config) {
  config.validate();
  if (manifest.samples.empty()) throw Error(ErrorCode::Empty, "manifest has no samples");
  const auto K = static_cast<Eigen::Index>(
      feature_length(config.image_height, config.image_width, config.gloh));
  const std::size_t n = manifest.size();
  Eigen::MatrixXd features(static_cast<Eigen::Index>(n), K);

  // Images are independent; workers claim indices and the lowest failing
  // index is reported so errors do not depend on scheduling.
  std::vector<std::optional<Error>> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto path = resolve(base_dir, manifest.samples[i].image_path);
      try {
        const GrayImage img = load_pgm(path);
        check_dims(img, config.image_height, config.image_width);
        features.row(static_cast<Eigen::Index>(i)) =
            extract_gloh(img, config.gloh).values.transpose();
      } catch (const Error& e) {
        const std::string what = e.what();
        errors[i] = what.rfind(path.string(), 0) == 0
                        ? e
                        : Error(e.code(), path.string() + ": " + what);
      }
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) throw *e;
  return features;
}

void apply_age_range(const RunConfig& config, Manifest& manifest,
                     Eigen::MatrixXd& features) {
  if (!config.age_range) return;
  require_rows(manifest, features);
  std::vector<int> keep;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const int age = manifest.samples[i].age;
    if (age >= config.age_range->lo && age <= config.age_range->hi)
      keep.push_back(static_cast<int>(i));
  }
  if (keep.size() == manifest.size()) return;
  Manifest kept;
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(keep.size()), features.cols());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    kept.samples.push_back(manifest.samples[static_cast<std::size_t>(keep[j])]);
    rows.row(static_cast<Eigen::Index>(j)) = features.row(keep[j]);
  }
  manifest = std::move(kept);
  features = std::move(rows);
}

TrainedModel train_model(const Manifest& manifest, const Eigen::MatrixXd& features,
                         std::span<const int> rows, const RunConfig& config) {
  require_rows(manifest, features);
  if (rows.empty()) throw Error(ErrorCode::Empty, "no training rows");

  std::optional<Standardizer> standardizer;
  Eigen::MatrixXd standardized;
  if (config.standardize) {
    standardizer = Standardizer::fit(features, rows);
    standardized = standardizer->apply(features);
  }
  const Eigen::MatrixXd& train_features = standardizer ? standardized : features;

  const auto tasks = partition_by_task(rows, manifest, train_features);
  const int budget = static_cast<int>(std::min<Eigen::Index>(config.budget, features.cols()));
  TrainedModel out;
  if (config.center_selection) {
    std::vector<TaskDataset> centered = tasks;
    for (auto& t : centered) {
      t.X.rowwise() -= t.X.colwise().mean();
      t.y.array() -= t.y.mean();
    }
    out.selection = fit_for_budget(centered, budget, config.solver);
  } else {
    out.selection = fit_for_budget(tasks, budget, config.solver);
  }
  const auto& selected = out.selection.selected;

  RidgeModel& model = out.ridge;
  model.selected = selected;
  for (const auto& t : tasks)
    model.tasks.push_back(fit_task(t.task_id, gather_columns(t.X, selected), t.y, config));
  const TaskDataset pooled =
      gather_rows(std::string(kPooledTask), rows, manifest, train_features);
  model.tasks.push_back(
      fit_task(pooled.task_id, gather_columns(pooled.X, selected), pooled.y, config));
  model.clamp_min = pooled.y.minCoeff();
  model.clamp_max = pooled.y.maxCoeff();

  if (standardizer) {
    // w . (x - mu) / s + b  ==  (w / s) . x + (b - sum w mu / s)
    for (auto& t : model.tasks) {
      for (std::size_t j = 0; j < selected.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const int k = selected[j];
        t.weights(jj) /= standardizer->scale(k);
        t.intercept -= t.weights(jj) * standardizer->mean(k);
      }
    }
  }
  return out;
}

EvalReport evaluate_lopo(const Manifest& manifest, const Eigen::MatrixXd& features,
                         const RunConfig& config) {
  config.validate();
  require_rows(manifest, features);
  const auto folds = split_lopo(manifest);
  std::vector<FoldPredictions> predictions;
  predictions.reserve(folds.size());
  for (const auto& fold : folds) {
    const TrainedModel trained = train_model(manifest, features, fold.train_rows, config);
    FoldPredictions fp{fold.held_out_person, {}, {}};
    for (int r : fold.test_rows) {
      const auto& s = manifest.samples[static_cast<std::size_t>(r)];
      fp.pred.push_back(predict(trained.ridge, features.row(r).transpose(), task_label(s.gender)));
      fp.truth.push_back(s.age);
    }
    predictions.push_back(std::move(fp));
  }
  return aggregate(predictions, config.cs_max);
}

ExtractSummary cmd_extract(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& out_features,
                           const RunConfig& config) {
  const Manifest manifest = parse_manifest(manifest_path);
  const Eigen::MatrixXd features =
      extract_features(manifest, manifest_path.parent_path(), config);
  write_gfv1(out_features, features);
  return {static_cast<std::size_t>(features.rows()), static_cast<std::size_t>(features.cols())};
}

EvalReport cmd_evaluate(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& features_path,
                        const RunConfig& config, std::ostream& report_csv) {
  Manifest manifest = parse_manifest(manifest_path);
  Eigen::MatrixXd features = read_gfv1(features_path);
  require_rows(manifest, features);
  apply_age_range(config, manifest, features);
  const EvalReport report = evaluate_lopo(manifest, features, config);
  write_report_csv(report_csv, report);
  return report;
}

SelectionResult cmd_select(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& features_path,
                           const std::filesystem::path& out_selection,
                           const RunConfig& config) {
  config.validate();
  Manifest manifest = parse_manifest(manifest_path);
  Eigen::MatrixXd features = read_gfv1(features_path);
  require_rows(manifest, features);
  apply_age_range(config, manifest, features);
  const auto rows = all_rows(manifest.size());
  TrainedModel trained = train_model(manifest, features, rows, config);
  write_selection(out_selection.string(), trained.selection);
  return std::move(trained.selection);
}

RidgeModel cmd_train(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& out_model,
                     const RunConfig& config,
                     const std::optional<std::filesystem::path>& out_selection) {
  config.validate();
  Manifest manifest = parse_manifest(manifest_path);
  Eigen::MatrixXd features = read_gfv1(features_path);
  require_rows(manifest, features);
  apply_age_range(config, manifest, features);
  const auto rows = all_rows(manifest.size());
  TrainedModel trained = train_model(manifest, features, rows, config);
  write_model(out_model.string(), trained.ridge);
  if (out_selection) write_selection(out_selection->string(), trained.selection);
  return std::move(trained.ridge);
}

void cmd_predict(const std::filesystem::path& model_path,
                 const std::filesystem::path& features_path,
                 const std::optional<std::filesystem::path>& manifest_path,
                 std::ostream& out_csv) {
  const RidgeModel model = read_model(model_path.string());
  const Eigen::MatrixXd features = read_gfv1(features_path);
  std::optional<Manifest> manifest;
  if (manifest_path) {
    manifest = parse_manifest(*manifest_path);
    require_rows(*manifest, features);
  }
  out_csv << "row,pred_age\n" << std::setprecision(10);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    std::string task(kPooledTask);
    if (manifest) task = task_label(manifest->samples[static_cast<std::size_t>(r)].gender);
    if (!model.has_task(task)) task = std::string(kPooledTask);
    out_csv << r << ',' << predict(model, features.row(r).transpose(), task) << '\n';
  }
}

SynthFiles cmd_synth(const SynthSpec& spec, const SynthLayout& layout,
                     const std::filesystem::path& out_dir) {
  spec.validate();
  if (spec.L > 2)
    throw Error(ErrorCode::InvalidSpec, "manifest output supports at most 2 tasks");
  if (layout.samples_per_person < 1)
    throw Error(ErrorCode::InvalidSpec, "samples_per_person must be >= 1");
  const SynthData data = synth_generate(spec);

  Manifest manifest;
  Eigen::MatrixXd all(static_cast<Eigen::Index>(spec.L) * spec.N, spec.K);
  for (int l = 0; l < spec.L; ++l) {
    const auto& t = data.tasks[static_cast<std::size_t>(l)];
    const Gender g = spec.L == 1 ? Gender::Unknown : (l == 0 ? Gender::Male : Gender::Female);
    for (int i = 0; i < spec.N; ++i) {
      const double age = std::round(t.y(i) + layout.label_offset);
      if (!(age >= 0.0 && age <= 130.0))
        throw Error(ErrorCode::InvalidSpec,
                    "synthetic label " + std::to_string(t.y(i)) + " + offset " +
                        std::to_string(layout.label_offset) + " falls outside [0, 130]");
      Sample s;
      s.image_path = "synthetic/t" + std::to_string(l) + "_" + std::to_string(i) + ".pgm";
      s.person_id = "t" + std::to_string(l) + "_p" + std::to_string(i / layout.samples_per_person);
      s.age = static_cast<int>(age);
      s.gender = g;
      manifest.samples.push_back(std::move(s));
    }
    all.middleRows(static_cast<Eigen::Index>(l) * spec.N, spec.N) = t.X;
  }

  std::filesystem::create_directories(out_dir);
  SynthFiles files{out_dir / "manifest.csv", out_dir / "features.gfv", {}, out_dir / "truth.txt"};
  write_manifest(files.manifest, manifest);
  write_gfv1(files.features, all);
  for (int l = 0; l < spec.L; ++l) {
    const std::string label =
        spec.L == 1 ? std::string("all") : std::string(l == 0 ? kMaleTask : kFemaleTask);
    files.task_features.push_back(out_dir / ("features_" + label + ".gfv"));
    write_gfv1(files.task_features.back(), data.tasks[static_cast<std::size_t>(l)].X);
  }

  std::ofstream truth(files.truth);
  if (!truth) throw Error(ErrorCode::IoError, "cannot open " + files.truth.string());
  truth << std::setprecision(17) << "GLOHTRUTH 1\n";
  truth << "label_offset=" << layout.label_offset << '\n';
  truth << "support=";
  for (std::size_t j = 0; j < data.support.size(); ++j)
    truth << (j ? " " : "") << data.support[j];
  truth << '\n';
  for (int k : data.support) {
    truth << k;
    for (int l = 0; l < spec.L; ++l) truth << ' ' << data.W(k, l);
    truth << '\n';
  }
  return files;
}

}  // namespace agegloh
