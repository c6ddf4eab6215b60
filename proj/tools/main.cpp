// agegloh: extract GLOH features, select bins, train and evaluate age
// regressors from the command line.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "agegloh/error.hpp"
#include "agegloh/pipeline.hpp"

namespace {

using agegloh::Error;
using agegloh::ErrorCode;

struct Options {
  agegloh::RunConfig config;
  std::string mode = "mtl";
  std::string age_range;
  double clip = 0.2;
};

void add_config_options(CLI::App& app, Options& o) {
  auto& c = o.config;
  app.set_config("--config", "", "flat key = value config file");
  app.add_option("--mode", o.mode, "selection penalty: mtl (l2,1) or stl (l1)")
      ->check(CLI::IsMember({"mtl", "stl"}));
  app.add_option("--budget", c.budget, "maximum number of selected bins");
  app.add_option("--age-range", o.age_range, "keep samples with LO <= age <= HI (LO:HI)");
  app.add_option("--seed", c.seed, "seed for cross-validation shuffles");
  app.add_option("--cs-max", c.cs_max, "largest cumulative-score tolerance in years");
  app.add_flag("--standardize", c.standardize,
               "standardize feature columns on training rows");
  app.add_flag("!--raw-selection", c.center_selection,
               "select bins on uncentered columns and labels");
  app.add_option("--alpha-grid", c.alpha_grid, "ridge penalty candidates")->delimiter(',');
  app.add_option("--cv-folds", c.cv_folds, "folds for ridge penalty selection");
  app.add_option("--max-iters", c.solver.max_iters, "solver iteration cap");
  app.add_option("--rel-tol", c.solver.rel_tol, "solver relative objective tolerance");
  app.add_option("--height", c.image_height, "expected image height");
  app.add_option("--width", c.image_width, "expected image width");
  app.add_option("--patch-size", c.gloh.patch_size, "descriptor patch size in pixels");
  app.add_option("--stride", c.gloh.stride, "patch grid stride in pixels");
  app.add_option("--radii", c.gloh.radii, "three ascending log-polar radii")
      ->delimiter(',')
      ->expected(3);
  app.add_option("--sectors", c.gloh.n_sectors, "angular sectors per ring");
  app.add_option("--orientations", c.gloh.n_orient, "orientation bins");
  app.add_option("--clip", o.clip, "descriptor clip threshold; 0 disables clipping");
}

agegloh::RunConfig finalize(Options& o) {
  auto c = o.config;
  c.solver.mode = o.mode == "stl" ? agegloh::Penalty::SingleTask : agegloh::Penalty::MultiTask;
  if (o.clip == 0.0) c.gloh.clip_threshold.reset();
  else c.gloh.clip_threshold = o.clip;
  if (!o.age_range.empty()) c.age_range = agegloh::parse_age_range(o.age_range);
  c.validate();
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age estimation from dense GLOH features with multi-task bin selection"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opts;
  add_config_options(app, opts);

  std::string manifest, features, out, model, selection_out;
  std::optional<std::string> predict_manifest;

  auto* extract = app.add_subcommand("extract", "images -> GFV1 feature file");
  extract->add_option("manifest", manifest, "manifest CSV")->required();
  extract->add_option("out", out, "output GFV1 file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "leave-one-person-out evaluation");
  evaluate->add_option("manifest", manifest, "manifest CSV")->required();
  evaluate->add_option("features", features, "GFV1 feature file")->required();
  evaluate->add_option("-o,--out", out, "report CSV (default stdout)");

  auto* select = app.add_subcommand("select", "bin selection on all rows -> GLOHSEL");
  select->add_option("manifest", manifest, "manifest CSV")->required();
  select->add_option("features", features, "GFV1 feature file")->required();
  select->add_option("out", selection_out, "output GLOHSEL file")->required();

  auto* train = app.add_subcommand("train", "selection + ridge on all rows -> GLOHRIDGE");
  train->add_option("manifest", manifest, "manifest CSV")->required();
  train->add_option("features", features, "GFV1 feature file")->required();
  train->add_option("out", model, "output GLOHRIDGE file")->required();
  train->add_option("--selection-out", selection_out, "also write the GLOHSEL file");

  auto* predict = app.add_subcommand("predict", "GLOHRIDGE + features -> predictions CSV");
  predict->add_option("model", model, "GLOHRIDGE file")->required();
  predict->add_option("features", features, "GFV1 feature file")->required();
  predict->add_option("--manifest", predict_manifest, "manifest supplying genders");
  predict->add_option("-o,--out", out, "predictions CSV (default stdout)");

  agegloh::SynthSpec spec;
  agegloh::SynthLayout layout;
  std::string out_dir;
  auto* synth = app.add_subcommand("synth", "synthetic dataset with planted support");
  synth->add_option("out_dir", out_dir, "output directory")->required();
  synth->add_option("--K", spec.K, "feature dimension");
  synth->add_option("--L", spec.L, "task count (1 or 2)");
  synth->add_option("--N", spec.N, "samples per task");
  synth->add_option("--support", spec.support_size, "planted nonzero rows");
  synth->add_option("--sigma", spec.noise_sigma, "label noise standard deviation");
  synth->add_option("--samples-per-person", layout.samples_per_person,
                    "consecutive samples sharing a person id");
  synth->add_option("--label-offset", layout.label_offset,
                    "added to labels before rounding to whole-year ages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const agegloh::RunConfig config = finalize(opts);
    if (*extract) {
      const auto s = agegloh::cmd_extract(manifest, out, config);
      std::cout << "N=" << s.n << " K=" << s.k << '\n';
    } else if (*evaluate) {
      agegloh::EvalReport report;
      if (out.empty()) {
        report = agegloh::cmd_evaluate(manifest, features, config, std::cout);
      } else {
        auto file = open_out(out);
        report = agegloh::cmd_evaluate(manifest, features, config, file);
        std::cout << "n=" << report.n << " mae=" << report.mae << '\n';
      }
    } else if (*select) {
      const auto sel = agegloh::cmd_select(manifest, features, selection_out, config);
      std::cout << "lambda=" << sel.lambda << " selected=" << sel.selected.size() << '\n';
    } else if (*train) {
      std::optional<std::filesystem::path> sel_path;
      if (!selection_out.empty()) sel_path = selection_out;
      const auto m = agegloh::cmd_train(manifest, features, model, config, sel_path);
      std::cout << "selected=" << m.selected.size() << " tasks=" << m.tasks.size() << '\n';
    } else if (*predict) {
      std::optional<std::filesystem::path> mpath;
      if (predict_manifest) mpath = *predict_manifest;
      if (out.empty()) {
        agegloh::cmd_predict(model, features, mpath, std::cout);
      } else {
        auto file = open_out(out);
        agegloh::cmd_predict(model, features, mpath, file);
      }
    } else if (*synth) {
      spec.seed = config.seed;
      const auto files = agegloh::cmd_synth(spec, layout, out_dir);
      std::cout << "manifest=" << files.manifest.string()
                << " features=" << files.features.string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "ERROR " << agegloh::to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR Internal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
