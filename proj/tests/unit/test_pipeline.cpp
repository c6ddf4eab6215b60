#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "agegloh/error.hpp"
#include "agegloh/feature_io.hpp"
#include "agegloh/gloh.hpp"
#include "agegloh/imageio.hpp"
#include "agegloh/pipeline.hpp"
#include "test_support.hpp"

using namespace agegloh;
using agegloh::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int status = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "cli_stdout.txt";
  const auto err = dir / "cli_stderr.txt";
  const std::string cmd = std::string("\"") + AGEGLOH_CLI_PATH + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// CSV row kinds in order of appearance, e.g. "summary", "cs", "cs", ..., "fold".
std::vector<std::string> report_schema(const std::string& csv) {
  std::vector<std::string> kinds;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.substr(0, line.find(','));
    const auto fields = std::count(line.begin(), line.end(), ',') + 1;
    kinds.push_back(first + "/" + std::to_string(fields));
  }
  return kinds;
}

SynthSpec small_spec(std::uint64_t seed, double sigma = 0.0) {
  SynthSpec spec;
  spec.K = 60;
  spec.N = 40;
  spec.support_size = 4;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return spec;
}

RunConfig small_config() {
  RunConfig c;
  c.budget = 4;
  c.cs_max = 5;
  return c;
}

Manifest write_images(const fs::path& dir, int count) {
  Manifest m;
  for (int i = 0; i < count; ++i) {
    const std::string name = "face" + std::to_string(i) + ".pgm";
    write_pgm(dir / name, agegloh::testing::random_image(68, 62, 100 + i));
    m.samples.push_back({name, "p" + std::to_string(i % 2), 20 + i,
                         i % 2 ? Gender::Female : Gender::Male});
  }
  write_manifest(dir / "manifest.csv", m);
  return m;
}

}  // namespace

TEST(AgeRangeParse, Examples) {
  const auto r = parse_age_range("0:30");
  EXPECT_EQ(r.lo, 0);
  EXPECT_EQ(r.hi, 30);
  for (const char* bad : {"", "30", "a:b", "5:1", "1:2:3", ":4"})
    EXPECT_THROW(parse_age_range(bad), Error) << bad;
}

TEST(Extract, ThreeImagesDefaultDimension) {
  TempDir dir("extract");
  write_images(dir.path(), 3);
  const auto summary = cmd_extract(dir.path() / "manifest.csv", dir.path() / "f.gfv", RunConfig{});
  EXPECT_EQ(summary.n, 3u);
  EXPECT_EQ(summary.k, 48960u);
  const auto F = read_gfv1(dir.path() / "f.gfv");
  ASSERT_EQ(F.rows(), 3);
  ASSERT_EQ(F.cols(), 48960);
  for (int i = 0; i < 3; ++i) {
    const auto ref = extract_gloh(load_pgm(dir.path() / ("face" + std::to_string(i) + ".pgm")),
                                  GlohParams{});
    // Stored as float32.
    EXPECT_LT((F.row(i).transpose() - ref.values).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Extract, EmptyManifest) {
  TempDir dir("extract_empty");
  write_manifest(dir.path() / "manifest.csv", Manifest{});
  try {
    cmd_extract(dir.path() / "manifest.csv", dir.path() / "f.gfv", RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Empty);
  }
}

TEST(Extract, MissingImageNamesPath) {
  TempDir dir("extract_missing");
  auto m = write_images(dir.path(), 2);
  m.samples.push_back({"absent.pgm", "p9", 30, Gender::Male});
  write_manifest(dir.path() / "manifest.csv", m);
  try {
    cmd_extract(dir.path() / "manifest.csv", dir.path() / "f.gfv", RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingFile);
    EXPECT_NE(std::string(e.what()).find("absent.pgm"), std::string::npos) << e.what();
  }
}

TEST(Extract, WrongSizeImage) {
  TempDir dir("extract_size");
  write_pgm(dir.path() / "a.pgm", agegloh::testing::random_image(64, 62, 1));
  Manifest m;
  m.samples.push_back({"a.pgm", "p", 3, Gender::Male});
  write_manifest(dir.path() / "manifest.csv", m);
  try {
    cmd_extract(dir.path() / "manifest.csv", dir.path() / "f.gfv", RunConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Synth, SameSeedByteIdentical) {
  TempDir a("synth_a"), b("synth_b");
  const auto fa = cmd_synth(small_spec(7, 0.1), SynthLayout{}, a.path());
  const auto fb = cmd_synth(small_spec(7, 0.1), SynthLayout{}, b.path());
  EXPECT_EQ(slurp(fa.manifest), slurp(fb.manifest));
  EXPECT_EQ(slurp(fa.features), slurp(fb.features));
  EXPECT_EQ(slurp(fa.truth), slurp(fb.truth));
  ASSERT_EQ(fa.task_features.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_EQ(slurp(fa.task_features[i]), slurp(fb.task_features[i]));
  TempDir c("synth_c");
  const auto fc = cmd_synth(small_spec(8, 0.1), SynthLayout{}, c.path());
  EXPECT_NE(slurp(fa.features), slurp(fc.features));
}

TEST(Synth, FullSupportTruthFile) {
  TempDir dir("synth_full");
  SynthSpec spec = small_spec(1);
  spec.K = 12;
  spec.support_size = 12;
  const auto files = cmd_synth(spec, SynthLayout{}, dir.path());
  std::ifstream in(files.truth);
  std::string line;
  std::size_t support = 0;
  while (std::getline(in, line))
    if (line.rfind("support=", 0) == 0) {
      std::istringstream ss(line.substr(8));
      int k;
      while (ss >> k) ++support;
    }
  EXPECT_EQ(support, 12u);
}

TEST(Synth, InvalidSpec) {
  TempDir dir("synth_bad");
  SynthSpec spec = small_spec(1);
  spec.support_size = spec.K + 1;
  try {
    cmd_synth(spec, SynthLayout{}, dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
  }
}

TEST(Evaluate, NoiselessSyntheticDefaultSpec) {
  TempDir dir("eval_noiseless");
  SynthSpec spec;
  spec.noise_sigma = 0.0;
  const auto files = cmd_synth(spec, SynthLayout{}, dir.path());
  std::ostringstream csv;
  const auto report = cmd_evaluate(files.manifest, files.features, RunConfig{}, csv);
  EXPECT_LT(report.mae, 0.5);
  EXPECT_EQ(report.n, 400u);
  EXPECT_EQ(report.folds.size(), 80u);
}

TEST(Evaluate, MtlAndStlShareSchema) {
  TempDir dir("eval_modes");
  const auto files = cmd_synth(small_spec(3, 0.5), SynthLayout{}, dir.path());
  RunConfig mtl = small_config();
  RunConfig stl = small_config();
  stl.solver.mode = Penalty::SingleTask;
  std::ostringstream a, b;
  cmd_evaluate(files.manifest, files.features, mtl, a);
  cmd_evaluate(files.manifest, files.features, stl, b);
  EXPECT_EQ(report_schema(a.str()), report_schema(b.str()));
  EXPECT_EQ(report_schema(a.str()).front(), "summary/4");
}

TEST(Evaluate, TwoPersonsTwoFolds) {
  TempDir dir("eval_two");
  const auto files = cmd_synth(small_spec(4), SynthLayout{}, dir.path());
  auto m = parse_manifest(files.manifest);
  for (std::size_t i = 0; i < m.size(); ++i) m.samples[i].person_id = i % 2 ? "even" : "odd";
  write_manifest(files.manifest, m);
  std::ostringstream csv;
  const auto report = cmd_evaluate(files.manifest, files.features, small_config(), csv);
  ASSERT_EQ(report.folds.size(), 2u);
  int fold_rows = 0;
  for (const auto& k : report_schema(csv.str())) fold_rows += k == "fold/4";
  EXPECT_EQ(fold_rows, 2);
}

TEST(Evaluate, RowCountMismatch) {
  TempDir dir("eval_rows");
  const auto files = cmd_synth(small_spec(5), SynthLayout{}, dir.path());
  write_gfv1(files.features, Eigen::MatrixXd::Zero(3, 60));
  std::ostringstream csv;
  try {
    cmd_evaluate(files.manifest, files.features, small_config(), csv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RowCountMismatch);
  }
}

TEST(Evaluate, Deterministic) {
  TempDir dir("eval_det");
  const auto files = cmd_synth(small_spec(6, 0.3), SynthLayout{}, dir.path());
  RunConfig c = small_config();
  c.seed = 11;
  std::ostringstream a, b;
  cmd_evaluate(files.manifest, files.features, c, a);
  cmd_evaluate(files.manifest, files.features, c, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Evaluate, AgeRangeFiltersSamples) {
  TempDir dir("eval_range");
  const auto files = cmd_synth(small_spec(9, 0.2), SynthLayout{}, dir.path());
  const auto m = parse_manifest(files.manifest);
  RunConfig c = small_config();
  c.age_range = AgeRange{0, 40};
  std::size_t expect = 0;
  for (const auto& s : m.samples) expect += s.age <= 40;
  std::ostringstream csv;
  const auto report = cmd_evaluate(files.manifest, files.features, c, csv);
  EXPECT_EQ(report.n, expect);
  EXPECT_LT(report.n, m.size());
}

TEST(Train, StandardizeMatchesRawOnScaledColumns) {
  // Standardized training expresses weights on raw features, so scaling the
  // features changes nothing observable beyond round-off.
  TempDir dir("train_std");
  const auto files = cmd_synth(small_spec(10, 0.1), SynthLayout{}, dir.path());
  const auto m = parse_manifest(files.manifest);
  const auto F = read_gfv1(files.features);
  std::vector<int> rows(m.size());
  std::iota(rows.begin(), rows.end(), 0);
  RunConfig c = small_config();
  c.standardize = true;
  const auto a = train_model(m, F, rows, c);
  const auto b = train_model(m, (F * 3.0).eval(), rows, c);
  EXPECT_EQ(a.selection.selected, b.selection.selected);
  for (Eigen::Index r = 0; r < F.rows(); ++r) {
    const Eigen::VectorXd x = F.row(r).transpose();
    EXPECT_NEAR(predict_raw(a.ridge, x, "male"), predict_raw(b.ridge, (x * 3.0).eval(), "male"),
                1e-6);
  }
}

TEST(Train, SelectTrainPredictRoundTrip) {
  TempDir dir("train_rt");
  const auto files = cmd_synth(small_spec(12, 0.0), SynthLayout{}, dir.path());
  const auto sel = cmd_select(files.manifest, files.features, dir.path() / "s.sel", small_config());
  EXPECT_LE(sel.selected.size(), 4u);
  const auto model = cmd_train(files.manifest, files.features, dir.path() / "m.txt",
                               small_config(), dir.path() / "s2.sel");
  EXPECT_EQ(model.selected, sel.selected);
  EXPECT_EQ(slurp(dir.path() / "s.sel"), slurp(dir.path() / "s2.sel"));
  EXPECT_TRUE(model.has_task("male"));
  EXPECT_TRUE(model.has_task("female"));
  EXPECT_TRUE(model.has_task("pooled"));

  std::ostringstream csv;
  cmd_predict(dir.path() / "m.txt", files.features, files.manifest, csv);
  const auto m = parse_manifest(files.manifest);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "row,pred_age");
  double err = 0;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    EXPECT_EQ(std::stoul(line.substr(0, comma)), n);
    err += std::abs(std::stod(line.substr(comma + 1)) - m.samples[n].age);
    ++n;
  }
  EXPECT_EQ(n, m.size());
  EXPECT_LT(err / static_cast<double>(n), 0.5);
}

TEST(Cli, SynthEvaluateAndErrors) {
  TempDir dir("cli");
  const auto d = dir.path().string();
  auto r = run_cli("--seed 3 synth \"" + d + "/s\" --K 60 --N 40 --support 4 --sigma 0", dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  r = run_cli("--budget 4 --cs-max 3 evaluate \"" + d + "/s/manifest.csv\" \"" + d +
                  "/s/features.gfv\" -o \"" + d + "/report.csv\"",
              dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto schema = report_schema(slurp(dir.path() / "report.csv"));
  EXPECT_EQ(std::count(schema.begin(), schema.end(), "cs/3"), 4);

  r = run_cli("evaluate \"" + d + "/nope.csv\" \"" + d + "/s/features.gfv\"", dir.path());
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(std::regex_match(r.err, std::regex("ERROR MissingFile: [^\n]*\n"))) << r.err;

  r = run_cli("--budget 0 evaluate \"" + d + "/s/manifest.csv\" \"" + d + "/s/features.gfv\"",
              dir.path());
  EXPECT_NE(r.status, 0);
  EXPECT_TRUE(std::regex_match(r.err, std::regex("ERROR InvalidParams: [^\n]*\n"))) << r.err;

  r = run_cli("--age-range 9 evaluate \"" + d + "/s/manifest.csv\" \"" + d + "/s/features.gfv\"",
              dir.path());
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(r.err.rfind("ERROR InvalidParams:", 0), 0u) << r.err;
}

TEST(Cli, ConfigFileWithOverride) {
  TempDir dir("cli_cfg");
  const auto d = dir.path().string();
  ASSERT_EQ(run_cli("--seed 5 synth \"" + d + "/s\" --K 60 --N 40 --support 4", dir.path()).status,
            0);
  {
    std::ofstream cfg(dir.path() / "run.ini");
    cfg << "budget = 4\nmode = stl\ncs-max = 2\n";
  }
  const std::string data = " evaluate \"" + d + "/s/manifest.csv\" \"" + d + "/s/features.gfv\"";
  auto r = run_cli("--config \"" + d + "/run.ini\"" + data, dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 3 + 16);  // 16 persons
  r = run_cli("--config \"" + d + "/run.ini\" --cs-max 6" + data, dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 7 + 16);
}

TEST(Cli, TrainPredict) {
  TempDir dir("cli_tp");
  const auto d = dir.path().string();
  ASSERT_EQ(run_cli("synth \"" + d + "/s\" --K 60 --N 40 --support 4 --sigma 0", dir.path()).status,
            0);
  auto r = run_cli("--budget 4 train \"" + d + "/s/manifest.csv\" \"" + d + "/s/features.gfv\" \"" +
                       d + "/m.txt\" --selection-out \"" + d + "/s.sel\"",
                   dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(dir.path() / "m.txt").rfind("GLOHRIDGE 1\n", 0), 0u);
  EXPECT_EQ(slurp(dir.path() / "s.sel").rfind("GLOHSEL 1\n", 0), 0u);
  r = run_cli("predict \"" + d + "/m.txt\" \"" + d + "/s/features.gfv\" --manifest \"" + d +
                  "/s/manifest.csv\"",
              dir.path());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out.rfind("row,pred_age\n0,", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 81);
}
