#include "agegloh/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "agegloh/error.hpp"
#include "agegloh/rng.hpp"

namespace agegloh {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void bad_row(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRow,
              "manifest line " + std::to_string(line) + ": " + what);
}

const char* gender_token(Gender g) {
  switch (g) {
    case Gender::Male: return "m";
    case Gender::Female: return "f";
    case Gender::Unknown: return "";
  }
  return "";
}

}  // namespace

std::string task_label(Gender g) {
  switch (g) {
    case Gender::Male: return std::string(kMaleTask);
    case Gender::Female: return std::string(kFemaleTask);
    case Gender::Unknown: return std::string(kPooledTask);
  }
  return std::string(kPooledTask);
}

Manifest parse_manifest(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line))
    throw Error(ErrorCode::MalformedRow, "manifest line 1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (line != "path,person_id,age,gender")
    bad_row(line_no, "expected header 'path,person_id,age,gender'");

  Manifest manifest;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 4)
      bad_row(line_no, "expected 4 fields, got " + std::to_string(fields.size()));

    Sample s;
    s.image_path = fields[0];
    s.person_id = fields[1];
    if (s.image_path.empty()) bad_row(line_no, "empty path");
    if (s.person_id.empty()) bad_row(line_no, "empty person_id");

    const auto& age = fields[2];
    auto [ptr, ec] = std::from_chars(age.data(), age.data() + age.size(), s.age);
    if (age.empty() || ec != std::errc() || ptr != age.data() + age.size())
      bad_row(line_no, "age '" + age + "' is not an integer");
    if (s.age < 0 || s.age > 130)
      bad_row(line_no, "age " + age + " outside [0, 130]");

    if (fields[3] == "m") s.gender = Gender::Male;
    else if (fields[3] == "f") s.gender = Gender::Female;
    else if (fields[3].empty()) s.gender = Gender::Unknown;
    else bad_row(line_no, "gender token '" + fields[3] + "' is not m, f or empty");

    if (!seen.insert(s.image_path).second)
      throw Error(ErrorCode::DuplicatePath, "manifest line " +
                                                std::to_string(line_no) +
                                                ": duplicate path " + s.image_path);
    manifest.samples.push_back(std::move(s));
  }
  return manifest;
}

Manifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  out << "path,person_id,age,gender\n";
  for (const auto& s : manifest.samples)
    out << s.image_path << ',' << s.person_id << ',' << s.age << ','
        << gender_token(s.gender) << '\n';
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  write_manifest(out, manifest);
}

std::vector<Fold> split_lopo(const Manifest& manifest) {
  std::vector<Fold> folds;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> fold_of(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& pid = manifest.samples[i].person_id;
    auto [it, inserted] = index.emplace(pid, folds.size());
    if (inserted) folds.push_back(Fold{pid, {}, {}});
    fold_of[i] = it->second;
  }
  if (folds.size() < 2)
    throw Error(ErrorCode::SinglePerson, "LOPO needs at least two persons, got " +
                                             std::to_string(folds.size()));
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      auto& dst = fold_of[i] == f ? folds[f].test_rows : folds[f].train_rows;
      dst.push_back(static_cast<int>(i));
    }
  }
  return folds;
}

TaskDataset gather_rows(std::string task_id, std::span<const int> rows,
                        const Manifest& manifest,
                        const Eigen::MatrixXd& features) {
  if (features.rows() != static_cast<Eigen::Index>(manifest.size()))
    throw Error(ErrorCode::RowCountMismatch,
                "features have " + std::to_string(features.rows()) +
                    " rows, manifest has " + std::to_string(manifest.size()));
  TaskDataset t{std::move(task_id),
                Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), features.cols()),
                Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    t.X.row(r) = features.row(rows[i]);
    t.y(r) = manifest.samples[static_cast<std::size_t>(rows[i])].age;
  }
  return t;
}

std::vector<TaskDataset> partition_by_task(std::span<const int> rows,
                                           const Manifest& manifest,
                                           const Eigen::MatrixXd& features) {
  std::vector<int> male, female;
  for (int r : rows) {
    const Gender g = manifest.samples.at(static_cast<std::size_t>(r)).gender;
    if (g != Gender::Female) male.push_back(r);
    if (g != Gender::Male) female.push_back(r);
  }
  if (male.empty()) throw Error(ErrorCode::EmptyTask, "no training rows for task male");
  if (female.empty())
    throw Error(ErrorCode::EmptyTask, "no training rows for task female");
  std::vector<TaskDataset> tasks;
  tasks.push_back(gather_rows(std::string(kMaleTask), male, manifest, features));
  tasks.push_back(gather_rows(std::string(kFemaleTask), female, manifest, features));
  return tasks;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (K < 1 || L < 1 || N < 1 || support_size < 1) fail("all counts must be >= 1");
  if (support_size > K) fail("support_size exceeds K");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
}

SynthData synth_generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Partial Fisher-Yates for the shared support.
  std::vector<int> perm(static_cast<std::size_t>(spec.K));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < spec.support_size; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.K - i)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  SynthData out;
  out.support.assign(perm.begin(), perm.begin() + spec.support_size);
  std::sort(out.support.begin(), out.support.end());

  out.W = WeightMatrix::Zero(spec.K, spec.L);
  for (int k : out.support) {
    for (int l = 0; l < spec.L; ++l) {
      const double magnitude = rng.uniform(1.0, 2.0);
      out.W(k, l) = rng.uniform() < 0.5 ? -magnitude : magnitude;
    }
  }

  for (int l = 0; l < spec.L; ++l) {
    TaskDataset t{"task" + std::to_string(l), Eigen::MatrixXd(spec.N, spec.K),
                  Eigen::VectorXd(spec.N)};
    // Row by row so the stream order does not depend on storage order.
    for (int i = 0; i < spec.N; ++i)
      for (int k = 0; k < spec.K; ++k) t.X(i, k) = rng.normal();
    // Plain loop: a fixed summation order keeps labels bit-identical across
    // SIMD widths.
    for (int i = 0; i < spec.N; ++i) {
      double yi = 0.0;
      for (int k : out.support) yi += t.X(i, k) * out.W(k, l);
      t.y(i) = yi + spec.noise_sigma * rng.normal();
    }
    out.tasks.push_back(std::move(t));
  }
  return out;
}

}  // namespace agegloh
