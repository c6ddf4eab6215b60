#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "agegloh/mtl.hpp"

namespace agegloh {

enum class Gender { Male, Female, Unknown };

inline constexpr std::string_view kMaleTask = "male";
inline constexpr std::string_view kFemaleTask = "female";
inline constexpr std::string_view kPooledTask = "pooled";

/// Task label used at prediction time: the gender task, or the pooled model
/// when gender is unknown.
std::string task_label(Gender g);

struct Sample {
  std::string image_path;
  std::string person_id;
  int age = 0;
  Gender gender = Gender::Unknown;
};

/// Ordered samples; the order fixes feature-file row order.
struct Manifest {
  std::vector<Sample> samples;
  std::size_t size() const { return samples.size(); }
};

struct Fold {
  std::string held_out_person;
  std::vector<int> train_rows;
  std::vector<int> test_rows;
};

/// Parses "path,person_id,age,gender" CSV (header required, LF or CRLF).
Manifest parse_manifest(std::istream& in);
Manifest parse_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const Manifest& manifest);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// One fold per person, in order of first appearance.
std::vector<Fold> split_lopo(const Manifest& manifest);

/// Male and female datasets built from `rows`. Unknown-gender rows go into
/// both tasks. Throws EmptyTask if either ends up empty.
std::vector<TaskDataset> partition_by_task(std::span<const int> rows,
                                           const Manifest& manifest,
                                           const Eigen::MatrixXd& features);

/// Rows of `features` (and labels from the manifest) in the given order.
TaskDataset gather_rows(std::string task_id, std::span<const int> rows,
                        const Manifest& manifest,
                        const Eigen::MatrixXd& features);

struct SynthSpec {
  int K = 500;
  int L = 2;
  int N = 200;
  int support_size = 10;
  double noise_sigma = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthData {
  std::vector<TaskDataset> tasks;
  WeightMatrix W;
  std::vector<int> support;  // ascending
};

/// X ~ N(0, 1); a common support drawn without replacement; nonzero weights
/// uniform on +-[1, 2]; y^l = X_l w^l + sigma * N(0, 1). Fully determined by
/// the seed.
SynthData synth_generate(const SynthSpec& spec);

}  // namespace agegloh
