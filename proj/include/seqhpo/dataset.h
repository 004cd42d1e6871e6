// Copyright 2026 The seqhpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Study files: one JSON object per line,
//
//   {"version":1,
//    "metadata":{"name":..,"metric":..,"goal":..,"algorithm":..,
//                "parameters":[{"name":..,"type":..,...}],"task":{...}},
//    "trials":[{"parameter":{name:value,...},"metric":{metric:y}}]}
//
// CATEGORICAL values are written as their category strings. "task" is
// present for generated benchmark studies and rebuilds the objective.

#ifndef SEQHPO_DATASET_H_
#define SEQHPO_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seqhpo/bbob.h"
#include "seqhpo/core_types.h"
#include "seqhpo/seqmodel.h"
#include "seqhpo/tokenizer.h"

namespace seqhpo {

inline constexpr int kStudyFormatVersion = 1;

struct StudyRecord {
  Study study;
  std::optional<TaskDescriptor> task;

  bool operator==(const StudyRecord&) const = default;
};

nlohmann::ordered_json task_to_json(const TaskDescriptor& task);
TaskDescriptor task_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json study_to_json(const StudyRecord& record);
StudyRecord study_from_json(const nlohmann::ordered_json& j);
std::string serialize_study_line(const StudyRecord& record);
StudyRecord parse_study_line(std::string_view line);

// Streams records; errors name the offending line. Blank lines are skipped.
class StudyReader {
 public:
  explicit StudyReader(const std::filesystem::path& path);
  explicit StudyReader(std::istream& in) : in_(&in) {}

  std::optional<StudyRecord> next();
  std::size_t line_number() const { return line_; }

 private:
  std::ifstream file_;
  std::istream* in_;
  std::size_t line_ = 0;
};

std::vector<StudyRecord> read_studies(const std::filesystem::path& path);
void write_studies(const std::filesystem::path& path, std::span<const StudyRecord> records);

struct GenerationSpec {
  std::vector<BbobFamily> families = train_families();
  TaskOptions task_options;
  std::vector<std::string> policies = registered_algorithms();
  std::size_t num_studies = 1;
  std::size_t trials = 300;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct GenerationSummary {
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> per_policy;
  std::vector<std::string> errors;
};

// Study `index` of `spec`; depends only on (spec, index).
StudyRecord generate_study(const GenerationSpec& spec, std::size_t index);
GenerationSummary generate(const GenerationSpec& spec, std::ostream& out);

// Train membership per record. Records sharing a key stay together; groups
// are visited in a seeded random order and fill the training side until it
// reaches round(train_fraction * n). Records without a key form their own group.
std::vector<bool> split_assignment(std::span<const std::optional<std::uint64_t>> keys,
                                   double train_fraction, std::uint64_t seed);

struct SplitSummary {
  std::size_t train = 0;
  std::size_t validation = 0;
};

SplitSummary split_file(const std::filesystem::path& input, const std::filesystem::path& train_out,
                        const std::filesystem::path& validation_out, double train_fraction,
                        std::uint64_t seed);

// Streams training examples from a study file, one study at a time. With
// `augmentation` the per-study choices are drawn from (seed, epoch, index),
// the same streams the trainer uses.
void for_each_example(const std::filesystem::path& path, const Vocab& vocab,
                      const ModelConfig& config, const AugmentationConfig* augmentation,
                      std::uint64_t seed, std::uint64_t epoch,
                      const std::function<void(const SequenceExample&)>& visit);

}  // namespace seqhpo

#endif  // SEQHPO_DATASET_H_
