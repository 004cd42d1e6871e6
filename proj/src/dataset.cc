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

#include "seqhpo/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "seqhpo/policy_zoo.h"

namespace seqhpo {

using nlohmann::ordered_json;

namespace {

template <typename T>
T field(const ordered_json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

ordered_json parameter_to_json(const ParameterConfig& p) {
  ordered_json j;
  j["name"] = p.name();
  j["type"] = to_string(p.kind());
  switch (p.kind()) {
    case ParamKind::kDouble:
    case ParamKind::kInteger:
      j["min_value"] = p.min_value();
      j["max_value"] = p.max_value();
      j["scale_type"] = to_string(p.scale());
      break;
    case ParamKind::kDiscrete:
      j["values"] = p.values();
      break;
    case ParamKind::kCategorical:
      j["categories"] = p.categories();
      break;
  }
  return j;
}

ParameterConfig parameter_from_json(const ordered_json& j) {
  const auto name = field<std::string>(j, "name");
  switch (parse_param_kind(field<std::string>(j, "type"))) {
    case ParamKind::kDouble:
      return ParameterConfig::Double(name, field<double>(j, "min_value"), field<double>(j, "max_value"),
                                     parse_scale_type(field<std::string>(j, "scale_type")));
    case ParamKind::kInteger:
      return ParameterConfig::Integer(name, field<double>(j, "min_value"), field<double>(j, "max_value"),
                                      parse_scale_type(field<std::string>(j, "scale_type")));
    case ParamKind::kDiscrete:
      return ParameterConfig::Discrete(name, field<std::vector<double>>(j, "values"));
    case ParamKind::kCategorical:
      return ParameterConfig::Categorical(name, field<std::vector<std::string>>(j, "categories"));
  }
  throw DataError("unknown parameter type");
}

std::optional<std::uint64_t> group_key(const StudyRecord& r) {
  if (r.task) return r.task->seed;
  return std::nullopt;
}

}  // namespace

ordered_json task_to_json(const TaskDescriptor& task) {
  ordered_json j;
  j["family"] = to_string(task.family);
  j["dimension"] = task.dimension;
  j["seed"] = task.seed;
  j["discretize"] = task.discretize;
  j["noisy"] = task.noisy;
  return j;
}

TaskDescriptor task_from_json(const ordered_json& j) {
  TaskDescriptor t;
  try {
    t.family = parse_bbob_family(field<std::string>(j, "family"));
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  t.dimension = field<int>(j, "dimension");
  t.seed = field<std::uint64_t>(j, "seed");
  t.discretize = field<bool>(j, "discretize");
  t.noisy = field<bool>(j, "noisy");
  return t;
}

ordered_json study_to_json(const StudyRecord& record) {
  const auto& m = record.study.metadata;
  ordered_json meta;
  meta["name"] = m.name;
  meta["metric"] = m.metric_name;
  meta["goal"] = to_string(m.goal);
  meta["algorithm"] = m.algorithm;
  if (m.free_text) meta["free_text"] = *m.free_text;
  ordered_json params = ordered_json::array();
  for (const auto& p : m.space.parameters()) params.push_back(parameter_to_json(p));
  meta["parameters"] = std::move(params);
  if (record.task) meta["task"] = task_to_json(*record.task);

  ordered_json trials = ordered_json::array();
  for (const auto& t : record.study.history) {
    ordered_json values = ordered_json::object();
    for (std::size_t i = 0; i < t.x.size(); ++i) {
      const auto& p = m.space[i];
      if (p.kind() == ParamKind::kCategorical) values[p.name()] = p.categories()[p.index_of(t.x[i])];
      else values[p.name()] = t.x[i];
    }
    ordered_json metric = ordered_json::object();
    metric[m.metric_name] = t.y;
    trials.push_back({{"parameter", std::move(values)}, {"metric", std::move(metric)}});
  }
  ordered_json j;
  j["version"] = kStudyFormatVersion;
  j["metadata"] = std::move(meta);
  j["trials"] = std::move(trials);
  return j;
}

StudyRecord study_from_json(const ordered_json& j) {
  if (field<int>(j, "version") != kStudyFormatVersion) throw DataError("unsupported study format version");
  const auto meta = field<ordered_json>(j, "metadata");
  StudyRecord r;
  auto& m = r.study.metadata;
  m.name = field<std::string>(meta, "name");
  m.metric_name = field<std::string>(meta, "metric");
  m.goal = parse_goal(field<std::string>(meta, "goal"));
  m.algorithm = field<std::string>(meta, "algorithm");
  if (meta.contains("free_text")) m.free_text = field<std::string>(meta, "free_text");
  const auto params = field<ordered_json>(meta, "parameters");
  if (!params.is_array()) throw DataError("'parameters' must be an array");
  std::vector<ParameterConfig> configs;
  for (const auto& p : params) configs.push_back(parameter_from_json(p));
  m.space = SearchSpace(std::move(configs));
  if (meta.contains("task")) r.task = task_from_json(meta.at("task"));

  const auto trials = field<ordered_json>(j, "trials");
  if (!trials.is_array()) throw DataError("'trials' must be an array");
  for (const auto& t : trials) {
    const auto values = field<ordered_json>(t, "parameter");
    const auto metric = field<ordered_json>(t, "metric");
    Trial trial;
    for (const auto& p : m.space.parameters()) {
      if (!values.contains(p.name())) throw DataError("trial lacks parameter '" + p.name() + "'");
      const auto& v = values.at(p.name());
      if (p.kind() == ParamKind::kCategorical) {
        if (!v.is_string()) throw DataError("categorical value of '" + p.name() + "' must be a string");
        const auto& cats = p.categories();
        const auto it = std::find(cats.begin(), cats.end(), v.get<std::string>());
        if (it == cats.end()) throw DataError("unknown category for '" + p.name() + "'");
        trial.x.push_back(static_cast<double>(it - cats.begin()));
      } else {
        if (!v.is_number()) throw DataError("value of '" + p.name() + "' must be a number");
        trial.x.push_back(v.get<double>());
      }
    }
    trial.y = field<double>(metric, m.metric_name.c_str());
    r.study.history.push_back(std::move(trial));
  }
  r.study.validate();
  return r;
}

std::string serialize_study_line(const StudyRecord& record) { return study_to_json(record).dump(); }

StudyRecord parse_study_line(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return study_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad study record: ") + e.what());
  }
}

StudyReader::StudyReader(const std::filesystem::path& path) : file_(path), in_(&file_) {
  if (!file_) throw DataError("cannot open study file " + path.string());
}

std::optional<StudyRecord> StudyReader::next() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      return parse_study_line(line);
    } catch (const Error& e) {
      throw DataError("line " + std::to_string(line_) + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::vector<StudyRecord> read_studies(const std::filesystem::path& path) {
  StudyReader reader(path);
  std::vector<StudyRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

void write_studies(const std::filesystem::path& path, std::span<const StudyRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << serialize_study_line(r) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

void GenerationSpec::validate() const {
  if (families.empty()) throw UsageError("no benchmark families");
  if (policies.empty()) throw UsageError("no policies");
  for (const auto& p : policies) parse_policy(p);
  if (num_studies < 1) throw UsageError("number of studies must be >= 1");
  if (trials < 1) throw UsageError("trials per study must be >= 1");
  if (workers < 1) throw UsageError("workers must be >= 1");
  task_options.validate();
}

ordered_json GenerationSpec::to_json() const {
  ordered_json j;
  ordered_json fams = ordered_json::array();
  for (auto f : families) fams.push_back(to_string(f));
  j["families"] = std::move(fams);
  j["policies"] = policies;
  j["num_studies"] = num_studies;
  j["trials"] = trials;
  j["seed"] = seed;
  j["min_dim"] = task_options.min_dim;
  j["max_dim"] = task_options.max_dim;
  j["discretize"] = task_options.discretize;
  j["noisy"] = task_options.noisy;
  return j;
}

StudyRecord generate_study(const GenerationSpec& spec, std::size_t index) {
  Rng rng(derive_seed({spec.seed, 0x57d1, index}));
  const std::uint64_t task_seed = rng();
  const auto& policy_name = spec.policies[uniform_index(rng, spec.policies.size())];
  const auto task = sample_task(task_seed, spec.families, spec.task_options);
  const auto metadata = task.metadata(policy_name);
  auto policy = make_policy(policy_name, metadata.space);
  StudyRecord record;
  record.study.metadata = metadata;
  record.task = task.descriptor();
  auto& history = record.study.history;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    auto x = policy->suggest(history, rng);
    const double y = task.evaluate(x, rng);
    if (!std::isfinite(y)) throw NumericError("objective returned a non-finite value");
    history.push_back({std::move(x), y});
  }
  return record;
}

GenerationSummary generate(const GenerationSpec& spec, std::ostream& out) {
  spec.validate();
  GenerationSummary summary;
  const std::size_t chunk = 64 * static_cast<std::size_t>(spec.workers);
  std::vector<std::string> lines;
  std::vector<std::string> policies;
  std::vector<std::string> errors;
  for (std::size_t begin = 0; begin < spec.num_studies; begin += chunk) {
    const std::size_t end = std::min(spec.num_studies, begin + chunk);
    lines.assign(end - begin, {});
    policies.assign(end - begin, {});
    errors.assign(end - begin, {});
    auto work = [&](std::size_t offset) {
      for (std::size_t i = begin + offset; i < end; i += static_cast<std::size_t>(spec.workers)) {
        try {
          const auto record = generate_study(spec, i);
          lines[i - begin] = serialize_study_line(record);
          policies[i - begin] = record.study.metadata.algorithm;
        } catch (const Error& e) {
          errors[i - begin] = "study " + std::to_string(i) + ": " + e.what();
        }
      }
    };
    if (spec.workers == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < spec.workers; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
      if (!errors[k].empty()) {
        ++summary.skipped;
        summary.errors.push_back(errors[k]);
        continue;
      }
      out << lines[k] << '\n';
      ++summary.written;
      ++summary.per_policy[policies[k]];
    }
  }
  if (!out) throw DataError("failed to write generated studies");
  return summary;
}

std::vector<bool> split_assignment(std::span<const std::optional<std::uint64_t>> keys,
                                   double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
    throw UsageError("train fraction must be in [0, 1]");
  if (keys.empty()) throw DataError("nothing to split");
  // Groups in first-appearance order, then shuffled.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::uint64_t, std::size_t> group_of;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i]) {
      const auto [it, fresh] = group_of.try_emplace(*keys[i], groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(i);
    } else {
      groups.push_back({i});
    }
  }
  Rng rng(derive_seed({seed, 0x5b17}));
  std::shuffle(groups.begin(), groups.end(), rng);
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(keys.size())));
  std::vector<bool> train(keys.size(), false);
  std::size_t count = 0;
  for (const auto& g : groups) {
    if (count >= target) break;
    for (auto i : g) train[i] = true;
    count += g.size();
  }
  return train;
}

SplitSummary split_file(const std::filesystem::path& input, const std::filesystem::path& train_out,
                        const std::filesystem::path& validation_out, double train_fraction,
                        std::uint64_t seed) {
  std::vector<std::optional<std::uint64_t>> keys;
  {
    StudyReader reader(input);
    while (auto r = reader.next()) keys.push_back(group_key(*r));
  }
  const auto train = split_assignment(keys, train_fraction, seed);
  std::ifstream in(input, std::ios::binary);
  std::ofstream tr(train_out, std::ios::binary), va(validation_out, std::ios::binary);
  if (!tr || !va) throw DataError("cannot open split outputs");
  SplitSummary s;
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (train[k++]) {
      tr << line << '\n';
      ++s.train;
    } else {
      va << line << '\n';
      ++s.validation;
    }
  }
  return s;
}

void for_each_example(const std::filesystem::path& path, const Vocab& vocab,
                      const ModelConfig& config, const AugmentationConfig* augmentation,
                      std::uint64_t seed, std::uint64_t epoch,
                      const std::function<void(const SequenceExample&)>& visit) {
  StudyReader reader(path);
  std::uint64_t index = 0;
  while (auto record = reader.next()) {
    const Study study = to_maximization(std::move(record->study));
    TokenizeOptions opts;
    opts.affine = YAffine::inference();
    if (augmentation) {
      Rng rng(derive_seed({seed, epoch, index}));
      opts = sample_augmentation(study, *augmentation, rng);
      if (!opts.affine) opts.affine = YAffine::inference();
    }
    visit(make_example(study, vocab, config, opts));
    ++index;
  }
}

}  // namespace seqhpo
