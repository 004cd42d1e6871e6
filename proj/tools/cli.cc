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

#include "cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqhpo/acquisition.h"
#include "seqhpo/bbob.h"
#include "seqhpo/dataset.h"
#include "seqhpo/evaluation.h"
#include "seqhpo/gp.h"
#include "seqhpo/oracle_model.h"
#include "seqhpo/policy_zoo.h"
#include "seqhpo/seqmodel.h"
#include "seqhpo/tokenizer.h"

namespace seqhpo::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kOutputDirEnv = "SEQHPO_OUTPUT_DIR";

int default_workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

// Relative outputs land under $SEQHPO_OUTPUT_DIR when it is set.
fs::path output_path(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0')
      path = fs::path(dir) / path;
  }
  return fs::absolute(path).lexically_normal();
}

fs::path input_path(const std::string& p) {
  const auto path = fs::absolute(fs::path(p)).lexically_normal();
  if (!fs::is_regular_file(path)) throw DataError("no such file: " + p);
  return path;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw DataError("write failed for " + path.string());
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

std::vector<std::string> split_list(const std::string& s, char delim = ',') {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, delim)) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string canonical_policy(std::string name) {
  static const std::map<std::string, std::string> kAliases = {
      {"random", "random_search"},
      {"grid", "grid_search"},
      {"shuffled_grid", "shuffled_grid_search"},
      {"regevo", "regularized_evolution"},
      {"eagle", "eagle_strategy"},
  };
  if (const auto it = kAliases.find(name); it != kAliases.end()) name = it->second;
  parse_policy(name);
  return name;
}

std::vector<std::string> parse_policy_list(const std::string& spec) {
  if (spec == "all") return registered_algorithms();
  std::vector<std::string> names;
  for (const auto& p : split_list(spec)) names.push_back(canonical_policy(p));
  if (names.empty()) throw UsageError("empty policy list");
  return names;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// What a command did, in enough detail to do it again.
struct RunRecord {
  std::string command;
  std::vector<std::string> args;
  ordered_json config = ordered_json::object();
  ordered_json seeds = ordered_json::object();
  ordered_json inputs = ordered_json::object();
  ordered_json outputs = ordered_json::object();
  ordered_json summary = ordered_json::object();
  fs::path primary_output;
  std::map<std::string, std::vector<std::string>> resolved;  // flag -> values with absolute paths
};

// Rebuilds the explicit flags of `sub` with resolved paths substituted.
std::vector<std::string> canonical_args(const CLI::App& sub, const RunRecord& rec) {
  std::vector<std::string> args;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (opt->count() == 0 || name == "--help" || name == "--manifest") continue;
    if (opt->get_expected_max() == 0) {
      for (std::size_t i = 0; i < opt->count(); ++i) args.push_back(name);
      continue;
    }
    args.push_back(name);
    if (const auto it = rec.resolved.find(name); it != rec.resolved.end()) {
      args.insert(args.end(), it->second.begin(), it->second.end());
    } else {
      for (const auto& r : opt->results()) args.push_back(r);
    }
  }
  return args;
}

void write_manifest(const fs::path& path, const RunRecord& rec, const std::string& started,
                    double seconds) {
  ordered_json j;
  j["manifest_version"] = 1;
  j["command"] = rec.command;
  j["args"] = rec.args;
  j["config"] = rec.config;
  j["seeds"] = rec.seeds;
  j["inputs"] = rec.inputs;
  j["outputs"] = rec.outputs;
  j["summary"] = rec.summary;
  j["versions"] = {{"seqhpo", kVersion},
                   {"study_format", kStudyFormatVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                 std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  j["timing"] = {{"started_utc", started}, {"wall_seconds", seconds}};
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  finish_output(out, path);
}

// ---------------------------------------------------------------------------

class Command {
 public:
  virtual ~Command() = default;
  virtual void execute(RunRecord& rec, std::ostream& out, std::ostream& err) = 0;

  CLI::App* app = nullptr;
  std::string manifest;

 protected:
  void add_manifest_flag() {
    app->add_option("--manifest", manifest, "Manifest path (default: <output>.manifest.json)");
  }
  bool given(const std::string& flag) const { return app->count(flag) > 0; }
};

// --- gen-data ----------------------------------------------------------------

class GenDataCommand : public Command {
 public:
  explicit GenDataCommand(CLI::App& root) {
    app = root.add_subcommand("gen-data", "Generate benchmark studies with the policy zoo");
    app->add_option("--benchmark", benchmark_, "Benchmark suite")
        ->check(CLI::IsMember({"bbob"}))
        ->capture_default_str();
    app->add_option("--families", families_, "train, test, all or a comma list")->capture_default_str();
    app->add_option("--policies", policies_, "all or a comma list of policy names")->capture_default_str();
    app->add_option("--num-studies", num_studies_, "Number of studies")->capture_default_str();
    app->add_option("--trials", trials_, "Trials per study")->capture_default_str();
    app->add_option("--min-dim", min_dim_)->capture_default_str();
    app->add_option("--max-dim", max_dim_)->capture_default_str();
    app->add_flag("--continuous", continuous_, "Keep every axis continuous");
    app->add_flag("--noiseless", noiseless_, "Disable observation noise");
    app->add_option("--seed", seed_)->capture_default_str();
    app->add_option("--workers", workers_, "Generation threads (output does not depend on it)")
        ->capture_default_str();
    app->add_option("--out", out_, "Output study file (JSON lines)")->required();
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream& err) override {
    GenerationSpec spec;
    spec.families = parse_family_list(families_);
    spec.policies = parse_policy_list(policies_);
    spec.num_studies = num_studies_;
    spec.trials = trials_;
    spec.seed = seed_;
    spec.workers = workers_;
    spec.task_options.min_dim = min_dim_;
    spec.task_options.max_dim = max_dim_;
    spec.task_options.discretize = !continuous_;
    spec.task_options.noisy = !noiseless_;
    spec.validate();

    const auto path = output_path(out_);
    rec.resolved["--out"] = {path.string()};
    auto file = open_output(path);
    const auto summary = generate(spec, file);
    finish_output(file, path);

    rec.config = spec.to_json();
    rec.config["benchmark"] = benchmark_;
    rec.seeds["seed"] = seed_;
    rec.outputs["--out"] = path.string();
    rec.primary_output = path;
    rec.summary["written"] = summary.written;
    rec.summary["skipped"] = summary.skipped;
    rec.summary["per_policy"] = summary.per_policy;
    rec.summary["errors"] = summary.errors;
    for (const auto& e : summary.errors) err << "skipped " << e << '\n';
    out << "wrote " << summary.written << " studies to " << path.string() << '\n';
  }

 private:
  std::string benchmark_ = "bbob";
  std::string families_ = "train";
  std::string policies_ = "all";
  std::size_t num_studies_ = 100;
  std::size_t trials_ = 300;
  int min_dim_ = 1;
  int max_dim_ = 20;
  bool continuous_ = false;
  bool noiseless_ = false;
  std::uint64_t seed_ = 0;
  int workers_ = default_workers();
  std::string out_;
};

// --- split -------------------------------------------------------------------

class SplitCommand : public Command {
 public:
  explicit SplitCommand(CLI::App& root) {
    app = root.add_subcommand("split", "Split a study file into train and validation by task");
    app->add_option("--in", in_, "Input study file")->required();
    app->add_option("--fractions", fractions_, "Train and validation fractions")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
    app->add_option("--seed", seed_)->capture_default_str();
    app->add_option("--train-out", train_out_)->required();
    app->add_option("--val-out", val_out_)->required();
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream&) override {
    if (fractions_.size() != 2 || fractions_[0] < 0.0 || fractions_[1] < 0.0 ||
        std::abs(fractions_[0] + fractions_[1] - 1.0) > 1e-9)
      throw UsageError("--fractions must be two non-negative numbers summing to 1");
    const auto in = input_path(in_);
    const auto train = output_path(train_out_);
    const auto val = output_path(val_out_);
    rec.resolved["--in"] = {in.string()};
    rec.resolved["--train-out"] = {train.string()};
    rec.resolved["--val-out"] = {val.string()};
    for (const auto& p : {train, val})
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const auto s = split_file(in, train, val, fractions_[0], seed_);

    rec.config = {{"fractions", fractions_}};
    rec.seeds["seed"] = seed_;
    rec.inputs["--in"] = in.string();
    rec.outputs["--train-out"] = train.string();
    rec.outputs["--val-out"] = val.string();
    rec.primary_output = train;
    rec.summary = {{"train", s.train}, {"validation", s.validation}};
    out << "train " << s.train << ", validation " << s.validation << '\n';
  }

 private:
  std::string in_;
  std::vector<double> fractions_ = {0.8, 0.2};
  std::uint64_t seed_ = 0;
  std::string train_out_;
  std::string val_out_;
};

// --- train -------------------------------------------------------------------

std::vector<Study> load_studies(const fs::path& path) {
  std::vector<Study> studies;
  StudyReader reader(path);
  while (auto r = reader.next()) studies.push_back(std::move(r->study));
  return studies;
}

class TrainCommand : public Command {
 public:
  explicit TrainCommand(CLI::App& root) {
    app = root.add_subcommand("train", "Train the sequence model on a study file");
    app->add_option("--data", data_, "Training study file")->required();
    app->add_option("--val-data", val_data_, "Validation study file (enables early stopping)");
    app->add_option("--config", config_, "JSON file with \"model\" and \"train\" sections");
    app->add_option("--resume", resume_, "Continue from a checkpoint written by this command");
    app->add_option("--steps", steps_);
    app->add_option("--seed", seed_);
    app->add_option("--batch-size", batch_size_);
    app->add_option("--learning-rate", learning_rate_);
    app->add_option("--warmup-steps", warmup_steps_);
    app->add_option("--eval-every", eval_every_);
    app->add_option("--patience", patience_);
    app->add_flag("--no-augment", no_augment_);
    app->add_option("--embed-dim", embed_dim_);
    app->add_option("--layers", layers_);
    app->add_option("--heads", heads_);
    app->add_option("--ff-dim", ff_dim_);
    app->add_option("--max-history-len", max_history_len_);
    app->add_option("--max-meta-len", max_meta_len_);
    app->add_option("--out", out_, "Checkpoint path")->required();
    app->add_option("--loss-log", loss_log_, "Loss table (default: <out>.loss.csv)");
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream&) override {
    ModelConfig model_config;
    TrainConfig train_config;
    std::optional<Checkpoint> resumed;
    if (!config_.empty()) {
      const auto path = input_path(config_);
      rec.resolved["--config"] = {path.string()};
      rec.inputs["--config"] = path.string();
      std::ifstream in(path);
      ordered_json j;
      try {
        j = ordered_json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad config file: ") + e.what());
      }
      model_config = ModelConfig::from_json(j.value("model", ordered_json::object()));
      train_config = TrainConfig::from_json(j.value("train", ordered_json::object()));
    }
    if (!resume_.empty()) {
      for (const char* flag : {"--config", "--embed-dim", "--layers", "--heads", "--ff-dim",
                               "--max-history-len", "--max-meta-len"}) {
        if (given(flag)) throw UsageError(std::string(flag) + " cannot be combined with --resume");
      }
      const auto path = input_path(resume_);
      rec.resolved["--resume"] = {path.string()};
      rec.inputs["--resume"] = path.string();
      resumed = load_checkpoint(path);
      if (!resumed->train_state || !resumed->train_config)
        throw DataError("checkpoint carries no training state to resume");
      model_config = resumed->model_config;
      train_config = *resumed->train_config;
    }
    if (given("--steps")) train_config.steps = steps_;
    if (given("--seed")) {
      train_config.seed = seed_;
      if (!resumed) model_config.seed = seed_;
    }
    if (given("--batch-size")) train_config.batch_size = batch_size_;
    if (given("--learning-rate")) train_config.learning_rate = learning_rate_;
    if (given("--warmup-steps")) train_config.warmup_steps = warmup_steps_;
    if (given("--eval-every")) train_config.eval_every = eval_every_;
    if (given("--patience")) train_config.patience = patience_;
    if (no_augment_) train_config.augment = false;
    if (given("--embed-dim")) model_config.embed_dim = embed_dim_;
    if (given("--layers")) model_config.num_layers = layers_;
    if (given("--heads")) model_config.num_heads = heads_;
    if (given("--ff-dim")) model_config.feedforward_dim = ff_dim_;
    if (given("--max-history-len")) model_config.max_history_len = max_history_len_;
    if (given("--max-meta-len")) model_config.max_meta_len = max_meta_len_;
    model_config.validate();
    train_config.validate();

    const auto data = input_path(data_);
    rec.resolved["--data"] = {data.string()};
    rec.inputs["--data"] = data.string();
    std::vector<Study> validation;
    if (!val_data_.empty()) {
      const auto val = input_path(val_data_);
      rec.resolved["--val-data"] = {val.string()};
      rec.inputs["--val-data"] = val.string();
      validation = load_studies(val);
    }
    const auto ckpt_path = output_path(out_);
    const auto log_path = loss_log_.empty() ? with_suffix(ckpt_path, ".loss.csv") : output_path(loss_log_);
    rec.resolved["--out"] = {ckpt_path.string()};
    if (!loss_log_.empty()) rec.resolved["--loss-log"] = {log_path.string()};

    Trainer trainer(model_config, train_config, load_studies(data), std::move(validation), Vocab());
    if (resumed) trainer.resume(resumed->params, *resumed->train_state);
    trainer.run();

    const auto& state = trainer.state();
    if (ckpt_path.has_parent_path()) fs::create_directories(ckpt_path.parent_path());
    save_checkpoint(ckpt_path, {model_config, trainer.model().parameters(), train_config, state});
    auto log = open_output(log_path);
    log << "step,train_loss,val_loss\n";
    for (const auto& r : state.log) {
      log << r.step << ',' << format_number(r.train_loss) << ','
          << (r.val_loss ? format_number(*r.val_loss) : std::string()) << '\n';
    }
    finish_output(log, log_path);

    rec.config = {{"model", model_config.to_json()}, {"train", train_config.to_json()}};
    rec.seeds = {{"model_init", model_config.seed}, {"training", train_config.seed}};
    rec.outputs["--out"] = ckpt_path.string();
    rec.outputs["--loss-log"] = log_path.string();
    rec.primary_output = ckpt_path;
    rec.summary = {{"steps", state.step},
                   {"stopped_early", state.stopped},
                   {"parameters", trainer.model().num_parameters()}};
    if (std::isfinite(state.best_val_loss)) {
      rec.summary["best_val_loss"] = state.best_val_loss;
      rec.summary["best_step"] = state.best_step;
    }
    out << "trained " << state.step << " steps; checkpoint " << ckpt_path.string() << '\n';
  }

 private:
  std::string data_, val_data_, config_, resume_, out_, loss_log_;
  int steps_ = 0;
  std::uint64_t seed_ = 0;
  int batch_size_ = 0;
  double learning_rate_ = 0.0;
  int warmup_steps_ = 0;
  int eval_every_ = 0;
  int patience_ = 0;
  bool no_augment_ = false;
  int embed_dim_ = 0, layers_ = 0, heads_ = 0, ff_dim_ = 0, max_history_len_ = 0, max_meta_len_ = 0;
};

// --- shared pieces of optimize and eval --------------------------------------

// Which BBOB task each run uses.
struct TaskFlags {
  std::string task = "sample";
  std::string families = "all";
  int min_dim = 1;
  int max_dim = 5;
  bool continuous = false;
  bool noiseless = false;

  void add(CLI::App& app) {
    app.add_option("--task", task, "\"sample\" or FAMILY:DIM[:SEED]")->capture_default_str();
    app.add_option("--families", families, "Families for sampled tasks")->capture_default_str();
    app.add_option("--min-dim", min_dim)->capture_default_str();
    app.add_option("--max-dim", max_dim)->capture_default_str();
    app.add_flag("--continuous", continuous, "Keep every axis continuous");
    app.add_flag("--noiseless", noiseless, "Disable observation noise");
  }

  TaskOptions options() const {
    TaskOptions o;
    o.min_dim = min_dim;
    o.max_dim = max_dim;
    o.discretize = !continuous;
    o.noisy = !noiseless;
    o.validate();
    return o;
  }

  // Sampled tasks depend on (seed, run) only, so every method sees the same list.
  BbobTask for_run(std::uint64_t seed, std::size_t run) const {
    const auto opts = options();
    if (task == "sample")
      return sample_task(derive_seed({seed, 0x7a51, run}), parse_family_list(families), opts);
    const auto parts = split_list(task, ':');
    if (parts.size() < 2 || parts.size() > 3) throw UsageError("--task must be FAMILY:DIM[:SEED]");
    TaskDescriptor d;
    d.family = parse_bbob_family(parts[0]);
    try {
      d.dimension = std::stoi(parts[1]);
      d.seed = parts.size() == 3 ? std::stoull(parts[2]) : 0;
    } catch (const std::exception&) {
      throw UsageError("--task must be FAMILY:DIM[:SEED]");
    }
    d.discretize = opts.discretize;
    d.noisy = opts.noisy;
    return make_task(d, opts);
  }

  ordered_json to_json() const {
    return {{"task", task},           {"families", families},   {"min_dim", min_dim},
            {"max_dim", max_dim},     {"discretize", !continuous}, {"noisy", !noiseless}};
  }
};

struct RunTrace {
  std::vector<Trial> history;
  std::vector<double> noiseless;
  std::vector<double> curve;
  std::size_t clamped = 0;
};

using Suggest = std::function<std::vector<double>(std::span<const Trial>, Rng&)>;

NormalizationAnchors task_anchors(const BbobTask& task, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const auto space = task.search_space();
  std::vector<double> ys;
  ys.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) ys.push_back(task.noiseless(random_point(space, rng)));
  NormalizationAnchors a;
  a.y_rand = median(ys);
  a.y_max = task.known_max().value_or(*std::max_element(ys.begin(), ys.end()));
  if (!(a.y_max > a.y_rand)) a.y_max = a.y_rand + 1.0;
  return a;
}

RunTrace trace_run(const BbobTask& task, const Suggest& suggest, std::size_t trials,
                   const NormalizationAnchors& anchors, Rng& policy_rng, Rng& eval_rng) {
  RunTrace t;
  const auto space = task.search_space();
  for (std::size_t k = 0; k < trials; ++k) {
    auto x = suggest(t.history, policy_rng);
    if (!space.contains(x)) throw NumericError("optimizer suggested a point outside the search space");
    const double y = task.evaluate(x, eval_rng);
    t.noiseless.push_back(task.noiseless(x));
    t.history.push_back({std::move(x), y});
  }
  t.curve = best_so_far_curve(t.noiseless, anchors, &t.clamped);
  return t;
}

// A checkpointed transformer or the objective-aware oracle.
struct ModelSource {
  std::string checkpoint;
  bool oracle = false;
  double oracle_width = 1.0;
  std::shared_ptr<const Transformer<float>> model;

  void add(CLI::App& app) {
    app.add_option("--checkpoint", checkpoint, "Trained model checkpoint");
    app.add_flag("--oracle", oracle, "Use the objective-aware oracle model");
    app.add_option("--oracle-width", oracle_width, "Oracle bump width in bins")->capture_default_str();
  }

  bool present() const { return oracle || !checkpoint.empty(); }

  void load(RunRecord& rec) {
    if (oracle && !checkpoint.empty()) throw UsageError("--oracle and --checkpoint are exclusive");
    if (checkpoint.empty()) return;
    const auto path = input_path(checkpoint);
    rec.resolved["--checkpoint"] = {path.string()};
    rec.inputs["--checkpoint"] = path.string();
    const auto ck = load_checkpoint(path);
    auto m = std::make_shared<Transformer<float>>(model_from_checkpoint(ck));
    // Early-stopped runs keep their best validation parameters.
    if (ck.train_state && std::isfinite(ck.train_state->best_val_loss) &&
        ck.train_state->best_params.size() == m->num_parameters())
      m->parameters() = ck.train_state->best_params;
    model = std::move(m);
  }

  Suggest make(const BbobTask& task, const Metadata& metadata,
               const std::optional<AcquisitionSpec>& acq, const InferenceConfig& config) const {
    const Vocab vocab;
    if (model) {
      auto policy = std::make_shared<ModelPolicy>(*model, metadata, vocab, acq, config);
      auto keep = model;
      return [policy, keep](std::span<const Trial> h, Rng& rng) { return policy->suggest(h, rng); };
    }
    auto objective = [&task](std::span<const double> x) { return task.noiseless(x); };
    auto oracle_model =
        std::make_shared<OracleModel>(metadata.space, objective, vocab, oracle_width);
    oracle_model->set_affine(config.affine);
    auto policy = std::make_shared<ModelPolicy>(*oracle_model, metadata, vocab, acq, config);
    return [policy, oracle_model](std::span<const Trial> h, Rng& rng) {
      oracle_model->set_y_range(observed_y_range(h));
      return policy->suggest(h, rng);
    };
  }
};

Suggest policy_suggest(const std::string& name, const SearchSpace& space) {
  std::shared_ptr<Policy> policy = make_policy(name, space);
  return [policy](std::span<const Trial> h, Rng& rng) { return policy->suggest(h, rng); };
}

double parse_temperature(const std::string& s) {
  try {
    std::size_t used = 0;
    const double t = std::stod(s, &used);
    if (used == s.size()) return t;
  } catch (const std::exception&) {
  }
  return InferenceConfig::temperature_preset(s);
}

template <typename Work>
void run_parallel(std::size_t n, int workers, Work&& work) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::vector<std::exception_ptr> failures(n);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < n; i += static_cast<std::size_t>(workers)) {
          try {
            work(i);
          } catch (...) {
            failures[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
}

std::string join_point(std::span<const double> x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) s += ' ';
    s += format_number(x[i]);
  }
  return s;
}

void write_trajectories(std::ostream& out, std::span<const RunTrace> runs) {
  out << "run,trial,x,y,noiseless,best_so_far\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& t = runs[r];
    for (std::size_t k = 0; k < t.history.size(); ++k) {
      out << r << ',' << k + 1 << ',' << join_point(t.history[k].x) << ','
          << format_number(t.history[k].y) << ',' << format_number(t.noiseless[k]) << ','
          << format_number(t.curve[k]) << '\n';
    }
  }
}

// --- optimize ----------------------------------------------------------------

class OptimizeCommand : public Command {
 public:
  explicit OptimizeCommand(CLI::App& root) {
    app = root.add_subcommand("optimize", "Run an optimizer on BBOB tasks");
    app->add_option("--policy", policy_, "Policy-zoo optimizer instead of a model");
    model_.add(*app);
    app->add_option("--acq", acq_, "none, ei, pi, ucb or ts")
        ->check(CLI::IsMember({"none", "ei", "pi", "ucb", "ts"}))
        ->capture_default_str();
    app->add_option("--M", num_candidates_, "Prior samples scored per suggestion")->capture_default_str();
    app->add_option("--alpha", alpha_, "Quantile for ucb")->capture_default_str();
    app->add_option("--temperature", temperature_, "Number or preset (default, realworld, hpob)")
        ->capture_default_str();
    app->add_option("--algorithm", algorithm_, "Algorithm name the model is conditioned on");
    app->add_flag("--window-history", window_, "Drop the oldest trials past the model limit");
    tasks_.add(*app);
    app->add_option("--trials", trials_)->capture_default_str();
    app->add_option("--runs", runs_, "Independent runs (one task each when sampling)")->capture_default_str();
    app->add_option("--y-rand-samples", y_rand_samples_)->capture_default_str();
    app->add_option("--seed", seed_)->capture_default_str();
    app->add_option("--workers", workers_, "Runs in parallel (output does not depend on it)")
        ->capture_default_str();
    app->add_option("--out", out_, "Trajectory table")->required();
    app->add_option("--curve-out", curve_out_, "Best-so-far table (default: <out>.curve.csv)");
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream&) override {
    if (!policy_.empty() && model_.present())
      throw UsageError("--policy cannot be combined with --checkpoint or --oracle");
    if (acq_ != "none" && !model_.present())
      throw UsageError("--acq requires --checkpoint or --oracle");
    if (policy_.empty() && !model_.present())
      throw UsageError("need --policy, --checkpoint or --oracle");
    if (trials_ < 1 || runs_ < 1 || y_rand_samples_ < 1)
      throw UsageError("--trials, --runs and --y-rand-samples must be >= 1");
    std::optional<AcquisitionSpec> acq;
    if (acq_ != "none") {
      acq.emplace();
      acq->kind = parse_acquisition(acq_);
      acq->num_candidates = num_candidates_;
      acq->alpha = alpha_;
      acq->validate();
    }
    InferenceConfig infer;
    infer.temperature = parse_temperature(temperature_);
    infer.window_history = window_;
    infer.validate();
    const std::string policy_name = policy_.empty() ? std::string() : canonical_policy(policy_);
    model_.load(rec);

    const auto path = output_path(out_);
    const auto curve_path = curve_out_.empty() ? with_suffix(path, ".curve.csv") : output_path(curve_out_);
    rec.resolved["--out"] = {path.string()};
    if (!curve_out_.empty()) rec.resolved["--curve-out"] = {curve_path.string()};

    std::vector<RunTrace> traces(runs_);
    std::vector<ordered_json> task_info(runs_);
    run_parallel(runs_, workers_, [&](std::size_t r) {
      const auto task = tasks_.for_run(seed_, r);
      const auto metadata = task.metadata(policy_name.empty() ? algorithm_ : policy_name);
      const auto anchors = task_anchors(task, y_rand_samples_, derive_seed({seed_, 0x4a2d, r}));
      const Suggest suggest = policy_name.empty() ? model_.make(task, metadata, acq, infer)
                                                  : policy_suggest(policy_name, metadata.space);
      Rng policy_rng(derive_seed({seed_, 0x9011, r}));
      Rng eval_rng(derive_seed({seed_, 0xe7a1, r}));
      traces[r] = trace_run(task, suggest, trials_, anchors, policy_rng, eval_rng);
      task_info[r] = {{"family", to_string(task.family())},
                      {"dimension", task.dimension()},
                      {"y_rand", anchors.y_rand},
                      {"y_max", anchors.y_max}};
    });

    auto traj = open_output(path);
    write_trajectories(traj, traces);
    finish_output(traj, path);
    std::vector<std::vector<double>> curves;
    std::size_t clamped = 0;
    for (const auto& t : traces) {
      curves.push_back(t.curve);
      clamped += t.clamped;
    }
    auto curve_file = open_output(curve_path);
    write_curve_table(curve_file, curves);
    finish_output(curve_file, curve_path);

    rec.config = {{"policy", policy_name},
                  {"model", model_.oracle ? "oracle" : (model_.checkpoint.empty() ? "" : "checkpoint")},
                  {"acquisition", acq_},
                  {"num_candidates", num_candidates_},
                  {"alpha", alpha_},
                  {"temperature", infer.temperature},
                  {"trials", trials_},
                  {"runs", runs_},
                  {"tasks", tasks_.to_json()}};
    rec.seeds["seed"] = seed_;
    rec.outputs["--out"] = path.string();
    rec.outputs["--curve-out"] = curve_path.string();
    rec.primary_output = path;
    rec.summary = {{"tasks", task_info}, {"clamped", clamped},
                   {"final_mean_best", mean_last(curves)}};
    out << "final mean best-so-far " << format_number(mean_last(curves)) << " over " << runs_
        << " runs\n";
  }

  static double mean_last(const std::vector<std::vector<double>>& curves) {
    double s = 0.0;
    for (const auto& c : curves) s += c.back();
    return s / static_cast<double>(curves.size());
  }

 private:
  std::string policy_;
  ModelSource model_;
  std::string acq_ = "none";
  int num_candidates_ = 100;
  double alpha_ = 0.9;
  std::string temperature_ = "1";
  std::string algorithm_;
  bool window_ = false;
  TaskFlags tasks_;
  std::size_t trials_ = 100;
  std::size_t runs_ = 1;
  std::size_t y_rand_samples_ = 1000;
  std::uint64_t seed_ = 0;
  int workers_ = default_workers();
  std::string out_;
  std::string curve_out_;
};

// --- eval --------------------------------------------------------------------

struct TrajectoryTable {
  std::vector<std::vector<double>> curves;  // one per run, in run order
};

TrajectoryTable read_trajectories(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("run,trial,", 0) != 0 ||
      line.substr(line.rfind(',') + 1) != "best_so_far")
    throw DataError(path.string() + ": not a trajectory table");
  std::map<std::size_t, std::vector<double>> runs;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto last = line.rfind(',');
    try {
      const auto run = static_cast<std::size_t>(std::stoull(line.substr(0, first)));
      runs[run].push_back(std::stod(line.substr(last + 1)));
    } catch (const std::exception&) {
      throw DataError(path.string() + ": line " + std::to_string(n) + ": malformed row");
    }
  }
  TrajectoryTable t;
  for (auto& [run, curve] : runs) t.curves.push_back(std::move(curve));
  if (t.curves.empty()) throw DataError(path.string() + ": no trajectories");
  return t;
}

class EvalCommand : public Command {
 public:
  explicit EvalCommand(CLI::App& root) {
    app = root.add_subcommand("eval", "Imitation, prediction and profile metrics");
    app->add_option("--mode", mode_, "imitation, predict or profile")
        ->check(CLI::IsMember({"imitation", "predict", "profile"}))
        ->required();
    // imitation
    app->add_option("--policy", policy_, "Target policy (imitation)");
    app->add_option("--reference-policy", reference_, "Compare against another policy (imitation)");
    model_.add(*app);
    tasks_.add(*app);
    app->add_option("--trials", trials_)->capture_default_str();
    app->add_option("--runs", runs_)->capture_default_str();
    app->add_option("--bins", bins_, "Histogram bins for parameter marginals")->capture_default_str();
    // predict
    app->add_option("--data", data_, "Study file (predict)");
    app->add_flag("--gp", gp_, "Include the GP baseline (predict)");
    app->add_option("--points-per-study", points_)->capture_default_str();
    app->add_option("--max-studies", max_studies_)->capture_default_str();
    // profile
    app->add_option("--input", inputs_, "METHOD=TRAJECTORY_TABLE (profile)");
    app->add_option("--rule", rule_, "fraction or median")
        ->check(CLI::IsMember({"fraction", "median"}))
        ->capture_default_str();
    app->add_option("--fraction", fraction_)->capture_default_str();
    app->add_option("--at-trial", at_trial_)->capture_default_str();

    app->add_option("--seed", seed_)->capture_default_str();
    app->add_option("--out", out_, "Metric table")->required();
    app->add_option("--curve-out", curve_out_, "Mean curves (imitation; default: <out>.curve.csv)");
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream&) override {
    const std::map<std::string, std::vector<std::string>> allowed = {
        {"imitation",
         {"--policy", "--reference-policy", "--checkpoint", "--oracle", "--oracle-width", "--task",
          "--families", "--min-dim", "--max-dim", "--continuous", "--noiseless", "--trials",
          "--runs", "--bins", "--curve-out"}},
        {"predict", {"--data", "--gp", "--checkpoint", "--points-per-study", "--max-studies"}},
        {"profile", {"--input", "--rule", "--fraction", "--at-trial"}},
    };
    for (const auto& [mode, flags] : allowed) {
      if (mode == mode_) continue;
      for (const auto& f : flags) {
        const auto& mine = allowed.at(mode_);
        if (given(f) && std::find(mine.begin(), mine.end(), f) == mine.end())
          throw UsageError(f + " does not apply to --mode " + mode_);
      }
    }
    path_ = output_path(out_);
    rec.resolved["--out"] = {path_.string()};
    rec.outputs["--out"] = path_.string();
    rec.primary_output = path_;
    rec.seeds["seed"] = seed_;
    rec.config["mode"] = mode_;
    if (mode_ == "imitation") imitation(rec, out);
    else if (mode_ == "predict") predict(rec, out);
    else profile(rec, out);
  }

 private:
  void imitation(RunRecord& rec, std::ostream& out) {
    if (policy_.empty()) throw UsageError("imitation needs --policy");
    if (reference_.empty() == !model_.present())
      throw UsageError("imitation needs exactly one of --checkpoint, --oracle, --reference-policy");
    if (trials_ < 1 || runs_ < 1 || bins_ < 1) throw UsageError("--trials, --runs, --bins must be >= 1");
    const auto target = canonical_policy(policy_);
    const auto reference = reference_.empty() ? std::string() : canonical_policy(reference_);
    model_.load(rec);
    const auto curve_path = curve_out_.empty() ? with_suffix(path_, ".curve.csv") : output_path(curve_out_);
    if (!curve_out_.empty()) rec.resolved["--curve-out"] = {curve_path.string()};

    std::vector<double> target_values, candidate_values;
    std::vector<std::vector<double>> target_curves, candidate_curves;
    for (std::size_t r = 0; r < runs_; ++r) {
      const auto task = tasks_.for_run(seed_, r);
      const auto metadata = task.metadata(target);
      const auto anchors = task_anchors(task, 1000, derive_seed({seed_, 0x4a2d, r}));
      auto one = [&](const Suggest& s, std::vector<double>& values, auto& curves) {
        // Both sides see identical random streams.
        Rng policy_rng(derive_seed({seed_, 0x9011, r}));
        Rng eval_rng(derive_seed({seed_, 0xe7a1, r}));
        auto t = trace_run(task, s, trials_, anchors, policy_rng, eval_rng);
        for (const auto& trial : t.history)
          for (std::size_t i = 0; i < trial.x.size(); ++i)
            values.push_back(normalize_param(trial.x[i], metadata.space[i], true));
        curves.push_back(std::move(t.curve));
      };
      one(policy_suggest(target, metadata.space), target_values, target_curves);
      one(reference.empty() ? model_.make(task, metadata, std::nullopt, InferenceConfig{})
                            : policy_suggest(reference, metadata.space),
          candidate_values, candidate_curves);
    }
    const auto hist_t = unit_histogram(target_values, bins_);
    const auto hist_c = unit_histogram(candidate_values, bins_);
    const double tv = total_variation(hist_t, hist_c);
    const auto mean_t = mean_curve(target_curves);
    const auto mean_c = mean_curve(candidate_curves);
    double curve_gap = 0.0;
    for (std::size_t k = 0; k < mean_t.size(); ++k) curve_gap += std::abs(mean_t[k] - mean_c[k]);
    curve_gap /= static_cast<double>(mean_t.size());

    auto table = open_output(path_);
    table << "metric,value\n"
          << "param_total_variation," << format_number(tv) << '\n'
          << "curve_mean_abs_difference," << format_number(curve_gap) << '\n'
          << "target_final_best," << format_number(mean_t.back()) << '\n'
          << "candidate_final_best," << format_number(mean_c.back()) << '\n';
    finish_output(table, path_);
    auto curves = open_output(curve_path);
    curves << "trial,target,candidate\n";
    for (std::size_t k = 0; k < mean_t.size(); ++k)
      curves << k + 1 << ',' << format_number(mean_t[k]) << ',' << format_number(mean_c[k]) << '\n';
    finish_output(curves, curve_path);

    rec.config["policy"] = target;
    rec.config["candidate"] = reference.empty() ? (model_.oracle ? "oracle" : "checkpoint") : reference;
    rec.config["trials"] = trials_;
    rec.config["runs"] = runs_;
    rec.config["bins"] = bins_;
    rec.config["tasks"] = tasks_.to_json();
    rec.outputs["--curve-out"] = curve_path.string();
    rec.summary = {{"param_total_variation", tv}, {"curve_mean_abs_difference", curve_gap}};
    out << "parameter TV " << format_number(tv) << ", curve gap " << format_number(curve_gap) << '\n';
  }

  static std::vector<double> mean_curve(const std::vector<std::vector<double>>& curves) {
    std::vector<double> m(curves.front().size(), 0.0);
    for (const auto& c : curves)
      for (std::size_t k = 0; k < m.size(); ++k) m[k] += c[k] / static_cast<double>(curves.size());
    return m;
  }

  void predict(RunRecord& rec, std::ostream& out) {
    if (data_.empty()) throw UsageError("predict needs --data");
    if (!gp_ && model_.checkpoint.empty()) throw UsageError("predict needs --checkpoint and/or --gp");
    if (points_ < 1) throw UsageError("--points-per-study must be >= 1");
    model_.load(rec);
    const auto data = input_path(data_);
    rec.resolved["--data"] = {data.string()};
    rec.inputs["--data"] = data.string();

    struct Track {
      std::vector<PiecewiseConstDist> predictions;
    };
    std::map<std::string, Track> tracks;
    std::vector<double> outcomes;
    std::vector<std::size_t> ids;
    std::size_t gp_failures = 0;
    const Vocab vocab;
    const InferenceConfig infer;
    StudyReader reader(data);
    std::size_t study_index = 0;
    while (auto record = reader.next()) {
      if (max_studies_ > 0 && study_index >= max_studies_) break;
      const Study study = to_maximization(std::move(record->study));
      const auto& h = study.history;
      const auto& space = study.metadata.space;
      if (h.size() >= 3) {
        const std::size_t span = h.size() - 2;
        std::set<std::size_t> positions;
        for (std::size_t k = 0; k < std::min(points_, span); ++k)
          positions.insert(2 + k * span / std::min(points_, span));
        for (const auto t : positions) {
          const std::span<const Trial> prefix(h.data(), t);
          const auto range = observed_y_range(prefix);
          if (range.degenerate()) continue;
          const auto [lo, hi] = prediction_support(range, infer.affine);
          std::optional<PiecewiseConstDist> gp_dist;
          if (gp_) {
            Eigen::MatrixXd inputs(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(space.dimension()));
            Eigen::VectorXd targets(static_cast<Eigen::Index>(t));
            for (std::size_t i = 0; i < t; ++i) {
              for (std::size_t d = 0; d < space.dimension(); ++d)
                inputs(i, d) = normalize_param(h[i].x[d], space[d], true);
              targets[i] = h[i].y;
            }
            Eigen::VectorXd query(static_cast<Eigen::Index>(space.dimension()));
            for (std::size_t d = 0; d < space.dimension(); ++d)
              query[d] = normalize_param(h[t].x[d], space[d], true);
            try {
              Rng rng(derive_seed({seed_, study_index, t}));
              const auto gp = GpPosterior<double>::fit(std::move(inputs), targets, GpFitConfig{}, rng);
              const auto p = gp.predict(query);
              gp_dist = gaussian_to_piecewise(p.mean, p.variance, lo, hi, vocab.q());
            } catch (const NumericError&) {
              ++gp_failures;
              continue;
            }
          }
          if (model_.model)
            tracks["model"].predictions.push_back(
                predict_function_dist(*model_.model, study.metadata, prefix, h[t].x, vocab, infer));
          if (gp_dist) tracks["gp"].predictions.push_back(std::move(*gp_dist));
          outcomes.push_back(h[t].y);
          ids.push_back(study_index);
        }
      }
      ++study_index;
    }
    if (outcomes.empty()) throw DataError("no predictable positions in " + data.string());

    auto table = open_output(path_);
    table << "predictor,points,log_likelihood,standard_error,floored,ece_percent,ks_deviation\n";
    ordered_json summary = ordered_json::object();
    for (const auto& [name, track] : tracks) {
      const auto ll = log_pred_likelihood(track.predictions, outcomes, ids);
      const double e = ece(track.predictions, outcomes);
      const auto cal = calibration_cdf(track.predictions, outcomes);
      table << name << ',' << outcomes.size() << ',' << format_number(ll.mean) << ','
            << format_number(ll.standard_error) << ',' << ll.floored << ',' << format_number(e)
            << ',' << format_number(cal.sup_deviation) << '\n';
      summary[name] = {{"log_likelihood", ll.mean}, {"ece_percent", e}, {"ks", cal.sup_deviation}};
      out << name << ": log-lik " << format_number(ll.mean) << ", ECE " << format_number(e) << "%\n";
    }
    finish_output(table, path_);
    rec.config["points_per_study"] = points_;
    rec.config["max_studies"] = max_studies_;
    rec.config["gp"] = gp_;
    rec.summary = {{"points", outcomes.size()}, {"gp_failures", gp_failures}, {"predictors", summary}};
  }

  void profile(RunRecord& rec, std::ostream& out) {
    if (inputs_.empty()) throw UsageError("profile needs at least one --input METHOD=PATH");
    ProfileConfig cfg;
    cfg.rule = rule_ == "median" ? ThresholdRule::kMedianOfBest : ThresholdRule::kFractionOfBest;
    cfg.fraction = fraction_;
    cfg.at_trial = at_trial_;
    CurvesByMethod curves;
    std::vector<std::string> resolved;
    for (const auto& spec : inputs_) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("--input must be METHOD=PATH");
      const auto name = spec.substr(0, eq);
      const auto path = input_path(spec.substr(eq + 1));
      resolved.push_back(name + "=" + path.string());
      rec.inputs[name] = path.string();
      if (!curves.emplace(name, read_trajectories(path).curves).second)
        throw UsageError("duplicate method '" + name + "'");
    }
    rec.resolved["--input"] = resolved;
    const auto prof = performance_profile(curves, cfg);

    auto table = open_output(path_);
    table << "trial";
    for (const auto& [name, _] : prof) table << ',' << name;
    table << '\n';
    const std::size_t n = prof.begin()->second.size();
    for (std::size_t k = 0; k < n; ++k) {
      table << k + 1;
      for (const auto& [_, p] : prof) table << ',' << format_number(p[k]);
      table << '\n';
    }
    finish_output(table, path_);
    rec.config["rule"] = rule_;
    rec.config["fraction"] = fraction_;
    rec.config["at_trial"] = at_trial_;
    for (const auto& [name, p] : prof) {
      rec.summary[name] = p.back();
      out << name << ": solved fraction " << format_number(p.back()) << '\n';
    }
  }

  std::string mode_;
  std::string policy_, reference_;
  ModelSource model_;
  TaskFlags tasks_;
  std::size_t trials_ = 50;
  std::size_t runs_ = 20;
  int bins_ = 10;
  std::string data_;
  bool gp_ = false;
  std::size_t points_ = 5;
  std::size_t max_studies_ = 0;
  std::vector<std::string> inputs_;
  std::string rule_ = "fraction";
  double fraction_ = 0.9;
  std::size_t at_trial_ = 50;
  std::uint64_t seed_ = 0;
  std::string out_, curve_out_;
  fs::path path_;
};

// --- tokens ------------------------------------------------------------------

class TokensCommand : public Command {
 public:
  explicit TokensCommand(CLI::App& root) {
    app = root.add_subcommand("tokens", "Dump the token stream of one study");
    app->add_option("--data", data_, "Study file")->required();
    app->add_option("--index", index_, "Zero-based study index")->capture_default_str();
    app->add_option("--format", format_, "ids or render")
        ->check(CLI::IsMember({"ids", "render"}))
        ->capture_default_str();
    app->add_flag("--raw-range", raw_, "Tokenize y without the inference affine");
    app->add_option("--out", out_, "Output text file")->required();
    add_manifest_flag();
  }

  void execute(RunRecord& rec, std::ostream& out, std::ostream&) override {
    const auto data = input_path(data_);
    const auto path = output_path(out_);
    rec.resolved["--data"] = {data.string()};
    rec.resolved["--out"] = {path.string()};
    StudyReader reader(data);
    std::optional<StudyRecord> record;
    for (std::size_t i = 0; i <= index_; ++i) {
      record = reader.next();
      if (!record) throw DataError("study index " + std::to_string(index_) + " out of range");
    }
    const Vocab vocab;
    TokenizeOptions opts;
    if (!raw_) opts.affine = YAffine::inference();
    const auto tok = tokenize_study(to_maximization(record->study), vocab, opts);
    auto file = open_output(path);
    if (format_ == "ids") {
      file << dump_tokens(tok.meta_tokens) << '\n' << dump_tokens(tok.history_tokens) << '\n';
    } else {
      file << render_tokens(tok.meta_tokens, vocab) << '\n'
           << render_tokens(tok.history_tokens, vocab) << '\n';
    }
    finish_output(file, path);
    rec.config = {{"index", index_}, {"format", format_}, {"affine", !raw_}};
    rec.inputs["--data"] = data.string();
    rec.outputs["--out"] = path.string();
    rec.primary_output = path;
    rec.summary = {{"meta_tokens", tok.meta_tokens.size()},
                   {"history_tokens", tok.history_tokens.size()}};
    out << tok.meta_tokens.size() << " metadata tokens, " << tok.history_tokens.size()
        << " history tokens\n";
  }

 private:
  std::string data_;
  std::size_t index_ = 0;
  std::string format_ = "ids";
  bool raw_ = false;
  std::string out_;
};

// --- rerun -------------------------------------------------------------------

struct RerunRequest {
  std::string manifest;
  std::string output_dir;
};

std::vector<std::string> rerun_args(const RerunRequest& req) {
  const auto path = input_path(req.manifest);
  std::ifstream in(path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad manifest: ") + e.what());
  }
  if (!j.contains("command") || !j.contains("args") || !j.contains("outputs"))
    throw DataError("manifest lacks command, args or outputs");
  const auto command = j["command"].get<std::string>();
  if (command == "rerun") throw DataError("manifest describes a rerun");
  auto args = j["args"].get<std::vector<std::string>>();
  if (!req.output_dir.empty()) {
    const auto dir = fs::absolute(fs::path(req.output_dir)).lexically_normal();
    fs::create_directories(dir);
    for (const auto& [flag, value] : j["outputs"].items()) {
      const auto it = std::find(args.begin(), args.end(), flag);
      if (it == args.end() || it + 1 == args.end()) continue;
      *(it + 1) = (dir / fs::path(value.get<std::string>()).filename()).string();
    }
  }
  std::vector<std::string> argv = {"seqhpo", command};
  argv.insert(argv.end(), args.begin(), args.end());
  return argv;
}

int report(std::ostream& err, const char* kind, const std::exception& e, int code) {
  err << "error" << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Hyperparameter optimization as sequence modeling", "seqhpo");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  commands.push_back(std::make_unique<GenDataCommand>(app));
  commands.push_back(std::make_unique<SplitCommand>(app));
  commands.push_back(std::make_unique<TrainCommand>(app));
  commands.push_back(std::make_unique<OptimizeCommand>(app));
  commands.push_back(std::make_unique<EvalCommand>(app));
  commands.push_back(std::make_unique<TokensCommand>(app));
  RerunRequest rerun;
  CLI::App* rerun_app = app.add_subcommand("rerun", "Repeat a run from its manifest");
  rerun_app->add_option("--manifest", rerun.manifest, "Manifest written by an earlier run")->required();
  rerun_app->add_option("--output-dir", rerun.output_dir, "Write outputs here instead");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rerun_app->parsed()) return run(rerun_args(rerun), out, err);
    for (auto& cmd : commands) {
      if (!cmd->app->parsed()) continue;
      RunRecord rec;
      rec.command = cmd->app->get_name();
      const auto started = utc_now();
      const auto t0 = std::chrono::steady_clock::now();
      cmd->execute(rec, out, err);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rec.args = canonical_args(*cmd->app, rec);
      const auto manifest = cmd->manifest.empty() ? with_suffix(rec.primary_output, ".manifest.json")
                                                  : output_path(cmd->manifest);
      write_manifest(manifest, rec, started, seconds);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    return report(err, " (usage)", e, kExitUsage);
  } catch (const NumericError& e) {
    return report(err, " (numeric)", e, kExitNumeric);
  } catch (const DataError& e) {
    return report(err, " (data)", e, kExitData);
  } catch (const Error& e) {
    return report(err, "", e, kExitData);
  } catch (const fs::filesystem_error& e) {
    return report(err, " (data)", e, kExitData);
  } catch (const nlohmann::json::exception& e) {
    return report(err, " (data)", e, kExitData);
  } catch (const std::exception& e) {
    return report(err, " (internal)", e, kExitInternal);
  }
}

}  // namespace seqhpo::cli
