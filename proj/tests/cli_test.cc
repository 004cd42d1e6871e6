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

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.h"
#include "doctest.h"
#include "json.hpp"
#include "seqhpo/dataset.h"
#include "seqhpo/seqmodel.h"

namespace seqhpo {
namespace {

namespace fs = std::filesystem;

struct Scratch {
  fs::path dir;
  Scratch() {
    static int n = 0;
    dir = fs::temp_directory_path() / ("seqhpo_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome seqhpo_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seqhpo");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::ordered_json manifest_of(const std::string& output) {
  return nlohmann::ordered_json::parse(slurp(output + ".manifest.json"));
}

// Writes a tiny generated study file and returns its path.
std::string small_dataset(const Scratch& s, const std::string& name = "all.jsonl",
                          const std::string& studies = "12") {
  const auto path = s / name;
  const auto r = seqhpo_cli({"gen-data", "--num-studies", studies, "--trials", "6", "--max-dim", "2",
                             "--policies", "random_search,grid_search", "--seed", "4", "--out", path});
  REQUIRE(r.code == 0);
  return path;
}

const std::vector<std::string> kTinyModel = {"--embed-dim", "16", "--layers", "1", "--heads", "2",
                                             "--ff-dim", "32", "--batch-size", "4"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TEST_CASE("gen-data records defaults in the manifest") {
  Scratch s;
  const auto out = s / "d.jsonl";
  const auto r = seqhpo_cli({"gen-data", "--num-studies", "2", "--trials", "3", "--policies", "random", "--out", out});
  REQUIRE(r.code == 0);
  const auto m = manifest_of(out);
  CHECK(m["command"] == "gen-data");
  CHECK(m["config"]["benchmark"] == "bbob");
  CHECK(m["config"]["min_dim"] == 1);
  CHECK(m["config"]["max_dim"] == 20);
  CHECK(m["config"]["families"].size() == 10);
  CHECK(m["config"]["policies"] == nlohmann::ordered_json::array({"random_search"}));
  CHECK(m["config"]["discretize"] == true);
  CHECK(m["seeds"]["seed"] == 0);
  CHECK(m["summary"]["written"] == 2);
  CHECK(m["timing"].contains("wall_seconds"));
  CHECK(read_studies(out).size() == 2);
}

TEST_CASE("usage errors exit with 2") {
  Scratch s;
  CHECK(seqhpo_cli({"gen-data", "--num-studies", "0", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"gen-data", "--policies", "simulated_annealing", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"gen-data", "--benchmark", "hpob", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"gen-data"}).code == 2);
  CHECK(seqhpo_cli({"frobnicate"}).code == 2);
  CHECK(seqhpo_cli({}).code == 2);
  CHECK(seqhpo_cli({"--help"}).code == 0);
}

TEST_CASE("gen-data is repeatable") {
  Scratch s;
  const auto a = small_dataset(s, "a.jsonl");
  const auto b = small_dataset(s, "b.jsonl");
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
}

TEST_CASE("split by fractions") {
  Scratch s;
  const auto all = small_dataset(s);
  auto r = seqhpo_cli({"split", "--in", all, "--fractions", "1.0,0.0", "--train-out", s / "tr",
                       "--val-out", s / "va"});
  REQUIRE(r.code == 0);
  CHECK(slurp(s / "tr") == slurp(all));
  CHECK(slurp(s / "va").empty());
  r = seqhpo_cli({"split", "--in", all, "--fractions", "0.7,0.2", "--train-out", s / "tr",
                  "--val-out", s / "va"});
  CHECK(r.code == 2);
  std::ofstream(s / "empty.jsonl").close();
  r = seqhpo_cli({"split", "--in", s / "empty.jsonl", "--train-out", s / "tr", "--val-out", s / "va"});
  CHECK(r.code == 3);
  CHECK(seqhpo_cli({"split", "--in", s / "missing.jsonl", "--train-out", s / "tr", "--val-out", s / "va"}).code == 3);
}

TEST_CASE("corrupt study files are data errors naming the line") {
  Scratch s;
  const auto all = small_dataset(s);
  {
    std::ofstream out(all, std::ios::app);
    out << "{\"version\":1}\n";
  }
  const auto r = seqhpo_cli({"tokens", "--data", all, "--index", "20", "--out", s / "t.txt"});
  CHECK(r.code == 3);
  CHECK(r.err.find("line 13") != std::string::npos);
}

TEST_CASE("train with zero steps writes an initialized checkpoint") {
  Scratch s;
  const auto all = small_dataset(s);
  const auto r = seqhpo_cli(concat({"train", "--data", all, "--steps", "0", "--out", s / "ck"}, kTinyModel));
  REQUIRE(r.code == 0);
  const auto ck = load_checkpoint(s / "ck");
  CHECK(ck.model_config.embed_dim == 16);
  CHECK(ck.params.size() == Transformer<float>(ck.model_config).num_parameters());
  CHECK(ck.params == Transformer<float>(ck.model_config).parameters());
  CHECK(seqhpo_cli({"train", "--out", s / "ck"}).code == 2);
  CHECK(seqhpo_cli({"train", "--data", s / "nope", "--out", s / "ck"}).code == 3);
}

TEST_CASE("resumed training matches an uninterrupted run") {
  Scratch s;
  const auto all = small_dataset(s);
  const auto base = concat({"train", "--data", all, "--val-data", all, "--eval-every", "2"}, kTinyModel);
  REQUIRE(seqhpo_cli(concat(base, {"--steps", "6", "--out", s / "full"})).code == 0);
  REQUIRE(seqhpo_cli(concat(base, {"--steps", "4", "--out", s / "half"})).code == 0);
  REQUIRE(seqhpo_cli({"train", "--data", all, "--val-data", all, "--resume", s / "half", "--steps", "6",
                      "--out", s / "resumed"})
              .code == 0);
  CHECK(slurp(s / "full") == slurp(s / "resumed"));
  CHECK(slurp(s / "full.loss.csv") == slurp(s / "resumed.loss.csv"));
  CHECK(seqhpo_cli({"train", "--data", all, "--resume", s / "half", "--layers", "2", "--out", s / "x"}).code == 2);
}

TEST_CASE("a tiny model memorizes a constant policy") {
  Scratch s;
  // One study repeated: the validation loss on the same data must fall.
  const auto one = small_dataset(s, "one.jsonl", "1");
  std::string line = slurp(one);
  {
    std::ofstream out(s / "many.jsonl", std::ios::binary);
    for (int i = 0; i < 8; ++i) out << line;
  }
  const auto r = seqhpo_cli(concat({"train", "--data", s / "many.jsonl", "--val-data", s / "many.jsonl",
                                    "--steps", "60", "--eval-every", "20", "--no-augment",
                                    "--learning-rate", "0.01", "--warmup-steps", "10", "--out", s / "ck"},
                                   kTinyModel));
  REQUIRE(r.code == 0);
  std::istringstream log(slurp(s / "ck.loss.csv"));
  std::string row;
  std::getline(log, row);
  std::vector<double> val;
  while (std::getline(log, row)) {
    const auto last = row.rfind(',');
    if (last + 1 < row.size()) val.push_back(std::stod(row.substr(last + 1)));
  }
  REQUIRE(val.size() == 4);
  CHECK(val.back() < val.front() - 1.0);
  CHECK(val[2] < val[0]);
}

TEST_CASE("optimize with the random policy") {
  Scratch s;
  const std::vector<std::string> base = {"optimize", "--policy", "random", "--trials", "7", "--runs", "2",
                                         "--seed", "5"};
  auto r = seqhpo_cli(concat(base, {"--out", s / "a.csv"}));
  REQUIRE(r.code == 0);
  REQUIRE(seqhpo_cli(concat(base, {"--out", s / "b.csv"})).code == 0);
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
  CHECK(slurp(s / "a.csv.curve.csv") == slurp(s / "b.csv.curve.csv"));
  std::istringstream rows(slurp(s / "a.csv"));
  std::string row;
  std::size_t n = 0;
  while (std::getline(rows, row)) ++n;
  CHECK(n == 1 + 14);
  CHECK(manifest_of(s / "a.csv")["config"]["policy"] == "random_search");
}

TEST_CASE("optimize argument checks") {
  Scratch s;
  CHECK(seqhpo_cli({"optimize", "--acq", "ei", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"optimize", "--policy", "random", "--acq", "ei", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"optimize", "--policy", "random", "--oracle", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"optimize", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"optimize", "--policy", "random", "--task", "SPHERE", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"optimize", "--checkpoint", s / "missing", "--out", s / "x"}).code == 3);
}

TEST_CASE("one acquisition candidate reduces to the prior policy") {
  Scratch s;
  const std::vector<std::string> base = {"optimize", "--oracle", "--task", "SPHERE:2:3", "--trials", "8",
                                         "--seed", "1"};
  REQUIRE(seqhpo_cli(concat(base, {"--acq", "none", "--out", s / "prior.csv"})).code == 0);
  REQUIRE(seqhpo_cli(concat(base, {"--acq", "ei", "--M", "1", "--out", s / "ei1.csv"})).code == 0);
  CHECK(slurp(s / "prior.csv") == slurp(s / "ei1.csv"));
}

TEST_CASE("imitation of a policy by itself has zero distance") {
  Scratch s;
  const auto r = seqhpo_cli({"eval", "--mode", "imitation", "--policy", "regularized_evolution",
                             "--reference-policy", "regevo", "--trials", "30", "--runs", "3", "--out",
                             s / "im.csv"});
  REQUIRE(r.code == 0);
  const auto table = slurp(s / "im.csv");
  CHECK(table.find("param_total_variation,0\n") != std::string::npos);
  CHECK(table.find("curve_mean_abs_difference,0\n") != std::string::npos);
}

TEST_CASE("eval mode and input mismatches are usage errors") {
  Scratch s;
  CHECK(seqhpo_cli({"eval", "--mode", "predict", "--input", "a=b", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"eval", "--mode", "profile", "--data", s / "d", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"eval", "--mode", "imitation", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"eval", "--mode", "imitation", "--policy", "random", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"eval", "--mode", "predict", "--data", s / "d", "--out", s / "x"}).code == 2);
  CHECK(seqhpo_cli({"eval", "--mode", "bogus", "--out", s / "x"}).code == 2);
}

void write_table(const std::string& path, const std::vector<std::vector<double>>& runs) {
  std::ofstream out(path);
  out << "run,trial,x,y,noiseless,best_so_far\n";
  for (std::size_t r = 0; r < runs.size(); ++r)
    for (std::size_t k = 0; k < runs[r].size(); ++k)
      out << r << ',' << k + 1 << ",0,0,0," << runs[r][k] << '\n';
}

TEST_CASE("profile mode on a hand fixture") {
  Scratch s;
  write_table(s / "a.csv", {{0.5, 0.9, 1.0}, {0.2, 0.2, 0.3}, {0.9, 0.9, 0.9}});
  write_table(s / "b.csv", {{0.1, 0.5, 0.92}, {0.4, 0.4, 0.4}, {0.0, 0.95, 0.95}});
  const auto r = seqhpo_cli({"eval", "--mode", "profile", "--input", "a=" + (s / "a.csv"), "--input",
                             "b=" + (s / "b.csv"), "--at-trial", "3", "--out", s / "p.csv"});
  REQUIRE(r.code == 0);
  // Thresholds 0.9, 0.36, 0.855 per task.
  CHECK(slurp(s / "p.csv") ==
        "trial,a,b\n"
        "1,0.3333333333333333,0.3333333333333333\n"
        "2,0.6666666666666666,0.6666666666666666\n"
        "3,0.6666666666666666,1\n");
}

TEST_CASE("predict mode scores the GP baseline") {
  Scratch s;
  const auto all = small_dataset(s);
  const auto r = seqhpo_cli({"eval", "--mode", "predict", "--data", all, "--gp", "--out", s / "p.csv"});
  REQUIRE(r.code == 0);
  const auto table = slurp(s / "p.csv");
  CHECK(table.rfind("predictor,points,log_likelihood", 0) == 0);
  CHECK(table.find("\ngp,") != std::string::npos);
}

TEST_CASE("tokens dumps the convnet study") {
  Scratch s;
  StudyRecord rec;
  rec.study.metadata.name = "convnet on cifar10";
  rec.study.metadata.metric_name = "accuracy";
  rec.study.metadata.algorithm = "random_search";
  rec.study.metadata.space = SearchSpace({ParameterConfig::Double("opt_kw.lr", 1e-6, 1e-2, ScaleType::kLog),
                                          ParameterConfig::Categorical("opt_type", {"SGD", "Adam"})});
  rec.study.history = {{{0.0021237573, 0.0}, 0.69482429}, {{0.00038292234, 1.0}, 0.71642583}};
  write_studies(s / "c.jsonl", std::span<const StudyRecord>(&rec, 1));
  const auto r = seqhpo_cli({"tokens", "--data", s / "c.jsonl", "--format", "render", "--raw-range",
                             "--out", s / "t.txt"});
  REQUIRE(r.code == 0);
  const auto text = slurp(s / "t.txt");
  CHECK(text.find("\n<831><0>*<0>|<645><1>*<999>\n") != std::string::npos);
}

TEST_CASE("every command reruns byte-identically from its manifest") {
  Scratch s;
  const auto all = small_dataset(s);
  struct Case {
    std::vector<std::string> args;
    std::vector<std::string> outputs;
  };
  const std::vector<Case> cases = {
      {{"split", "--in", all, "--train-out", s / "tr.jsonl", "--val-out", s / "va.jsonl"},
       {"tr.jsonl", "va.jsonl"}},
      {concat({"train", "--data", all, "--val-data", all, "--steps", "3", "--out", s / "ck"}, kTinyModel),
       {"ck", "ck.loss.csv"}},
      {{"optimize", "--policy", "gp_ucb", "--trials", "6", "--runs", "2", "--out", s / "o.csv"},
       {"o.csv", "o.csv.curve.csv"}},
      {{"optimize", "--oracle", "--acq", "ucb", "--M", "5", "--trials", "6", "--out", s / "u.csv"},
       {"u.csv", "u.csv.curve.csv"}},
      {{"eval", "--mode", "predict", "--data", all, "--gp", "--points-per-study", "2", "--out", s / "p.csv"},
       {"p.csv"}},
      {{"eval", "--mode", "imitation", "--policy", "hill_climbing", "--oracle", "--trials", "5", "--runs",
        "2", "--out", s / "i.csv"},
       {"i.csv", "i.csv.curve.csv"}},
      {{"tokens", "--data", all, "--index", "3", "--out", s / "t.txt"}, {"t.txt"}},
  };
  const auto gen_out = all;
  int k = 0;
  for (const auto& c : cases) {
    INFO(c.args[0]);
    REQUIRE(seqhpo_cli(c.args).code == 0);
    const auto rerun_dir = s / ("rerun" + std::to_string(k++));
    const auto manifest = (s.dir / c.outputs[0]).string() + ".manifest.json";
    REQUIRE(seqhpo_cli({"rerun", "--manifest", manifest, "--output-dir", rerun_dir}).code == 0);
    for (const auto& o : c.outputs) {
      INFO(o);
      const auto a = slurp(s.dir / o);
      CHECK(!a.empty());
      CHECK(a == slurp(fs::path(rerun_dir) / o));
    }
  }
  REQUIRE(seqhpo_cli({"rerun", "--manifest", gen_out + ".manifest.json", "--output-dir", s / "g"}).code == 0);
  CHECK(slurp(gen_out) == slurp(fs::path(s / "g") / "all.jsonl"));
}

TEST_CASE("relative outputs honour the output directory variable") {
  Scratch s;
  ::setenv("SEQHPO_OUTPUT_DIR", s.dir.c_str(), 1);
  const auto r = seqhpo_cli({"optimize", "--policy", "random", "--trials", "2", "--out", "rel/t.csv"});
  ::unsetenv("SEQHPO_OUTPUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(s.dir / "rel" / "t.csv"));
  CHECK(fs::exists(s.dir / "rel" / "t.csv.manifest.json"));
}

}  // namespace
}  // namespace seqhpo
