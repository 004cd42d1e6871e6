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

// Checkpoint layout (little-endian):
//   "SEQHPOCK"  u32 version  u64 config digest
//   u64 length + model config JSON
//   u64 count + float parameters
//   u8 has_training; if set:
//     u64 length + train config JSON
//     i32 step, i32 best_step, i32 evals_since_best, u8 stopped, f64 best_val_loss
//     float adam_m[count], adam_v[count], best_params[count]
//     u64 rows + rows * (i32 step, f64 train_loss, u8 has_val, f64 val_loss)

#include <array>
#include <cstring>
#include <fstream>

#include "seqhpo/seqmodel.h"

namespace seqhpo {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'E', 'Q', 'H', 'P', 'O', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void text(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void floats(const Eigen::VectorXf& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(float)));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  std::string text() {
    const auto n = get<std::uint64_t>();
    if (n > (1u << 24)) throw DataError(path_ + ": corrupt checkpoint (oversized header)");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }
  Eigen::VectorXf floats(Eigen::Index n) {
    Eigen::VectorXf v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    check();
    return v;
  }

 private:
  void check() {
    if (!in_) throw DataError(path_ + ": truncated checkpoint");
  }
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

std::uint64_t config_digest(const ModelConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.put(kVersion);
  w.put(config_digest(checkpoint.model_config));
  w.text(checkpoint.model_config.to_json().dump());
  w.put<std::uint64_t>(static_cast<std::uint64_t>(checkpoint.params.size()));
  w.floats(checkpoint.params);
  const bool has_training = checkpoint.train_config && checkpoint.train_state;
  w.put<std::uint8_t>(has_training ? 1 : 0);
  if (has_training) {
    const auto& s = *checkpoint.train_state;
    w.text(checkpoint.train_config->to_json().dump());
    w.put<std::int32_t>(s.step);
    w.put<std::int32_t>(s.best_step);
    w.put<std::int32_t>(s.evals_since_best);
    w.put<std::uint8_t>(s.stopped ? 1 : 0);
    w.put<double>(s.best_val_loss);
    w.floats(s.adam_m);
    w.floats(s.adam_v);
    w.floats(s.best_params);
    w.put<std::uint64_t>(s.log.size());
    for (const auto& r : s.log) {
      w.put<std::int32_t>(r.step);
      w.put<double>(r.train_loss);
      w.put<std::uint8_t>(r.val_loss ? 1 : 0);
      w.put<double>(r.val_loss.value_or(0.0));
    }
  }
  if (!out) throw DataError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  Reader r(in, path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError(path.string() + ": not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  const auto digest = r.get<std::uint64_t>();
  Checkpoint ck;
  ck.model_config = ModelConfig::from_json(nlohmann::ordered_json::parse(r.text()));
  if (config_digest(ck.model_config) != digest)
    throw DataError(path.string() + ": config digest mismatch");
  const auto count = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  ck.params = r.floats(count);
  if (count != Transformer<float>(ck.model_config).num_parameters())
    throw DataError(path.string() + ": parameter count does not match the config");
  if (r.get<std::uint8_t>() != 0) {
    ck.train_config = TrainConfig::from_json(nlohmann::ordered_json::parse(r.text()));
    TrainState s;
    s.step = r.get<std::int32_t>();
    s.best_step = r.get<std::int32_t>();
    s.evals_since_best = r.get<std::int32_t>();
    s.stopped = r.get<std::uint8_t>() != 0;
    s.best_val_loss = r.get<double>();
    s.adam_m = r.floats(count);
    s.adam_v = r.floats(count);
    s.best_params = r.floats(count);
    const auto rows = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < rows; ++i) {
      LossRecord rec;
      rec.step = r.get<std::int32_t>();
      rec.train_loss = r.get<double>();
      const bool has_val = r.get<std::uint8_t>() != 0;
      const double val = r.get<double>();
      if (has_val) rec.val_loss = val;
      s.log.push_back(rec);
    }
    ck.train_state = std::move(s);
  }
  return ck;
}

Transformer<float> model_from_checkpoint(const Checkpoint& checkpoint) {
  Transformer<float> model(checkpoint.model_config);
  if (checkpoint.params.size() != model.num_parameters())
    throw DataError("checkpoint parameters do not match the config");
  model.parameters() = checkpoint.params;
  return model;
}

}  // namespace seqhpo
