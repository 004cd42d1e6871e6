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

#include "seqhpo/bbob.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <Eigen/QR>

namespace seqhpo {
namespace {

struct FamilyName {
  BbobFamily family;
  std::string_view name;
};

constexpr FamilyName kFamilyNames[] = {
    {BbobFamily::kSphere, "SPHERE"},
    {BbobFamily::kEllipsoidSeparable, "ELLIPSOID_SEPARABLE"},
    {BbobFamily::kRastriginSeparable, "RASTRIGIN_SEPARABLE"},
    {BbobFamily::kAttractiveSector, "ATTRACTIVE_SECTOR"},
    {BbobFamily::kSchaffersF7, "SCHAFFERS_F7"},
    {BbobFamily::kSchwefel, "SCHWEFEL"},
    {BbobFamily::kDiscus, "DISCUS"},
    {BbobFamily::kBentCigar, "BENT_CIGAR"},
    {BbobFamily::kSharpRidge, "SHARP_RIDGE"},
    {BbobFamily::kBuecheRastrigin, "BUECHE_RASTRIGIN"},
    {BbobFamily::kLinearSlope, "LINEAR_SLOPE"},
    {BbobFamily::kRosenbrockRotated, "ROSENBROCK_ROTATED"},
    {BbobFamily::kSumOfPowers, "SUM_OF_POWERS"},
    {BbobFamily::kGriewankRosenbrock, "GRIEWANK_ROSENBROCK"},
    {BbobFamily::kLunacek, "LUNACEK"},
};

constexpr double kPi = std::numbers::pi;

// Exponent ramp i / (D - 1) used by the ill-conditioned families; 0 in 1-D.
double ramp(Eigen::Index i, Eigen::Index d) {
  return d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
}

double rastrigin(const Eigen::VectorXd& z) {
  const double d = static_cast<double>(z.size());
  return 10.0 * (d - (2.0 * kPi * z.array()).cos().sum()) + z.squaredNorm();
}

double rosenbrock_terms(const Eigen::VectorXd& w, bool griewank) {
  // w is already mapped so that the optimum sits at w = 1.
  const Eigen::Index d = w.size();
  auto term = [&](Eigen::Index i) {
    const double a = d > 1 ? 100.0 * std::pow(w[i] * w[i] - w[i + 1], 2.0) : 0.0;
    return a + (w[i] - 1.0) * (w[i] - 1.0);
  };
  const Eigen::Index terms = std::max<Eigen::Index>(d - 1, 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < terms; ++i) {
    const double s = term(i);
    total += griewank ? s / 4000.0 - std::cos(s) : s;
  }
  if (griewank) total = 10.0 * total / static_cast<double>(terms) + 10.0;
  return total;
}

}  // namespace

std::string_view to_string(BbobFamily family) {
  for (const auto& [f, name] : kFamilyNames)
    if (f == family) return name;
  return "?";
}

BbobFamily parse_bbob_family(std::string_view name) {
  for (const auto& [f, n] : kFamilyNames)
    if (n == name) return f;
  throw UsageError("unknown benchmark family '" + std::string(name) + "'");
}

const std::vector<BbobFamily>& all_families() {
  static const std::vector<BbobFamily> kAll = [] {
    std::vector<BbobFamily> v;
    for (const auto& [f, name] : kFamilyNames) v.push_back(f);
    return v;
  }();
  return kAll;
}

const std::vector<BbobFamily>& train_families() {
  static const std::vector<BbobFamily> kTrain(all_families().begin(), all_families().begin() + 10);
  return kTrain;
}

const std::vector<BbobFamily>& test_families() {
  static const std::vector<BbobFamily> kTest(all_families().begin() + 10, all_families().end());
  return kTest;
}

std::vector<BbobFamily> parse_family_list(std::string_view spec) {
  if (spec == "train") return train_families();
  if (spec == "test") return test_families();
  if (spec == "all") return all_families();
  std::vector<BbobFamily> out;
  while (!spec.empty()) {
    const auto comma = spec.find(',');
    out.push_back(parse_bbob_family(spec.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    spec.remove_prefix(comma + 1);
  }
  if (out.empty()) throw UsageError("empty family list");
  return out;
}

std::string_view to_string(AxisKind kind) {
  switch (kind) {
    case AxisKind::kContinuous: return "CONTINUOUS";
    case AxisKind::kDiscrete: return "DISCRETE";
    case AxisKind::kCategorical: return "CATEGORICAL";
  }
  return "?";
}

double AxisSpec::grid_point(std::size_t i) const {
  return -BbobTask::kDomain +
         2.0 * BbobTask::kDomain * static_cast<double>(i) / static_cast<double>(levels - 1);
}

std::string grid_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  std::string s(buf);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kNone: return "NONE";
    case NoiseKind::kGaussianMultiplicative: return "GAUSSIAN_MULT";
    case NoiseKind::kUniformMultiplicative: return "UNIFORM_MULT";
    case NoiseKind::kCauchyAdditive: return "CAUCHY_ADD";
  }
  return "?";
}

void NoiseConfig::validate() const {
  if (!(scale >= 0.0)) throw UsageError("noise scale must be >= 0");
  if (!(frequency >= 0.0 && frequency <= 1.0)) throw UsageError("noise frequency must be in [0, 1]");
}

double NoiseConfig::apply(double value, Rng& rng) const {
  switch (kind) {
    case NoiseKind::kNone:
      return value;
    case NoiseKind::kGaussianMultiplicative:
      return value * (1.0 + scale * std::normal_distribution<double>(0.0, 1.0)(rng));
    case NoiseKind::kUniformMultiplicative:
      return value * (1.0 + scale * (2.0 * uniform01(rng) - 1.0));
    case NoiseKind::kCauchyAdditive: {
      if (uniform01(rng) >= frequency) return value;
      const double draw = scale * std::tan(kPi * (uniform01(rng) - 0.5));
      return value + std::clamp(draw, -100.0 * scale, 100.0 * scale);
    }
  }
  return value;
}

void TaskOptions::validate() const {
  if (min_dim < 1 || max_dim > 20 || min_dim > max_dim)
    throw UsageError("task dimension range must satisfy 1 <= min <= max <= 20");
  if (noise_scales.empty()) throw UsageError("noise scale list is empty");
  for (double s : noise_scales)
    if (!(s >= 0.0)) throw UsageError("noise scales must be >= 0");
  if (!(cauchy_frequency >= 0.0 && cauchy_frequency <= 1.0))
    throw UsageError("Cauchy frequency must be in [0, 1]");
}

BbobTask::BbobTask(BbobFamily family, Eigen::MatrixXd rotation, Eigen::VectorXd shift,
                   std::vector<AxisSpec> axes, NoiseConfig noise)
    : family_(family),
      rotation_(std::move(rotation)),
      shift_(std::move(shift)),
      axes_(std::move(axes)),
      noise_(noise) {
  const auto d = shift_.size();
  if (d < 1) throw DataError("task dimension must be >= 1");
  if (rotation_.rows() != d || rotation_.cols() != d)
    throw DataError("rotation does not match the task dimension");
  if (static_cast<Eigen::Index>(axes_.size()) != d)
    throw DataError("axis list does not match the task dimension");
  for (const auto& a : axes_) {
    if (a.kind != AxisKind::kContinuous && (a.levels < 2 || a.levels > 8))
      throw DataError("discretized axes need 2..8 levels");
    if (a.kind == AxisKind::kCategorical &&
        a.label_order.size() != static_cast<std::size_t>(a.levels))
      throw DataError("categorical axis label order has the wrong size");
  }
  noise_.validate();
}

SearchSpace BbobTask::search_space() const {
  std::vector<ParameterConfig> params;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const auto& axis = axes_[i];
    const std::string name = "x" + std::to_string(i);
    switch (axis.kind) {
      case AxisKind::kContinuous:
        params.push_back(ParameterConfig::Double(name, -kDomain, kDomain));
        break;
      case AxisKind::kDiscrete: {
        std::vector<double> values;
        for (int l = 0; l < axis.levels; ++l) values.push_back(axis.grid_point(l));
        params.push_back(ParameterConfig::Discrete(name, values));
        break;
      }
      case AxisKind::kCategorical: {
        std::vector<std::string> labels;
        for (auto g : axis.label_order) labels.push_back(grid_label(axis.grid_point(g)));
        params.push_back(ParameterConfig::Categorical(name, labels));
        break;
      }
    }
  }
  return SearchSpace(std::move(params));
}

Metadata BbobTask::metadata(std::string_view algorithm) const {
  Metadata m;
  m.name = std::string(to_string(family_));
  m.metric_name = "";
  m.goal = Goal::kMaximize;
  m.algorithm = std::string(algorithm);
  m.space = search_space();
  return m;
}

Eigen::VectorXd BbobTask::to_continuous(std::span<const double> x) const {
  if (!search_space().contains(x)) throw DataError("point outside the task domain");
  Eigen::VectorXd out(dimension());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const auto& axis = axes_[i];
    out[static_cast<Eigen::Index>(i)] =
        axis.kind == AxisKind::kCategorical
            ? axis.grid_point(axis.label_order[static_cast<std::size_t>(x[i])])
            : x[i];
  }
  return out;
}

double BbobTask::noiseless(std::span<const double> x) const {
  const Eigen::VectorXd z = rotation_ * (to_continuous(x) - shift_);
  return -family_cost(family_, z);
}

double BbobTask::evaluate(std::span<const double> x, Rng& rng) const {
  return noise_.apply(noiseless(x), rng);
}

std::optional<double> BbobTask::known_max() const {
  if (family_ == BbobFamily::kLinearSlope) return std::nullopt;
  for (const auto& a : axes_)
    if (a.kind != AxisKind::kContinuous) return std::nullopt;
  return 0.0;
}

double family_cost(BbobFamily family, const Eigen::VectorXd& z) {
  const Eigen::Index d = z.size();
  switch (family) {
    case BbobFamily::kSphere:
      return z.squaredNorm();
    case BbobFamily::kEllipsoidSeparable: {
      double total = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) total += std::pow(10.0, 6.0 * ramp(i, d)) * z[i] * z[i];
      return total;
    }
    case BbobFamily::kRastriginSeparable:
      return rastrigin(z);
    case BbobFamily::kBuecheRastrigin: {
      Eigen::VectorXd s(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        s[i] = std::pow(10.0, 0.5 * ramp(i, d)) * z[i];
        if (i % 2 == 0 && z[i] > 0.0) s[i] *= 10.0;
      }
      return rastrigin(s);
    }
    case BbobFamily::kAttractiveSector: {
      double total = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double s = z[i] > 0.0 ? 100.0 : 1.0;
        total += s * s * z[i] * z[i];
      }
      return std::pow(total, 0.9);
    }
    case BbobFamily::kSchaffersF7: {
      // In 1-D there is no neighbour pair; the single term uses |z|.
      const Eigen::Index pairs = std::max<Eigen::Index>(d - 1, 1);
      double total = 0.0;
      for (Eigen::Index i = 0; i < pairs; ++i) {
        const double s = d > 1 ? std::hypot(z[i], z[i + 1]) : std::abs(z[0]);
        const double root = std::sqrt(s);
        const double wave = std::sin(50.0 * std::pow(s, 0.2));
        total += root + root * wave * wave;
      }
      return std::pow(total / static_cast<double>(pairs), 2.0);
    }
    case BbobFamily::kSchwefel: {
      constexpr double kOpt = 420.9687462275036;
      constexpr double kBase = 418.9828872724338;
      double total = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        const double w = kOpt + 100.0 * z[i];
        total += kBase - w * std::sin(std::sqrt(std::abs(w)));
        const double excess = std::abs(w) - 500.0;
        if (excess > 0.0) total += excess * excess;
      }
      return std::max(total, 0.0);
    }
    case BbobFamily::kDiscus:
      return 1e6 * z[0] * z[0] + z.tail(d - 1).squaredNorm();
    case BbobFamily::kBentCigar:
      return z[0] * z[0] + 1e6 * z.tail(d - 1).squaredNorm();
    case BbobFamily::kSharpRidge:
      return z[0] * z[0] + 100.0 * z.tail(d - 1).norm();
    case BbobFamily::kLinearSlope: {
      double total = 0.0;
      for (Eigen::Index i = 0; i < d; ++i)
        total += std::pow(10.0, ramp(i, d)) * (BbobTask::kDomain - z[i]);
      return total;
    }
    case BbobFamily::kRosenbrockRotated:
    case BbobFamily::kGriewankRosenbrock: {
      const double c = std::max(1.0, std::sqrt(static_cast<double>(d)) / 8.0);
      const Eigen::VectorXd w = (c * z.array() + 1.0).matrix();
      return rosenbrock_terms(w, family == BbobFamily::kGriewankRosenbrock);
    }
    case BbobFamily::kSumOfPowers: {
      double total = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) total += std::pow(std::abs(z[i]), 2.0 + 4.0 * ramp(i, d));
      return std::sqrt(total);
    }
    case BbobFamily::kLunacek: {
      constexpr double kMu0 = 2.5;
      const double dd = static_cast<double>(d);
      const double s = 1.0 - 1.0 / (2.0 * std::sqrt(dd + 20.0) - 8.2);
      const double mu1 = -std::sqrt((kMu0 * kMu0 - 1.0) / s);
      const Eigen::ArrayXd xhat = z.array() + kMu0;
      const double first = (xhat - kMu0).square().sum();
      const double second = dd + s * (xhat - mu1).square().sum();
      return std::min(first, second) + 10.0 * (dd - (2.0 * kPi * (xhat - kMu0)).cos().sum());
    }
  }
  return 0.0;
}

Eigen::MatrixXd random_rotation(int dimension, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(dimension, dimension, [&] { return normal(rng); });
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fixing the signs of R's diagonal makes Q Haar distributed.
  for (int j = 0; j < dimension; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

AxisSpec discretize_axis(AxisKind kind, int levels, Rng& rng) {
  AxisSpec axis;
  axis.kind = kind;
  if (kind == AxisKind::kContinuous) return axis;
  if (levels < 2 || levels > 8) throw UsageError("discretization levels must be in [2, 8]");
  axis.levels = levels;
  if (kind == AxisKind::kCategorical) {
    axis.label_order.resize(static_cast<std::size_t>(levels));
    for (std::size_t i = 0; i < axis.label_order.size(); ++i) axis.label_order[i] = i;
    std::shuffle(axis.label_order.begin(), axis.label_order.end(), rng);
  }
  return axis;
}

BbobTask make_task(const TaskDescriptor& descriptor, const TaskOptions& options) {
  options.validate();
  if (descriptor.dimension < 1 || descriptor.dimension > 20)
    throw DataError("task dimension must be in [1, 20]");
  const int d = descriptor.dimension;
  Rng rng(derive_seed({descriptor.seed, 0x7a5c, static_cast<std::uint64_t>(descriptor.family),
                       static_cast<std::uint64_t>(d)}));
  Eigen::MatrixXd rotation = random_rotation(d, rng);
  Eigen::VectorXd shift = Eigen::VectorXd::NullaryExpr(
      d, [&] { return -BbobTask::kShiftBound + 2.0 * BbobTask::kShiftBound * uniform01(rng); });
  std::vector<AxisSpec> axes;
  for (int i = 0; i < d; ++i) {
    const auto kind = descriptor.discretize ? static_cast<AxisKind>(uniform_index(rng, 3))
                                            : AxisKind::kContinuous;
    const int levels = 2 + static_cast<int>(uniform_index(rng, 7));
    axes.push_back(discretize_axis(kind, levels, rng));
  }
  NoiseConfig noise;
  noise.frequency = options.cauchy_frequency;
  if (descriptor.noisy) {
    const std::size_t settings = 1 + 3 * options.noise_scales.size();
    const std::size_t pick = uniform_index(rng, settings);
    if (pick > 0) {
      noise.kind = static_cast<NoiseKind>(1 + (pick - 1) / options.noise_scales.size());
      noise.scale = options.noise_scales[(pick - 1) % options.noise_scales.size()];
    }
  }
  BbobTask task(descriptor.family, std::move(rotation), std::move(shift), std::move(axes), noise);
  task.set_descriptor(descriptor);
  return task;
}

BbobTask sample_task(std::uint64_t seed, std::span<const BbobFamily> families,
                     const TaskOptions& options) {
  if (families.empty()) throw UsageError("no benchmark families to sample from");
  options.validate();
  Rng rng(derive_seed({seed, 0xbb0b}));
  TaskDescriptor d;
  d.seed = seed;
  d.dimension = options.min_dim +
                static_cast<int>(uniform_index(rng, static_cast<std::size_t>(options.max_dim - options.min_dim + 1)));
  d.family = families[uniform_index(rng, families.size())];
  d.discretize = options.discretize;
  d.noisy = options.noisy;
  return make_task(d, options);
}

}  // namespace seqhpo
