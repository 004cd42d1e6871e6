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

#include "seqhpo/gp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace seqhpo {

template <typename Scalar>
void GpHyperparams<Scalar>::validate() const {
  if (!(amplitude > 0) || !(noise > 0) || lengthscales.size() == 0 || !(lengthscales.minCoeff() > 0))
    throw NumericError("GP hyperparameters must be strictly positive");
}

void GpFitConfig::validate() const {
  if (restarts < 1 || max_evaluations < 1) throw UsageError("GP fit needs restarts and evaluations");
  auto ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi; };
  if (!ok(amplitude_min, amplitude_max) || !ok(lengthscale_min, lengthscale_max) ||
      !ok(noise_min, noise_max))
    throw UsageError("GP hyperparameter bounds must satisfy 0 < min <= max");
}

template <typename Scalar>
Scalar GpPosterior<Scalar>::kernel(const Eigen::Ref<const Vector>& a,
                                   const Eigen::Ref<const Vector>& b) const {
  const Scalar r = ((a - b).array() / hyperparams_.lengthscales.array()).matrix().norm();
  return matern52(r, hyperparams_.amplitude);
}

template <typename Scalar>
GpPosterior<Scalar>::GpPosterior(Matrix inputs, const Vector& targets, Hyperparams hyperparams)
    : inputs_(std::move(inputs)), hyperparams_(std::move(hyperparams)) {
  const Eigen::Index n = inputs_.rows();
  if (n < 1) throw DataError("GP needs at least one observation");
  if (targets.size() != n) throw DataError("GP inputs and targets disagree in length");
  if (hyperparams_.lengthscales.size() != inputs_.cols())
    throw DataError("GP lengthscales do not match the input dimension");
  if (!targets.allFinite() || !inputs_.allFinite()) throw DataError("GP data must be finite");
  hyperparams_.validate();

  target_mean_ = targets.mean();
  const Scalar var = (targets.array() - target_mean_).square().sum() / Scalar(n);
  target_scale_ = var > 0 ? std::sqrt(var) : Scalar(1);
  const Vector z = (targets.array() - target_mean_) / target_scale_;

  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = kernel(inputs_.row(i).transpose(), inputs_.row(j).transpose());
      k(j, i) = k(i, j);
    }
  }
  k.diagonal().array() += hyperparams_.noise;

  const Scalar base = std::is_same_v<Scalar, float> ? Scalar(1e-7) : Scalar(1e-10);
  for (Scalar jitter = 0;; jitter = jitter == 0 ? base : jitter * 10) {
    if (jitter > Scalar(1e-6) * std::max(Scalar(1), hyperparams_.amplitude * hyperparams_.amplitude))
      throw NumericError("GP kernel matrix is not positive definite");
    Matrix kj = k;
    kj.diagonal().array() += jitter;
    cholesky_.compute(kj);
    if (cholesky_.info() == Eigen::Success && (cholesky_.matrixLLT().diagonal().array() > 0).all()) {
      jitter_ = jitter;
      break;
    }
  }
  alpha_ = cholesky_.solve(z);
  const Scalar log_det = 2 * cholesky_.matrixLLT().diagonal().array().log().sum();
  log_likelihood_ = Scalar(-0.5) * z.dot(alpha_) - Scalar(0.5) * log_det -
                    Scalar(0.5) * Scalar(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
typename GpPosterior<Scalar>::Prediction GpPosterior<Scalar>::predict(
    const Eigen::Ref<const Vector>& x) const {
  const Eigen::Index n = inputs_.rows();
  Vector kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel(inputs_.row(i).transpose(), x);
  const Scalar mean = kx.dot(alpha_);
  const Vector v = cholesky_.matrixL().solve(kx);
  const Scalar prior = hyperparams_.amplitude * hyperparams_.amplitude;
  const Scalar var = std::max(Scalar(0), prior - v.squaredNorm()) + hyperparams_.noise;
  return {target_mean_ + target_scale_ * mean, target_scale_ * target_scale_ * var};
}

template <typename Scalar>
GpPosterior<Scalar> GpPosterior<Scalar>::fit(Matrix inputs, const Vector& targets,
                                             const GpFitConfig& config, Rng& rng) {
  config.validate();
  const Eigen::Index d = inputs.cols();
  // Coordinates: log amplitude, log lengthscales, log noise.
  const Eigen::Index dims = d + 2;
  Eigen::VectorXd lower(dims), upper(dims);
  lower[0] = std::log(config.amplitude_min);
  upper[0] = std::log(config.amplitude_max);
  lower.segment(1, d).setConstant(std::log(config.lengthscale_min));
  upper.segment(1, d).setConstant(std::log(config.lengthscale_max));
  lower[dims - 1] = std::log(config.noise_min);
  upper[dims - 1] = std::log(config.noise_max);

  auto to_hp = [&](const Eigen::VectorXd& theta) {
    Hyperparams hp;
    hp.amplitude = static_cast<Scalar>(std::exp(theta[0]));
    hp.lengthscales = theta.segment(1, d).array().exp().template cast<Scalar>().matrix();
    hp.noise = static_cast<Scalar>(std::exp(theta[dims - 1]));
    return hp;
  };
  int evaluations = 0;
  auto objective = [&](const Eigen::VectorXd& theta) {
    ++evaluations;
    try {
      return static_cast<double>(GpPosterior(inputs, targets, to_hp(theta)).log_marginal_likelihood());
    } catch (const NumericError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  // The first start is a fixed, moderate guess; the rest are uniform in log space.
  Eigen::VectorXd best(dims);
  best.setZero();
  best.segment(1, d).setConstant(std::log(0.5));
  best[dims - 1] = std::log(1e-2);
  best = best.cwiseMax(lower).cwiseMin(upper);
  double best_value = objective(best);
  for (int r = 1; r < config.restarts; ++r) {
    Eigen::VectorXd theta(dims);
    for (Eigen::Index i = 0; i < dims; ++i) theta[i] = lower[i] + (upper[i] - lower[i]) * uniform01(rng);
    const double value = objective(theta);
    if (value > best_value) {
      best_value = value;
      best = theta;
    }
  }

  for (double step = 1.0; step > 0.02 && evaluations < config.max_evaluations; step *= 0.5) {
    bool improved = true;
    while (improved && evaluations < config.max_evaluations) {
      improved = false;
      for (Eigen::Index i = 0; i < dims; ++i) {
        for (double sign : {1.0, -1.0}) {
          Eigen::VectorXd trial = best;
          trial[i] = std::clamp(trial[i] + sign * step, lower[i], upper[i]);
          if (trial[i] == best[i]) continue;
          const double value = objective(trial);
          if (value > best_value) {
            best_value = value;
            best = trial;
            improved = true;
            break;
          }
        }
      }
    }
  }
  if (!std::isfinite(best_value)) throw NumericError("GP fit found no valid hyperparameters");
  return GpPosterior(std::move(inputs), targets, to_hp(best));
}

double truncated_loglik(double mean, double variance, double y, double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("truncation range is empty");
  if (!(variance > 0.0)) return kLogDensityFloor;
  const double sd = std::sqrt(variance);
  const double z = (y - mean) / sd;
  // Phi(b) - Phi(a) via erfc on the side with less cancellation.
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  const double mass = a > 0.0 ? 0.5 * (std::erfc(a / std::numbers::sqrt2) - std::erfc(b / std::numbers::sqrt2))
                              : 0.5 * (std::erfc(-b / std::numbers::sqrt2) - std::erfc(-a / std::numbers::sqrt2));
  if (!(mass > 0.0) || y < lo || y > hi) return kLogDensityFloor;
  const double log_density = -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  return std::max(kLogDensityFloor, log_density - std::log(mass));
}

template struct GpHyperparams<float>;
template struct GpHyperparams<double>;
template class GpPosterior<float>;
template class GpPosterior<double>;

}  // namespace seqhpo
