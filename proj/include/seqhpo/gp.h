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

// Gaussian-process regression with an ARD Matern-5/2 kernel over the unit
// cube. Targets are standardized internally; predictions come back in the
// caller's units.

#ifndef SEQHPO_GP_H_
#define SEQHPO_GP_H_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "seqhpo/core_types.h"
#include "seqhpo/random.h"

namespace seqhpo {

template <typename Scalar>
struct GpHyperparams {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Scalar amplitude = 1;
  Vector lengthscales;
  Scalar noise = Scalar(1e-2);  // observation noise variance

  void validate() const;
};

// Bounds are in standardized target units.
struct GpFitConfig {
  int restarts = 16;
  int max_evaluations = 300;
  double amplitude_min = 1e-2;
  double amplitude_max = 10.0;
  double lengthscale_min = 1e-2;
  double lengthscale_max = 10.0;
  double noise_min = 1e-6;
  double noise_max = 1.0;

  void validate() const;
};

template <typename Scalar>
Scalar matern52(Scalar r, Scalar amplitude) {
  using std::exp;
  using std::sqrt;
  const Scalar s5r = sqrt(Scalar(5)) * r;
  return amplitude * amplitude * (1 + s5r + Scalar(5) / 3 * r * r) * exp(-s5r);
}

template <typename Scalar>
class GpPosterior {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Hyperparams = GpHyperparams<Scalar>;

  struct Prediction {
    Scalar mean;
    Scalar variance;  // of a new observation, noise included
  };

  // Conditions on one row per input. Throws NumericError if the kernel
  // matrix stays indefinite after jitter.
  GpPosterior(Matrix inputs, const Vector& targets, Hyperparams hyperparams);

  // Maximizes the marginal likelihood over hyperparameters.
  static GpPosterior fit(Matrix inputs, const Vector& targets, const GpFitConfig& config, Rng& rng);

  Prediction predict(const Eigen::Ref<const Vector>& x) const;
  // Of the standardized targets.
  Scalar log_marginal_likelihood() const { return log_likelihood_; }
  const Hyperparams& hyperparams() const { return hyperparams_; }
  Scalar jitter() const { return jitter_; }
  Scalar target_mean() const { return target_mean_; }
  Scalar target_scale() const { return target_scale_; }

 private:
  Scalar kernel(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const;

  Matrix inputs_;
  Hyperparams hyperparams_;
  Scalar target_mean_ = 0;
  Scalar target_scale_ = 1;
  Scalar jitter_ = 0;
  Eigen::LLT<Matrix> cholesky_;
  Vector alpha_;
  Scalar log_likelihood_ = 0;
};

// Reported instead of -inf when an outcome gets no predictive mass.
inline constexpr double kLogDensityFloor = -27.631021115928547;  // log(1e-12)

// Log density of y under N(mean, variance) renormalized to [lo, hi].
double truncated_loglik(double mean, double variance, double y, double lo, double hi);

template <typename Scalar>
double truncated_loglik(const GpPosterior<Scalar>& posterior,
                        const Eigen::Ref<const typename GpPosterior<Scalar>::Vector>& x, double y,
                        double lo, double hi) {
  const auto p = posterior.predict(x);
  return truncated_loglik(static_cast<double>(p.mean), static_cast<double>(p.variance), y, lo, hi);
}

extern template struct GpHyperparams<float>;
extern template struct GpHyperparams<double>;
extern template class GpPosterior<float>;
extern template class GpPosterior<double>;

}  // namespace seqhpo

#endif  // SEQHPO_GP_H_
