#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dmps/oracle.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/sampler.hpp"
#include "dmps/types.hpp"

namespace dmps {

struct PsnrResult {
  bool identical = false;  // MSE == 0
  double decibels = std::numeric_limits<double>::infinity();

  double value() const { return decibels; }
};

/// 10 log10(peak^2 / MSE). With clamp_estimate the estimate is clipped to [0, peak] first.
inline PsnrResult psnr(const Vector& reference, const Vector& estimate, double peak = 1.0,
                       bool clamp_estimate = false) {
  require_size(estimate.size(), reference.size(), "psnr estimate");
  require(reference.size() >= 1, ErrorKind::empty_set, "psnr of empty vectors");
  require(std::isfinite(peak) && peak > 0.0, ErrorKind::invalid_range, "peak must be > 0");
  const Vector est = clamp_estimate ? Vector(estimate.cwiseMax(0.0).cwiseMin(peak)) : estimate;
  const double mse = (reference - est).squaredNorm() / static_cast<double>(reference.size());
  if (mse == 0.0) return {true, std::numeric_limits<double>::infinity()};
  return {false, 10.0 * std::log10(peak * peak / mse)};
}

struct MomentSummary {
  Vector mean;
  Matrix covariance;  // empty when count < 2
  std::size_t count = 0;

  bool has_covariance() const { return count >= 2; }
  const Matrix& cov() const {
    require(has_covariance(), ErrorKind::empty_set, "covariance needs at least 2 samples");
    return covariance;
  }
};

inline MomentSummary moments(std::span<const Vector> samples) {
  require(!samples.empty(), ErrorKind::empty_set, "no samples");
  const Index n = samples.front().size();
  MomentSummary out;
  out.count = samples.size();
  out.mean = Vector::Zero(n);
  for (const Vector& s : samples) {
    require_size(s.size(), n, "sample");
    out.mean += s;
  }
  out.mean /= static_cast<double>(out.count);
  if (out.count >= 2) {
    out.covariance = Matrix::Zero(n, n);
    for (const Vector& s : samples) {
      const Vector d = s - out.mean;
      out.covariance.noalias() += d * d.transpose();
    }
    out.covariance /= static_cast<double>(out.count - 1);
  }
  return out;
}

inline MomentSummary moments(const SampleSet& set) { return moments(std::span<const Vector>(set.samples)); }

struct MomentError {
  double mean_rel_err = 0.0;
  double cov_rel_err = 0.0;
};

/// Below this norm the truth is treated as zero and absolute error (scale 1) is reported.
inline constexpr double kZeroNormFallback = 1e-9;

inline double relative_error(double diff_norm, double truth_norm) {
  return truth_norm < kZeroNormFallback ? diff_norm : diff_norm / truth_norm;
}

inline MomentError posterior_moment_error(std::span<const Vector> samples, const GaussianPosterior& truth) {
  const MomentSummary m = moments(samples);
  require_size(m.mean.size(), truth.mean.size(), "truth dimension");
  MomentError e;
  e.mean_rel_err = relative_error((m.mean - truth.mean).norm(), truth.mean.norm());
  e.cov_rel_err = relative_error((m.cov() - truth.covariance).norm(), truth.covariance.norm());
  return e;
}

inline MomentError posterior_moment_error(std::span<const Vector> samples, const GmmPrior& truth) {
  return posterior_moment_error(samples, mixture_moments(truth));
}

inline MomentError posterior_moment_error(const SampleSet& set, const GaussianPosterior& truth) {
  return posterior_moment_error(std::span<const Vector>(set.samples), truth);
}

inline MomentError posterior_moment_error(const SampleSet& set, const GmmPrior& truth) {
  return posterior_moment_error(std::span<const Vector>(set.samples), truth);
}

/// Fraction of samples whose most responsible component (under `mixture`) is `component`.
inline double component_share(std::span<const Vector> samples, const GmmPrior& mixture, std::size_t component) {
  require(!samples.empty(), ErrorKind::empty_set, "no samples");
  require(component < mixture.size(), ErrorKind::index_out_of_range, "component index");
  std::size_t hits = 0;
  for (const Vector& s : samples) {
    require_size(s.size(), mixture.dim(), "sample");
    std::size_t best = 0;
    double best_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < mixture.size(); ++k) {
      const double lp = std::log(mixture.weights()[k]) + mixture.components()[k].noisy_log_density(s, 1.0, 0.0);
      if (lp > best_lp) {
        best_lp = lp;
        best = k;
      }
    }
    if (best == component) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace dmps
