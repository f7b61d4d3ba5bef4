#pragma once

// Forward-diffusion noise schedules.
//
// Indices passed to the accessors are 1-based (t = 1..T) to line up with the
// sampler loops; the underlying sequences are stored 0-based.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dmps/error.hpp"

namespace dmps {

/// Variance-preserving (DDPM) schedule: beta_t, alpha_t = 1 - beta_t,
/// alpha_bar_t = prod_{i<=t} alpha_i and the reverse-step variance.
class DdpmSchedule {
 public:
  std::size_t steps() const { return betas_.size(); }

  std::span<const double> betas() const { return betas_; }
  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> alpha_bars() const { return alpha_bars_; }
  std::span<const double> reverse_variances() const { return reverse_vars_; }

  double beta(std::size_t t) const { return betas_[slot(t)]; }
  double alpha(std::size_t t) const { return alphas_[slot(t)]; }
  double alpha_bar(std::size_t t) const { return alpha_bars_[slot(t)]; }
  double reverse_variance(std::size_t t) const { return reverse_vars_[slot(t)]; }

  // Marginal x_t | x_0 ~ N(signal_scale * x_0, noise_variance * I).
  double signal_scale(std::size_t t) const { return std::sqrt(alpha_bar(t)); }
  double noise_variance(std::size_t t) const { return 1.0 - alpha_bar(t); }

  friend DdpmSchedule make_ddpm_linear(std::size_t, double, double);
  friend DdpmSchedule make_alpha_bar_geometric(std::size_t, double, double);

 private:
  DdpmSchedule() = default;

  std::size_t slot(std::size_t t) const {
    require(t >= 1 && t <= betas_.size(), ErrorKind::index_out_of_range,
            "schedule index " + std::to_string(t) + " outside [1, " +
                std::to_string(betas_.size()) + "]");
    return t - 1;
  }

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
  std::vector<double> reverse_vars_;
};

/// Linear beta ramp from beta_min to beta_max over T steps.
inline DdpmSchedule make_ddpm_linear(std::size_t steps, double beta_min, double beta_max) {
  require(steps >= 2, ErrorKind::invalid_range, "DDPM schedule needs T >= 2");
  require(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0, ErrorKind::invalid_range,
          "need 0 < beta_min < beta_max < 1");
  DdpmSchedule s;
  s.betas_.resize(steps);
  s.alphas_.resize(steps);
  s.alpha_bars_.resize(steps);
  double running = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
    const double beta = beta_min + frac * (beta_max - beta_min);
    s.betas_[i] = beta;
    s.alphas_[i] = 1.0 - beta;
    running *= s.alphas_[i];
    s.alpha_bars_[i] = running;
  }
  s.reverse_vars_ = s.betas_;
  return s;
}

/// alpha_bar_t = abar_max * (abar_min / abar_max)^((t-1)/(T-1)); betas are
/// recovered from consecutive ratios with alpha_bar_0 = 1.
inline DdpmSchedule make_alpha_bar_geometric(std::size_t steps, double abar_max, double abar_min) {
  require(steps >= 2, ErrorKind::invalid_range, "geometric schedule needs T >= 2");
  require(abar_min > 0.0 && abar_min < abar_max && abar_max < 1.0, ErrorKind::invalid_range,
          "need 0 < abar_min < abar_max < 1");
  DdpmSchedule s;
  s.betas_.resize(steps);
  s.alphas_.resize(steps);
  s.alpha_bars_.resize(steps);
  const double ratio = abar_min / abar_max;
  double previous = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double expo = static_cast<double>(i) / static_cast<double>(steps - 1);
    const double abar = abar_max * std::pow(ratio, expo);
    s.alpha_bars_[i] = abar;
    s.alphas_[i] = abar / previous;
    s.betas_[i] = 1.0 - s.alphas_[i];
    previous = abar;
  }
  s.reverse_vars_ = s.betas_;
  return s;
}

/// Variance-exploding (SMLD) ladder. sigmas are stored largest first, which is
/// also the order the annealed sampler visits them.
class SmldSchedule {
 public:
  std::size_t levels() const { return sigmas_.size(); }
  std::span<const double> sigmas() const { return sigmas_; }
  double sigma(std::size_t t) const { return sigmas_[slot(t)]; }
  double step_scale() const { return eps_; }
  std::size_t inner_steps() const { return inner_steps_; }

  /// Langevin step size at level t: eps * sigma_t^2 / sigma_min^2, so the
  /// finest level runs at exactly eps.
  double step_size(std::size_t t) const {
    const double s = sigma(t);
    const double finest = sigmas_.back();
    return eps_ * (s * s) / (finest * finest);
  }

  double signal_scale(std::size_t) const { return 1.0; }
  double noise_variance(std::size_t t) const {
    const double s = sigma(t);
    return s * s;
  }

  friend SmldSchedule make_smld_geometric(std::size_t, double, double, double, std::size_t);

 private:
  SmldSchedule() = default;

  std::size_t slot(std::size_t t) const {
    require(t >= 1 && t <= sigmas_.size(), ErrorKind::index_out_of_range,
            "noise level " + std::to_string(t) + " outside [1, " +
                std::to_string(sigmas_.size()) + "]");
    return t - 1;
  }

  std::vector<double> sigmas_;
  double eps_ = 0.0;
  std::size_t inner_steps_ = 1;
};

inline SmldSchedule make_smld_geometric(std::size_t levels, double sigma_max, double sigma_min,
                                        double eps, std::size_t inner_steps) {
  require(levels >= 2, ErrorKind::invalid_range, "SMLD ladder needs T >= 2");
  require(sigma_min > 0.0 && sigma_max > sigma_min, ErrorKind::invalid_range,
          "need sigma_max > sigma_min > 0");
  require(eps > 0.0, ErrorKind::invalid_range, "step scale eps must be positive");
  require(inner_steps >= 1, ErrorKind::invalid_range, "inner step count K must be >= 1");
  SmldSchedule s;
  s.sigmas_.resize(levels);
  const double ratio = sigma_min / sigma_max;
  for (std::size_t i = 0; i < levels; ++i) {
    const double expo = static_cast<double>(i) / static_cast<double>(levels - 1);
    s.sigmas_[i] = sigma_max * std::pow(ratio, expo);
  }
  s.eps_ = eps;
  s.inner_steps_ = inner_steps;
  return s;
}

}  // namespace dmps
