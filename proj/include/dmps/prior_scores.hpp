#pragma once

// Analytic noise-perturbed prior scores. Diffusing x_0 ~ N(mu, C) with
// x_t = a x_0 + sqrt(v) w gives x_t ~ N(a mu, a^2 C + v I), where
// (a, v) = (sqrt(alpha_bar_t), 1 - alpha_bar_t) for DDPM and (1, sigma_t^2)
// for SMLD. Mixtures diffuse component-wise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmps/schedule.hpp"
#include "dmps/types.hpp"

namespace dmps {

/// Dense covariances are limited to this dimension; use the diagonal form above it.
inline constexpr Index kMaxDenseCovarianceDim = 4096;

/// SPD covariance, either diagonal or dense.
class Covariance {
 public:
  static Covariance diagonal(Vector variances) {
    require(variances.size() >= 1, ErrorKind::invalid_range, "empty covariance");
    require(variances.allFinite() && (variances.array() > 0.0).all(), ErrorKind::invalid_range,
            "diagonal covariance entries must be positive and finite");
    Covariance c;
    c.diag_ = std::move(variances);
    return c;
  }

  static Covariance isotropic(Index dim, double variance) {
    return diagonal(Vector::Constant(dim, variance));
  }

  static Covariance dense(Matrix m) {
    require(m.rows() == m.cols() && m.rows() >= 1, ErrorKind::dimension_mismatch,
            "covariance must be square");
    require(m.rows() <= kMaxDenseCovarianceDim, ErrorKind::dimension_too_large,
            "dense covariance above " + std::to_string(kMaxDenseCovarianceDim) +
                " dims; use a diagonal covariance");
    require(m.allFinite(), ErrorKind::non_finite_value, "covariance has non-finite entries");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()), ErrorKind::invalid_range,
            "covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() > 0.0, ErrorKind::invalid_range,
            "covariance is not positive definite");
    Covariance c;
    c.dense_ = std::move(m);
    return c;
  }

  bool is_diagonal() const { return !dense_.has_value(); }
  Index dim() const { return is_diagonal() ? diag_.size() : dense_->rows(); }
  const Vector& diagonal_values() const { return diag_; }

  Matrix to_dense() const {
    if (is_diagonal()) return diag_.asDiagonal();
    return *dense_;
  }

 private:
  Covariance() = default;
  Vector diag_;
  std::optional<Matrix> dense_;
};

/// N(center, scale^2 C + noise_var I) with its solve and log-determinant.
class PerturbedGaussian {
 public:
  PerturbedGaussian(const Vector& mean, const Covariance& cov, double scale, double noise_var)
      : center_(scale * mean) {
    const double s2 = scale * scale;
    if (cov.is_diagonal()) {
      diag_ = s2 * cov.diagonal_values().array() + noise_var;
      log_det_ = diag_.array().log().sum();
    } else {
      Matrix s = s2 * cov.to_dense();
      s.diagonal().array() += noise_var;
      llt_.compute(s);
      require(llt_.info() == Eigen::Success, ErrorKind::solver_failure,
              "perturbed covariance is not positive definite");
      log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
      dense_ = true;
    }
  }

  /// -S^{-1} (x - center)
  Vector score(const Vector& x) const { return -solve(x - center_); }

  double log_density(const Vector& x) const {
    const Vector d = x - center_;
    const double quad = d.dot(solve(d));
    const double n = static_cast<double>(d.size());
    return -0.5 * (quad + log_det_ + n * std::log(2.0 * std::numbers::pi));
  }

  /// Returns (log density, score) sharing one solve.
  std::pair<double, Vector> log_density_and_score(const Vector& x) const {
    const Vector d = x - center_;
    Vector sd = solve(d);
    const double n = static_cast<double>(d.size());
    const double logp = -0.5 * (d.dot(sd) + log_det_ + n * std::log(2.0 * std::numbers::pi));
    return {logp, -sd};
  }

 private:
  Vector solve(const Vector& r) const {
    if (dense_) return llt_.solve(r);
    return r.cwiseQuotient(diag_);
  }

  Vector center_;
  Vector diag_;
  Eigen::LLT<Matrix> llt_;
  double log_det_ = 0.0;
  bool dense_ = false;
};

class GaussianPrior {
 public:
  GaussianPrior(Vector mean, Covariance covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    require_size(mean_.size(), covariance_.dim(), "prior mean");
    require(mean_.allFinite(), ErrorKind::non_finite_value, "prior mean has non-finite entries");
  }

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Covariance& covariance() const { return covariance_; }

  PerturbedGaussian perturbed(double scale, double noise_var) const {
    return {mean_, covariance_, scale, noise_var};
  }

  Vector noisy_score(const Vector& x, double scale, double noise_var) const {
    require_size(x.size(), dim(), "score input");
    return perturbed(scale, noise_var).score(x);
  }

  double noisy_log_density(const Vector& x, double scale, double noise_var) const {
    require_size(x.size(), dim(), "density input");
    return perturbed(scale, noise_var).log_density(x);
  }

 private:
  Vector mean_;
  Covariance covariance_;
};

class GmmPrior {
 public:
  GmmPrior(std::vector<double> weights, std::vector<GaussianPrior> components)
      : weights_(std::move(weights)), components_(std::move(components)) {
    require(!components_.empty(), ErrorKind::invalid_range, "mixture needs at least one component");
    require(weights_.size() == components_.size(), ErrorKind::dimension_mismatch,
            "one weight per mixture component");
    double total = 0.0;
    for (double w : weights_) {
      require(std::isfinite(w) && w > 0.0, ErrorKind::invalid_range, "mixture weights must be positive");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, ErrorKind::invalid_range,
            "mixture weights must sum to 1");
    for (const auto& c : components_) {
      require_size(c.dim(), components_.front().dim(), "mixture component");
    }
    log_weights_.reserve(weights_.size());
    for (double w : weights_) log_weights_.push_back(std::log(w));
  }

  /// Builds a mixture, normalizing weights that are positive but do not sum to 1 exactly.
  static GmmPrior normalized(std::vector<double> weights, std::vector<GaussianPrior> components) {
    double total = 0.0;
    for (double w : weights) total += w;
    require(total > 0.0 && std::isfinite(total), ErrorKind::invalid_range, "mixture weights must be positive");
    for (double& w : weights) w /= total;
    return {std::move(weights), std::move(components)};
  }

  Index dim() const { return components_.front().dim(); }
  std::size_t size() const { return components_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<GaussianPrior>& components() const { return components_; }

  /// Responsibility-weighted component scores; responsibilities use log-sum-exp.
  Vector noisy_score(const Vector& x, double scale, double noise_var) const {
    require_size(x.size(), dim(), "score input");
    const std::size_t k = components_.size();
    std::vector<double> logp(k);
    std::vector<Vector> scores(k);
    for (std::size_t i = 0; i < k; ++i) {
      auto [lp, sc] = components_[i].perturbed(scale, noise_var).log_density_and_score(x);
      logp[i] = log_weights_[i] + lp;
      scores[i] = std::move(sc);
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    double norm = 0.0;
    for (double& l : logp) {
      l = std::exp(l - top);
      norm += l;
    }
    Vector out = Vector::Zero(x.size());
    for (std::size_t i = 0; i < k; ++i) out += (logp[i] / norm) * scores[i];
    return out;
  }

  double noisy_log_density(const Vector& x, double scale, double noise_var) const {
    require_size(x.size(), dim(), "density input");
    std::vector<double> logp(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i) {
      logp[i] = log_weights_[i] + components_[i].perturbed(scale, noise_var).log_density(x);
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    double sum = 0.0;
    for (double l : logp) sum += std::exp(l - top);
    return top + std::log(sum);
  }

 private:
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<GaussianPrior> components_;
};

/// Prior-score contract consumed by the samplers: the score of the perturbed
/// marginal at schedule index t (1-based).
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual Index dim() const = 0;
  virtual Vector score(const Vector& x_t, std::size_t t) const = 0;
};

/// Binds an analytic prior to a schedule. Schedule must provide
/// signal_scale(t) and noise_variance(t).
template <typename Prior, typename Schedule>
class PerturbedPriorScore final : public ScoreModel {
 public:
  PerturbedPriorScore(Prior prior, Schedule schedule)
      : prior_(std::move(prior)), schedule_(std::move(schedule)) {}

  Index dim() const override { return prior_.dim(); }

  Vector score(const Vector& x_t, std::size_t t) const override {
    return prior_.noisy_score(x_t, schedule_.signal_scale(t), schedule_.noise_variance(t));
  }

  double log_density(const Vector& x_t, std::size_t t) const {
    return prior_.noisy_log_density(x_t, schedule_.signal_scale(t), schedule_.noise_variance(t));
  }

  const Prior& prior() const { return prior_; }
  const Schedule& schedule() const { return schedule_; }

 private:
  Prior prior_;
  Schedule schedule_;
};

template <typename Prior, typename Schedule>
PerturbedPriorScore<Prior, Schedule> make_score_model(Prior prior, Schedule schedule) {
  return {std::move(prior), std::move(schedule)};
}

inline Vector gaussian_noisy_score(const GaussianPrior& prior, const DdpmSchedule& schedule,
                                   const Vector& x_t, std::size_t t) {
  return prior.noisy_score(x_t, schedule.signal_scale(t), schedule.noise_variance(t));
}

inline Vector gmm_noisy_score(const GmmPrior& prior, const DdpmSchedule& schedule,
                              const Vector& x_t, std::size_t t) {
  return prior.noisy_score(x_t, schedule.signal_scale(t), schedule.noise_variance(t));
}

template <typename Prior>
Vector smld_noisy_score(const Prior& prior, const SmldSchedule& schedule, const Vector& x_t,
                        std::size_t t) {
  return prior.noisy_score(x_t, schedule.signal_scale(t), schedule.noise_variance(t));
}

/// Epsilon-prediction form of a score: s_theta = -sqrt(1 - alpha_bar_t) * score.
inline Vector as_pretrained_residual(const ScoreModel& model, const DdpmSchedule& schedule,
                                     const Vector& x_t, std::size_t t) {
  return -std::sqrt(1.0 - schedule.alpha_bar(t)) * model.score(x_t, t);
}

/// Inverse of as_pretrained_residual: score = -s_theta / sqrt(1 - alpha_bar_t).
inline Vector score_from_residual(const Vector& residual, const DdpmSchedule& schedule,
                                  std::size_t t) {
  return -residual / std::sqrt(1.0 - schedule.alpha_bar(t));
}

}  // namespace dmps
