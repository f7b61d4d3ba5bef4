#pragma once

// Ground truth for checking the samplers and the pseudo-likelihood:
// conjugate posteriors, the exact noise-perturbed likelihood score under a
// Gaussian prior, a brute-force quadrature of p(y | x_t) in <= 2 dims, and the
// scalar toy comparison of exact vs. pseudo p(x_0 | x_t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "dmps/likelihood.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/schedule.hpp"
#include "dmps/types.hpp"

namespace dmps {

struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

/// Conjugate posterior: cov = (C^-1 + A^T A / sigma^2)^-1,
/// mean = cov (C^-1 mu + A^T y / sigma^2).
inline GaussianPosterior exact_gaussian_posterior(const GaussianPrior& prior, const Problem& problem) {
  require_size(prior.dim(), problem.signal_dim(), "prior dimension");
  const Matrix a = problem.op().to_dense();
  const Matrix c = prior.covariance().to_dense();
  const Index n = prior.dim();
  const double inv_noise = 1.0 / problem.noise_variance();
  Eigen::LLT<Matrix> prior_llt(c);
  require(prior_llt.info() == Eigen::Success, ErrorKind::solver_failure, "prior covariance factorization failed");
  Matrix precision = prior_llt.solve(Matrix::Identity(n, n));
  precision = 0.5 * (precision + precision.transpose()).eval();
  precision += inv_noise * a.transpose() * a;
  Eigen::LLT<Matrix> post_llt(precision);
  require(post_llt.info() == Eigen::Success, ErrorKind::solver_failure, "posterior precision factorization failed");
  GaussianPosterior post;
  post.covariance = post_llt.solve(Matrix::Identity(n, n));
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  const Vector rhs = prior_llt.solve(prior.mean()) + inv_noise * a.transpose() * problem.y();
  post.mean = post.covariance * rhs;
  return post;
}

/// Per-component conjugate update; weights proportional to
/// w_k N(y; A mu_k, sigma^2 I + A C_k A^T).
inline GmmPrior exact_gmm_posterior(const GmmPrior& prior, const Problem& problem) {
  require_size(prior.dim(), problem.signal_dim(), "prior dimension");
  const Matrix a = problem.op().to_dense();
  const Index m = a.rows();
  std::vector<double> log_evidence;
  std::vector<GaussianPrior> components;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const GaussianPrior& comp = prior.components()[k];
    const Matrix c = comp.covariance().to_dense();
    Matrix s = a * c * a.transpose();
    s.diagonal().array() += problem.noise_variance();
    Eigen::LLT<Matrix> llt(s);
    require(llt.info() == Eigen::Success, ErrorKind::solver_failure, "evidence covariance factorization failed");
    const Vector r = problem.y() - a * comp.mean();
    const double quad = r.dot(llt.solve(r));
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    log_evidence.push_back(std::log(prior.weights()[k]) -
                           0.5 * (quad + log_det + static_cast<double>(m) * std::log(2.0 * std::numbers::pi)));
    GaussianPosterior post = exact_gaussian_posterior(comp, problem);
    components.emplace_back(std::move(post.mean), Covariance::dense(std::move(post.covariance)));
  }
  const double top = *std::max_element(log_evidence.begin(), log_evidence.end());
  std::vector<double> weights;
  double total = 0.0;
  for (double l : log_evidence) {
    weights.push_back(std::exp(l - top));
    total += weights.back();
  }
  for (double& w : weights) w /= total;
  // Components with underflowed weight cannot be represented (weights must be > 0).
  std::vector<double> kept_w;
  std::vector<GaussianPrior> kept_c;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      kept_w.push_back(weights[k]);
      kept_c.push_back(std::move(components[k]));
    }
  }
  return GmmPrior::normalized(std::move(kept_w), std::move(kept_c));
}

/// Mean and covariance of a mixture.
inline GaussianPosterior mixture_moments(const GmmPrior& mixture) {
  const Index n = mixture.dim();
  GaussianPosterior out{Vector::Zero(n), Matrix::Zero(n, n)};
  for (std::size_t k = 0; k < mixture.size(); ++k) {
    out.mean += mixture.weights()[k] * mixture.components()[k].mean();
  }
  for (std::size_t k = 0; k < mixture.size(); ++k) {
    const auto& comp = mixture.components()[k];
    const Vector d = comp.mean() - out.mean;
    out.covariance += mixture.weights()[k] * (comp.covariance().to_dense() + d * d.transpose());
  }
  return out;
}

/// Exact p(x_0 | x_t) = N(mean_offset + gain x_t, cov) under a Gaussian prior,
/// with x_t = sqrt(abar) x_0 + sqrt(1 - abar) w.
struct ReverseTransition {
  Vector mean_offset;
  Matrix gain;
  Matrix covariance;
};

inline ReverseTransition exact_reverse_transition(const GaussianPrior& prior, double abar) {
  const Index n = prior.dim();
  const Matrix c = prior.covariance().to_dense();
  Eigen::LLT<Matrix> prior_llt(c);
  Matrix precision = prior_llt.solve(Matrix::Identity(n, n));
  precision = 0.5 * (precision + precision.transpose()).eval();
  precision.diagonal().array() += abar / (1.0 - abar);
  Eigen::LLT<Matrix> llt(precision);
  require(llt.info() == Eigen::Success, ErrorKind::solver_failure, "reverse transition factorization failed");
  ReverseTransition r;
  r.covariance = llt.solve(Matrix::Identity(n, n));
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
  r.mean_offset = r.covariance * prior_llt.solve(prior.mean());
  r.gain = (std::sqrt(abar) / (1.0 - abar)) * r.covariance;
  return r;
}

/// Score of the exact p(y | x_t) = N(y; A(b + G x_t), sigma^2 I + A V A^T) for a
/// Gaussian prior; the quantity the pseudo-likelihood approximates.
inline Vector exact_perturbed_likelihood_score(const GaussianPrior& prior, const Problem& problem,
                                               const DdpmSchedule& schedule, const Vector& x_t,
                                               std::size_t t) {
  require_size(prior.dim(), problem.signal_dim(), "prior dimension");
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  const ReverseTransition rev = exact_reverse_transition(prior, schedule.alpha_bar(t));
  const Matrix a = problem.op().to_dense();
  Matrix s = a * rev.covariance * a.transpose();
  s.diagonal().array() += problem.noise_variance();
  const Vector residual = problem.y() - a * (rev.mean_offset + rev.gain * x_t);
  Eigen::LLT<Matrix> llt(s);
  require(llt.info() == Eigen::Success, ErrorKind::solver_failure, "likelihood covariance factorization failed");
  return rev.gain.transpose() * (a.transpose() * llt.solve(residual));
}

/// Overload for mixtures: only single-component mixtures have a closed form here.
inline Vector exact_perturbed_likelihood_score(const GmmPrior& prior, const Problem& problem,
                                               const DdpmSchedule& schedule, const Vector& x_t,
                                               std::size_t t) {
  require(prior.size() == 1, ErrorKind::unsupported_prior,
          "exact perturbed likelihood needs a Gaussian prior; use the quadrature oracle for mixtures");
  return exact_perturbed_likelihood_score(prior.components().front(), problem, schedule, x_t, t);
}

namespace detail {

inline constexpr int kQuadraturePoints = 129;
inline constexpr double kQuadratureHalfWidth = 8.0;

/// log of the integral of exp(log_integrand) over a tensor trapezoid grid
/// spanning center +/- half_width * sd per axis.
template <typename LogFn>
double log_trapezoid(const Vector& center, const Vector& sd, int points, LogFn&& log_integrand) {
  const Index dim = center.size();
  const int total = dim == 1 ? points : points * points;
  std::vector<double> logs(static_cast<std::size_t>(total));
  std::vector<double> log_w(static_cast<std::size_t>(total));
  Vector x(dim);
  Vector step(dim);
  for (Index d = 0; d < dim; ++d) step[d] = 2.0 * kQuadratureHalfWidth * sd[d] / (points - 1);
  auto trap = [points](int i) { return (i == 0 || i == points - 1) ? 0.5 : 1.0; };
  for (int idx = 0; idx < total; ++idx) {
    const int i = idx % points;
    const int j = idx / points;
    x[0] = center[0] - kQuadratureHalfWidth * sd[0] + i * step[0];
    double w = trap(i) * step[0];
    if (dim == 2) {
      x[1] = center[1] - kQuadratureHalfWidth * sd[1] + j * step[1];
      w *= trap(j) * step[1];
    }
    logs[static_cast<std::size_t>(idx)] = log_integrand(x);
    log_w[static_cast<std::size_t>(idx)] = std::log(w);
  }
  double top = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < total; ++idx) {
    top = std::max(top, logs[static_cast<std::size_t>(idx)] + log_w[static_cast<std::size_t>(idx)]);
  }
  double sum = 0.0;
  for (int idx = 0; idx < total; ++idx) {
    sum += std::exp(logs[static_cast<std::size_t>(idx)] + log_w[static_cast<std::size_t>(idx)] - top);
  }
  return top + std::log(sum);
}

inline double log_normal_iso(const Vector& x, const Vector& mean, double var) {
  const double n = static_cast<double>(x.size());
  return -0.5 * ((x - mean).squaredNorm() / var + n * std::log(2.0 * std::numbers::pi * var));
}

/// Gaussian in x_0 proportional to N_k(x_0) N(x_t; a x_0, v I) [N(y; A x_0, s2 I)],
/// used only to place the quadrature box.
inline std::pair<Vector, Vector> box_for(const GaussianPrior& comp, const Matrix* a, double noise_var,
                                         double scale, double v, const Vector& x_t) {
  const Index n = comp.dim();
  const Matrix c = comp.covariance().to_dense();
  Eigen::LLT<Matrix> llt(c);
  Matrix precision = llt.solve(Matrix::Identity(n, n));
  precision.diagonal().array() += scale * scale / v;
  Vector rhs = llt.solve(comp.mean()) + (scale / v) * x_t;
  if (a != nullptr) {
    precision += a->transpose() * (*a) / noise_var;
  }
  const Matrix cov = precision.inverse();
  return {cov * rhs, cov.diagonal().cwiseSqrt()};
}

}  // namespace detail

struct QuadratureScore {
  Vector score;
  double estimated_error = 0.0;  // |score(129 pts) - score(65 pts)|, max norm
};

/// log p(y | x_t) by brute-force integration over x_0 (dim <= 2), per mixture
/// component on its own grid.
inline double quadrature_log_likelihood(const GmmPrior& prior, const Problem& problem, double scale,
                                        double noise_var, const Vector& x_t, int points) {
  require(prior.dim() <= 2, ErrorKind::dimension_too_large, "quadrature oracle supports at most 2 dims");
  const Matrix a = problem.op().to_dense();
  const double s2 = problem.noise_variance();
  std::vector<double> num;
  std::vector<double> den;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const GaussianPrior& comp = prior.components()[k];
    const Matrix c = comp.covariance().to_dense();
    Eigen::LLT<Matrix> llt(c);
    const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double n = static_cast<double>(comp.dim());
    const double log_w = std::log(prior.weights()[k]);
    auto log_prior = [&](const Vector& x0) {
      const Vector d = x0 - comp.mean();
      return -0.5 * (d.dot(llt.solve(d)) + log_det_c + n * std::log(2.0 * std::numbers::pi));
    };
    auto log_forward = [&](const Vector& x0) { return detail::log_normal_iso(x_t, scale * x0, noise_var); };
    auto log_meas = [&](const Vector& x0) { return detail::log_normal_iso(problem.y(), a * x0, s2); };
    const auto [c_num, sd_num] = detail::box_for(comp, &a, s2, scale, noise_var, x_t);
    const auto [c_den, sd_den] = detail::box_for(comp, nullptr, s2, scale, noise_var, x_t);
    num.push_back(log_w + detail::log_trapezoid(c_num, sd_num, points, [&](const Vector& x0) {
                    return log_prior(x0) + log_forward(x0) + log_meas(x0);
                  }));
    den.push_back(log_w + detail::log_trapezoid(c_den, sd_den, points, [&](const Vector& x0) {
                    return log_prior(x0) + log_forward(x0);
                  }));
  }
  auto lse = [](const std::vector<double>& v) {
    const double top = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double l : v) s += std::exp(l - top);
    return top + std::log(s);
  };
  return lse(num) - lse(den);
}

/// log p(x_t) of the diffused prior by brute-force integration (dim <= 2).
inline double quadrature_log_marginal(const GmmPrior& prior, double scale, double noise_var,
                                      const Vector& x_t, int points = detail::kQuadraturePoints) {
  require(prior.dim() <= 2, ErrorKind::dimension_too_large, "quadrature oracle supports at most 2 dims");
  std::vector<double> terms;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const GaussianPrior& comp = prior.components()[k];
    const Matrix c = comp.covariance().to_dense();
    Eigen::LLT<Matrix> llt(c);
    const double log_det_c = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double n = static_cast<double>(comp.dim());
    const auto [center, sd] = detail::box_for(comp, nullptr, 1.0, scale, noise_var, x_t);
    terms.push_back(std::log(prior.weights()[k]) +
                    detail::log_trapezoid(center, sd, points, [&](const Vector& x0) {
                      const Vector d = x0 - comp.mean();
                      return -0.5 * (d.dot(llt.solve(d)) + log_det_c + n * std::log(2.0 * std::numbers::pi)) +
                             detail::log_normal_iso(x_t, scale * x0, noise_var);
                    }));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0.0;
  for (double l : terms) s += std::exp(l - top);
  return top + std::log(s);
}

/// Reference perturbed-likelihood score for mixtures in <= 2 dims: quadrature
/// of p(y | x_t) followed by central differences in x_t.
inline QuadratureScore quadrature_perturbed_likelihood_score(const GmmPrior& prior, const Problem& problem,
                                                             const DdpmSchedule& schedule, const Vector& x_t,
                                                             std::size_t t) {
  require(prior.dim() <= 2, ErrorKind::dimension_too_large, "quadrature oracle supports at most 2 dims");
  require_size(prior.dim(), problem.signal_dim(), "prior dimension");
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  const double scale = schedule.signal_scale(t);
  const double v = schedule.noise_variance(t);
  auto gradient = [&](int points) {
    Vector g(x_t.size());
    for (Index i = 0; i < x_t.size(); ++i) {
      const double h = 1e-4 * std::max(1.0, std::abs(x_t[i]));
      Vector up = x_t;
      Vector down = x_t;
      up[i] += h;
      down[i] -= h;
      g[i] = (quadrature_log_likelihood(prior, problem, scale, v, up, points) -
              quadrature_log_likelihood(prior, problem, scale, v, down, points)) /
             (2.0 * h);
    }
    return g;
  };
  QuadratureScore out;
  out.score = gradient(detail::kQuadraturePoints);
  const Vector coarse = gradient((detail::kQuadraturePoints + 1) / 2);
  out.estimated_error = (out.score - coarse).cwiseAbs().maxCoeff();
  return out;
}

inline QuadratureScore quadrature_perturbed_likelihood_score(const GaussianPrior& prior, const Problem& problem,
                                                             const DdpmSchedule& schedule, const Vector& x_t,
                                                             std::size_t t) {
  return quadrature_perturbed_likelihood_score(GmmPrior({1.0}, {prior}), problem, schedule, x_t, t);
}

struct ToyRecord {
  std::size_t t = 0;
  double alpha_bar = 0.0;
  double m_exact = 0.0;
  double v_exact = 0.0;
  double m_pseudo = 0.0;
  double v_pseudo = 0.0;
};

using ToyCurve = std::vector<ToyRecord>;

/// Scalar prior N(0, sigma0^2) and a fixed x_t: exact p(x_0 | x_t) moments
/// vs. the uninformative-prior approximation, along a geometric alpha_bar ladder.
inline ToyCurve toy_experiment(double sigma0, double x_t, std::size_t steps, double abar_max, double abar_min) {
  require(sigma0 > 0.0 && std::isfinite(sigma0), ErrorKind::invalid_range, "sigma0 must be positive");
  require(std::isfinite(x_t), ErrorKind::invalid_range, "x_t must be finite");
  const DdpmSchedule schedule = make_alpha_bar_geometric(steps, abar_max, abar_min);
  const double s2 = sigma0 * sigma0;
  ToyCurve curve;
  curve.reserve(steps);
  for (std::size_t t = 1; t <= steps; ++t) {
    const double abar = schedule.alpha_bar(t);
    const double denom = (1.0 - abar) + abar * s2;
    ToyRecord r;
    r.t = t;
    r.alpha_bar = abar;
    r.m_exact = std::sqrt(abar) * s2 * x_t / denom;
    r.v_exact = (1.0 - abar) * s2 / denom;
    r.m_pseudo = x_t / std::sqrt(abar);
    r.v_pseudo = (1.0 - abar) / abar;
    curve.push_back(r);
  }
  return curve;
}

}  // namespace dmps
