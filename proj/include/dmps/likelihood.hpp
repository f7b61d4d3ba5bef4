#pragma once

// Noise-perturbed pseudo-likelihood scores for y = A x + n, n ~ N(0, sigma^2 I).
//
// Replacing p(x_0 | x_t) by a Gaussian proportional to the forward transition
// gives x_0 | x_t ~ N(x_t / sqrt(abar), (1 - abar) / abar I), hence
//   y | x_t ~ N(A x_t / sqrt(abar), sigma^2 I + c A A^T),  c = (1 - abar) / abar,
// whose gradient in x_t is
//   (1 / sqrt(abar)) A^T (sigma^2 I + c A A^T)^{-1} (y - A x_t / sqrt(abar)).
// The SMLD analogue uses y | x_t ~ N(A x_t, sigma^2 I + beta_t^2 A A^T).
//
// Three evaluation routes are kept: a dense solve, the row-orthogonal closed
// form and the SVD form. The samplers use the SVD form only.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "dmps/operators.hpp"
#include "dmps/schedule.hpp"
#include "dmps/types.hpp"

namespace dmps {

/// Measurement y of a known operator with Gaussian noise level sigma > 0.
class Problem {
 public:
  Problem(Vector y, LinearOperator op, double noise_sigma)
      : y_(std::move(y)), op_(std::move(op)), sigma_(noise_sigma) {
    require_size(y_.size(), op_.rows(), "measurement");
    require(std::isfinite(sigma_) && sigma_ > 0.0, ErrorKind::invalid_range,
            "measurement noise sigma must be > 0");
    require(y_.allFinite(), ErrorKind::non_finite_value, "measurement has non-finite entries");
  }

  const Vector& y() const { return y_; }
  const LinearOperator& op() const { return op_; }
  double noise_sigma() const { return sigma_; }
  double noise_variance() const { return sigma_ * sigma_; }
  Index signal_dim() const { return op_.cols(); }

 private:
  Vector y_;
  LinearOperator op_;
  double sigma_;
};

/// U^T y and the singular values, computed once per problem.
class ResolventCache {
 public:
  explicit ResolventCache(const Problem& problem)
      : svd_(problem.op().svd()), ut_y_(svd_.left_project(problem.y())) {}

  const Svd& svd() const { return svd_; }
  const Vector& ut_y() const { return ut_y_; }
  const Vector& singular_values() const { return svd_.singular_values(); }

 private:
  Svd svd_;
  Vector ut_y_;
};

namespace detail {

// g V S (sigma^2 I + c S^2)^{-1} (U^T y - g S V^T x); zero singular values
// drop out through the leading S.
inline Vector resolvent_score(const ResolventCache& cache, double sigma2, double spread,
                              double gain, const Vector& x_t) {
  const Vector& s = cache.singular_values();
  const Vector vt_x = cache.svd().right_project(x_t);
  Vector coeff(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const double si = s[i];
    coeff[i] = si * (cache.ut_y()[i] - gain * si * vt_x[i]) / (sigma2 + spread * si * si);
  }
  return gain * cache.svd().right_lift(coeff);
}

inline Vector dense_resolvent_score(const Problem& problem, double spread, double gain,
                                    const Vector& x_t) {
  const Matrix a = problem.op().to_dense();
  Matrix k = spread * (a * a.transpose());
  k.diagonal().array() += problem.noise_variance();
  const Vector residual = problem.y() - gain * (a * x_t);
  Eigen::LDLT<Matrix> ldlt(k);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::solver_failure, "internal error: resolvent system is singular");
  }
  const Vector w = ldlt.solve(residual);
  if (!w.allFinite()) {
    throw Error(ErrorKind::solver_failure, "internal error: resolvent solve produced non-finite values");
  }
  return gain * (a.transpose() * w);
}

inline double ddpm_spread(double abar) { return (1.0 - abar) / abar; }

}  // namespace detail

/// Reference evaluation with a dense M x M solve. Small M only.
inline Vector pll_score_direct(const Problem& problem, const DdpmSchedule& schedule,
                               const Vector& x_t, std::size_t t) {
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  const double abar = schedule.alpha_bar(t);
  return detail::dense_resolvent_score(problem, detail::ddpm_spread(abar), 1.0 / std::sqrt(abar), x_t);
}

/// SVD evaluation: two thin projections and a diagonal solve per call.
inline Vector pll_score_svd(const Problem& problem, const ResolventCache& cache,
                            const DdpmSchedule& schedule, const Vector& x_t, std::size_t t) {
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  require_size(cache.ut_y().size(), cache.svd().rank(), "resolvent cache");
  const double abar = schedule.alpha_bar(t);
  return detail::resolvent_score(cache, problem.noise_variance(), detail::ddpm_spread(abar),
                                 1.0 / std::sqrt(abar), x_t);
}

/// Largest |(A A^T)_{ij}|, i != j, relative to the largest diagonal entry.
inline double row_orthogonality_defect(const LinearOperator& op) {
  if (op.rows_orthogonal_by_construction()) return 0.0;
  const Matrix a = op.to_dense();
  Matrix gram = a * a.transpose();
  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  gram.diagonal().setZero();
  return gram.cwiseAbs().maxCoeff() / scale;
}

/// Row-orthogonal special case (A A^T diagonal): each residual component is
/// scaled by 1 / (sigma^2 sqrt(abar) + (1 - abar)/sqrt(abar) ||a_m||^2) and
/// assembled with A^T.
inline Vector pll_score_diag(const Problem& problem, const DdpmSchedule& schedule,
                             const Vector& x_t, std::size_t t) {
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  const LinearOperator& op = problem.op();
  require(row_orthogonality_defect(op) <= 1e-10, ErrorKind::not_row_orthogonal,
          "A A^T is not diagonal; use the SVD form");
  const double abar = schedule.alpha_bar(t);
  const double root = std::sqrt(abar);
  const Vector norms = op.row_norms_squared();
  const Vector residual = problem.y() - op.apply(x_t) / root;
  Vector weighted(residual.size());
  for (Index m = 0; m < residual.size(); ++m) {
    weighted[m] = residual[m] / (problem.noise_variance() * root + (1.0 - abar) / root * norms[m]);
  }
  return op.apply_transpose(weighted);
}

/// SMLD form: A^T (sigma^2 I + beta_t^2 A A^T)^{-1} (y - A x_t), via the SVD.
inline Vector pll_score_smld(const Problem& problem, const ResolventCache& cache,
                             const SmldSchedule& schedule, const Vector& x_t, std::size_t t) {
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  require_size(cache.ut_y().size(), cache.svd().rank(), "resolvent cache");
  return detail::resolvent_score(cache, problem.noise_variance(), schedule.noise_variance(t), 1.0, x_t);
}

/// Dense reference for the SMLD form.
inline Vector pll_score_smld_direct(const Problem& problem, const SmldSchedule& schedule,
                                    const Vector& x_t, std::size_t t) {
  require_size(x_t.size(), problem.signal_dim(), "x_t");
  return detail::dense_resolvent_score(problem, schedule.noise_variance(t), 1.0, x_t);
}

/// ||y - A x_t / sqrt(abar_t)||, reported as sampler progress.
inline double measurement_residual(const Problem& problem, const DdpmSchedule& schedule,
                                   const Vector& x_t, std::size_t t) {
  return (problem.y() - problem.op().apply(x_t) / std::sqrt(schedule.alpha_bar(t))).norm();
}

}  // namespace dmps
