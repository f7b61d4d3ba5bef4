#pragma once

// Self-check suite behind `dmps verify`: the three likelihood-score routes
// against each other, scores against finite differences of their log
// densities, and operator adjoint / factorization consistency.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "dmps/likelihood.hpp"
#include "dmps/operators.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/rng.hpp"
#include "dmps/schedule.hpp"

namespace dmps {

inline constexpr Index kVerifyMaxDim = 256;

struct VerifySize {
  Index rows = 0;
  Index cols = 0;
};

struct VerifyCheck {
  std::string name;
  std::string size;
  double error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return std::isfinite(error) && error <= tolerance; }
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed(); });
  }
};

namespace detail {

/// log N(y; g A x, sigma^2 I + spread A A^T), dense.
inline double pseudo_log_likelihood(const Problem& problem, double spread, double gain, const Vector& x) {
  const Matrix a = problem.op().to_dense();
  Matrix k = spread * (a * a.transpose());
  k.diagonal().array() += problem.noise_variance();
  Eigen::LLT<Matrix> llt(k);
  const Vector r = problem.y() - gain * (a * x);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (r.dot(llt.solve(r)) + log_det);
}

template <typename F>
Vector central_difference(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector up = x;
    Vector down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double max_abs(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

class VerifyRng {
 public:
  explicit VerifyRng(std::uint64_t seed) : stream_(chain_key(seed, 0x7665726966ULL)) {}
  Vector normal(Index n) { return stream_.draw(step_++, n); }
  Matrix normal(Index r, Index c) {
    const Vector v = normal(r * c);
    return Eigen::Map<const Matrix>(v.data(), r, c);
  }

 private:
  NormalStream stream_;
  std::uint64_t step_ = 1;
};

}  // namespace detail

/// Runs all checks. `perturbation` is added to the SVD-route output; it exists
/// so tests can confirm the harness detects a broken route.
inline VerifyReport run_verification(std::uint64_t seed, const std::vector<VerifySize>& sizes,
                                     double perturbation = 0.0) {
  for (const auto& s : sizes) {
    require(s.rows >= 1 && s.cols >= 1, ErrorKind::invalid_range, "verify sizes must be positive");
    require(s.rows <= kVerifyMaxDim && s.cols <= kVerifyMaxDim, ErrorKind::dimension_too_large,
            "verify sizes are limited to " + std::to_string(kVerifyMaxDim) + " per side");
  }
  VerifyReport report;
  detail::VerifyRng rng(seed);
  const DdpmSchedule ddpm = make_ddpm_linear(1000, 1e-4, 0.02);
  const SmldSchedule smld = make_smld_geometric(10, 1.0, 0.01, 2e-5, 10);
  const std::vector<std::size_t> ts = {1, 10, 100, 250, 500, 750, 1000};

  for (const auto& size : sizes) {
    const std::string label = std::to_string(size.rows) + "x" + std::to_string(size.cols);
    const Matrix dense = rng.normal(size.rows, size.cols) / std::sqrt(static_cast<double>(size.cols));
    const Problem problem(rng.normal(size.rows), dense_op(dense), 0.3);
    const ResolventCache cache(problem);

    double svd_vs_direct = 0.0;
    double fd = 0.0;
    for (std::size_t t : ts) {
      const Vector x = rng.normal(size.cols);
      Vector svd = pll_score_svd(problem, cache, ddpm, x, t);
      svd.array() += perturbation;
      const Vector direct = pll_score_direct(problem, ddpm, x, t);
      svd_vs_direct = std::max(svd_vs_direct, detail::rel_err(svd, direct));
      if (size.cols <= 64) {
        const double abar = ddpm.alpha_bar(t);
        const Vector num = detail::central_difference(
            [&](const Vector& v) {
              return detail::pseudo_log_likelihood(problem, (1.0 - abar) / abar, 1.0 / std::sqrt(abar), v);
            },
            x, 1e-5);
        fd = std::max(fd, detail::max_abs(svd, num) / std::max(1.0, num.cwiseAbs().maxCoeff()));
      }
    }
    report.checks.push_back({"pll svd == direct", label, svd_vs_direct, 1e-10});
    if (size.cols <= 64) report.checks.push_back({"pll svd == finite difference", label, fd, 1e-6});

    double smld_err = 0.0;
    for (std::size_t t = 1; t <= smld.levels(); ++t) {
      const Vector x = rng.normal(size.cols);
      Vector s = pll_score_smld(problem, cache, smld, x, t);
      s.array() += perturbation;
      smld_err = std::max(smld_err, detail::rel_err(s, pll_score_smld_direct(problem, smld, x, t)));
    }
    report.checks.push_back({"smld pll svd == direct", label, smld_err, 1e-10});

    const Index kept_count = std::min(size.rows, size.cols);
    std::vector<Index> kept;
    for (Index i = 0; i < kept_count; ++i) kept.push_back(i * size.cols / kept_count);
    const Problem masked(rng.normal(kept_count), mask_op(size.cols, kept), 0.2);
    const ResolventCache mcache(masked);
    double diag_err = 0.0;
    for (std::size_t t : ts) {
      const Vector x = rng.normal(size.cols);
      const Vector direct = pll_score_direct(masked, ddpm, x, t);
      Vector svd = pll_score_svd(masked, mcache, ddpm, x, t);
      svd.array() += perturbation;
      diag_err = std::max(diag_err, detail::rel_err(pll_score_diag(masked, ddpm, x, t), direct));
      diag_err = std::max(diag_err, detail::rel_err(svd, direct));
    }
    report.checks.push_back({"pll diag == svd == direct (mask)", label, diag_err, 1e-10});

    const Matrix back = cache.svd().u() * cache.singular_values().asDiagonal() * cache.svd().vt();
    report.checks.push_back(
        {"dense U S V^T == A", label, (back - dense).norm() / std::max(1.0, dense.norm()), 1e-12});
  }

  // Structured operators on a small RGB image.
  const ImageShape rgb{12, 8, 3};
  const std::vector<std::pair<std::string, LinearOperator>> ops = {
      {"identity", identity_op(rgb.size())},
      {"mask", mask_op(rgb.size(), {0, 3, 7, 50, 100, 200, 287})},
      {"sr x2", block_avg_sr_op(rgb, 2)},
      {"colorize", colorize_avg_op(rgb)},
      {"blur gaussian 5", separable_blur_op(rgb, gaussian_kernel(5, 1.2))},
      {"blur uniform 3", separable_blur_op(rgb, uniform_kernel(3))},
  };
  for (const auto& [name, op] : ops) {
    const Vector x = rng.normal(op.cols());
    const Vector y = rng.normal(op.rows());
    const double lhs = op.apply(x).dot(y);
    const double rhs = x.dot(op.apply_transpose(y));
    report.checks.push_back({name + " adjoint", "12x8x3", std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)), 1e-12});
    const Matrix a = op.to_dense();
    const Svd svd = op.svd();
    const Matrix back = svd.u() * svd.singular_values().asDiagonal() * svd.vt();
    report.checks.push_back({name + " U S V^T == A", "12x8x3", (back - a).norm() / std::max(1.0, a.norm()), 1e-12});
    const Vector applied = op.apply(x);
    report.checks.push_back(
        {name + " apply == dense", "12x8x3", (applied - a * x).norm() / std::max(1.0, applied.norm()), 1e-12});
  }

  // Prior scores against finite differences of their log densities.
  const Index d = 3;
  const Matrix l = rng.normal(d, d);
  Matrix c = l * l.transpose();
  c.diagonal().array() += 0.5;
  const GaussianPrior gauss(rng.normal(d), Covariance::dense(c));
  const GmmPrior gmm({0.3, 0.7}, {GaussianPrior(rng.normal(d), Covariance::dense(c)),
                                  GaussianPrior(rng.normal(d), Covariance::isotropic(d, 0.4))});
  double prior_err = 0.0;
  for (std::size_t t : {1, 300, 1000}) {
    const Vector x = rng.normal(d);
    const double a = ddpm.signal_scale(t);
    const double v = ddpm.noise_variance(t);
    prior_err = std::max(prior_err, detail::max_abs(gauss.noisy_score(x, a, v),
                                                    detail::central_difference(
                                                        [&](const Vector& z) { return gauss.noisy_log_density(z, a, v); },
                                                        x, 1e-5)));
    prior_err = std::max(prior_err, detail::max_abs(gmm.noisy_score(x, a, v),
                                                    detail::central_difference(
                                                        [&](const Vector& z) { return gmm.noisy_log_density(z, a, v); },
                                                        x, 1e-5)));
  }
  report.checks.push_back({"prior scores == finite difference", "3", prior_err, 1e-6});
  return report;
}

inline void print_report(const VerifyReport& report, std::ostream& out) {
  std::size_t width = 5;
  for (const auto& c : report.checks) width = std::max(width, c.name.size());
  for (const auto& c : report.checks) {
    char line[256];
    std::snprintf(line, sizeof line, "%-4s  %-*s  %-8s  err=%.3e  tol=%.1e\n", c.passed() ? "PASS" : "FAIL",
                  static_cast<int>(width), c.name.c_str(), c.size.c_str(), c.error, c.tolerance);
    out << line;
  }
  std::size_t failed = 0;
  for (const auto& c : report.checks) failed += c.passed() ? 0 : 1;
  out << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << " ("
      << report.checks.size() << " total)\n";
}

}  // namespace dmps
