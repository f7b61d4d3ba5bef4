#pragma once

// Posterior samplers combining a prior score with the pseudo-likelihood score.
//
// DDPM form, for t = T..1:
//   x_{t-1} = (x_t - (1 - alpha_t)/sqrt(1 - abar_t) s_theta(x_t, t)) / sqrt(alpha_t) + sigma_t z_t
//   x_{t-1} += lambda (1 - alpha_t)/sqrt(alpha_t) grad log p~(y | x_t)
// with sigma_t^2 the schedule's reverse variance and the likelihood score
// evaluated at the pre-update x_t.
//
// SMLD form, for each noise level (largest first) and k = 1..K:
//   x <- x + a s(x, beta_t) + sqrt(2 a) z + lambda a grad log p~(y | x)
// with a the level's step size.
//
// Each chain draws its noise from a counter-based stream keyed by
// (seed, chain), with the step number as counter, so results do not depend on
// thread count or on how many chains are requested.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dmps/likelihood.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/rng.hpp"
#include "dmps/schedule.hpp"

namespace dmps {

enum class Variant { ddpm, smld };

inline const char* to_string(Variant v) { return v == Variant::ddpm ? "ddpm" : "smld"; }

struct ProgressEvent {
  std::size_t chain = 0;
  std::size_t step = 0;  // schedule index t (DDPM) or level (SMLD)
  double residual = 0.0;
};

struct DmpsConfig {
  double lambda = 1.75;
  std::uint64_t seed = 0;
  std::size_t num_samples = 1;
  Variant variant = Variant::ddpm;
  // 0 picks DMPS_THREADS or the hardware concurrency.
  std::size_t threads = 0;
  // Called every `progress_stride` steps per chain; calls are serialized.
  std::function<void(const ProgressEvent&)> progress;
  std::size_t progress_stride = 100;
};

inline void validate(const DmpsConfig& config) {
  // lambda = 0 is accepted here (prior-only sampling); the CLI and sweeps
  // require lambda > 0.
  require(std::isfinite(config.lambda) && config.lambda >= 0.0, ErrorKind::invalid_range,
          "lambda must be >= 0");
  require(config.num_samples >= 1, ErrorKind::invalid_range, "num_samples must be >= 1");
}

struct SampleSet {
  std::vector<Vector> samples;
  DmpsConfig config;
  std::vector<std::uint64_t> per_sample_seeds;

  std::size_t size() const { return samples.size(); }
};

/// Worker count: explicit request, else DMPS_THREADS, else hardware threads;
/// never more than the number of chains.
inline std::size_t resolve_threads(std::size_t requested, std::size_t chains) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("DMPS_THREADS")) {
      try {
        n = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::exception&) {
        n = 0;
      }
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, chains));
}

namespace detail {

template <typename ChainFn>
SampleSet run_chains(const DmpsConfig& config, Index dim, ChainFn&& chain_fn) {
  validate(config);
  SampleSet out;
  out.config = config;
  out.samples.assign(config.num_samples, Vector());
  out.per_sample_seeds.resize(config.num_samples);
  for (std::size_t k = 0; k < config.num_samples; ++k) {
    out.per_sample_seeds[k] = chain_key(config.seed, k);
  }

  std::mutex progress_mutex;
  auto report = [&](const ProgressEvent& e) {
    if (!config.progress) return;
    std::lock_guard lock(progress_mutex);
    config.progress(e);
  };

  std::vector<std::exception_ptr> failures(config.num_samples);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < config.num_samples; k = next.fetch_add(1)) {
      try {
        out.samples[k] = chain_fn(k, NormalStream(out.per_sample_seeds[k]), report);
        require_size(out.samples[k].size(), dim, "chain output");
      } catch (...) {
        failures[k] = std::current_exception();
      }
    }
  };

  const std::size_t threads = resolve_threads(config.threads, config.num_samples);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  // Lowest failing chain wins so the reported error is deterministic.
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return out;
}

inline void require_finite_state(const Vector& x, std::size_t chain, std::size_t step) {
  if (!x.allFinite()) {
    throw Error(ErrorKind::non_finite,
                "chain " + std::to_string(chain) + " became non-finite at t=" + std::to_string(step));
  }
}

}  // namespace detail

/// DDPM-form posterior sampling.
inline SampleSet dmps_ddpm(const Problem& problem, const ScoreModel& prior,
                           const DdpmSchedule& schedule, DmpsConfig config) {
  config.variant = Variant::ddpm;
  validate(config);
  const Index n = problem.signal_dim();
  require_size(prior.dim(), n, "prior dimension");
  const ResolventCache cache(problem);
  const std::size_t steps = schedule.steps();

  return detail::run_chains(config, n, [&](std::size_t chain, const NormalStream& rng, auto& report) {
    Vector x = rng.draw(0, n);
    Vector z(n);
    for (std::size_t t = steps; t >= 1; --t) {
      const double alpha = schedule.alpha(t);
      const double abar = schedule.alpha_bar(t);
      const double root_alpha = std::sqrt(alpha);
      const Vector residual_eps = as_pretrained_residual(prior, schedule, x, t);
      rng.fill(t, z);
      Vector next = (x - (1.0 - alpha) / std::sqrt(1.0 - abar) * residual_eps) / root_alpha +
                    std::sqrt(schedule.reverse_variance(t)) * z;
      const Vector likelihood = pll_score_svd(problem, cache, schedule, x, t);
      next += config.lambda * (1.0 - alpha) / root_alpha * likelihood;
      detail::require_finite_state(next, chain, t);
      if (config.progress && (t % std::max<std::size_t>(1, config.progress_stride) == 0 || t == 1)) {
        report(ProgressEvent{chain, t, measurement_residual(problem, schedule, x, t)});
      }
      x = std::move(next);
    }
    return x;
  });
}

/// SMLD-form (annealed Langevin) posterior sampling.
inline SampleSet dmps_smld(const Problem& problem, const ScoreModel& prior,
                           const SmldSchedule& schedule, DmpsConfig config) {
  config.variant = Variant::smld;
  validate(config);
  const Index n = problem.signal_dim();
  require_size(prior.dim(), n, "prior dimension");
  const ResolventCache cache(problem);
  const std::size_t levels = schedule.levels();
  const std::size_t inner = schedule.inner_steps();

  return detail::run_chains(config, n, [&](std::size_t chain, const NormalStream& rng, auto& report) {
    Vector x = rng.draw(0, n);
    Vector z(n);
    for (std::size_t level = 1; level <= levels; ++level) {
      const double step = schedule.step_size(level);
      const double noise_scale = std::sqrt(2.0 * step);
      for (std::size_t k = 1; k <= inner; ++k) {
        rng.fill((level - 1) * inner + k, z);
        Vector next = x + step * prior.score(x, level) + noise_scale * z;
        next += config.lambda * step * pll_score_smld(problem, cache, schedule, x, level);
        detail::require_finite_state(next, chain, level);
        x = std::move(next);
      }
      if (config.progress && (level % std::max<std::size_t>(1, config.progress_stride) == 0 ||
                              level == levels)) {
        report(ProgressEvent{chain, level, (problem.y() - problem.op().apply(x)).norm()});
      }
    }
    return x;
  });
}

inline SampleSet dmps_sample(const Problem& problem, const ScoreModel& prior,
                             const DdpmSchedule& schedule, const DmpsConfig& config) {
  return dmps_ddpm(problem, prior, schedule, config);
}

inline SampleSet dmps_sample(const Problem& problem, const ScoreModel& prior,
                             const SmldSchedule& schedule, const DmpsConfig& config) {
  return dmps_smld(problem, prior, schedule, config);
}

struct LambdaRun {
  double lambda = 0.0;
  std::optional<SampleSet> samples;
  std::string error;  // set when the sampler failed for this lambda

  bool ok() const { return samples.has_value(); }
};

/// One run per lambda with the base config's seed, so chains are paired
/// across lambdas. A failure for one lambda is recorded and the sweep continues.
template <typename Schedule>
std::vector<LambdaRun> run_lambda_sweep(const Problem& problem, const ScoreModel& prior,
                                        const Schedule& schedule, const std::vector<double>& lambdas,
                                        const DmpsConfig& base_config) {
  for (double l : lambdas) {
    require(std::isfinite(l) && l > 0.0, ErrorKind::invalid_range, "sweep lambdas must be > 0");
  }
  std::vector<LambdaRun> runs;
  runs.reserve(lambdas.size());
  for (double l : lambdas) {
    DmpsConfig config = base_config;
    config.lambda = l;
    LambdaRun run;
    run.lambda = l;
    try {
      run.samples = dmps_sample(problem, prior, schedule, config);
    } catch (const Error& e) {
      run.error = e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace dmps
