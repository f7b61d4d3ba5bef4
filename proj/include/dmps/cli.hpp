#pragma once

// Commands behind the `dmps` executable. Each returns a process exit code:
// 0 ok, 2 config, 3 io, 4 numeric/dimension, 5 verification failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "dmps/config.hpp"
#include "dmps/io.hpp"
#include "dmps/likelihood.hpp"
#include "dmps/metrics.hpp"
#include "dmps/operators.hpp"
#include "dmps/oracle.hpp"
#include "dmps/prior_scores.hpp"
#include "dmps/rng.hpp"
#include "dmps/sampler.hpp"
#include "dmps/schedule.hpp"
#include "dmps/verify.hpp"

namespace dmps {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitIo = 3, kExitNumeric = 4, kExitVerify = 5 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config_parse:
    case ErrorKind::invalid_range:
    case ErrorKind::kernel_length:
    case ErrorKind::kernel_normalization:
    case ErrorKind::unsupported_prior:
    case ErrorKind::dimension_too_large:
      return kExitConfig;
    case ErrorKind::file_not_found:
    case ErrorKind::io_failure:
    case ErrorKind::malformed_header:
    case ErrorKind::truncated_payload:
    case ErrorKind::unsupported_maxval:
    case ErrorKind::bad_magic:
    case ErrorKind::non_finite_value:
    case ErrorKind::size_mismatch:
    case ErrorKind::width_mismatch:
      return kExitIo;
    default:
      return kExitNumeric;
  }
}

/// Oracle moments are computed only up to this signal dimension.
inline constexpr Index kOracleMaxDim = 512;

struct CommandOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::ostream* progress = nullptr;  // receives `progress chain=.. step=.. residual=..` lines
};

namespace cli_detail {

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

using AnyPrior = std::variant<GaussianPrior, GmmPrior>;
using AnySchedule = std::variant<DdpmSchedule, SmldSchedule>;

/// Everything derived from a config before sampling starts.
struct Prepared {
  RunConfig config;
  std::ostream* progress = nullptr;
  std::optional<ImageShape> shape;           // image tasks
  std::optional<ImageShape> measured_shape;  // when y is itself an image
  Vector truth;
  LinearOperator op = identity_op(1);
  Vector y;
  std::optional<AnyPrior> prior;
  std::optional<AnySchedule> schedule;
};

inline AnySchedule build_schedule(const RunConfig& c) {
  const auto steps = static_cast<std::size_t>(c.steps);
  switch (c.schedule) {
    case ScheduleKind::linear: return make_ddpm_linear(steps, c.beta_min, c.beta_max);
    case ScheduleKind::geometric: return make_alpha_bar_geometric(steps, c.abar_max, c.abar_min);
    case ScheduleKind::smld:
      return make_smld_geometric(steps, c.sigma_max, c.sigma_min, c.eps, static_cast<std::size_t>(c.inner_steps));
  }
  throw Error(ErrorKind::config_parse, "unknown schedule kind");
}

inline Vector broadcast(const std::vector<double>& values, Index dim, const std::string& what) {
  if (values.size() == 1) return Vector::Constant(dim, values.front());
  require(static_cast<Index>(values.size()) == dim, ErrorKind::dimension_mismatch,
          what + " has " + std::to_string(values.size()) + " entries, signal has " + std::to_string(dim));
  return Eigen::Map<const Vector>(values.data(), dim);
}

inline AnyPrior build_prior(const RunConfig& c, Index dim, const Vector* truth) {
  switch (c.prior) {
    case PriorKind::gaussian:
      return GaussianPrior(Vector::Constant(dim, c.prior_mean), Covariance::isotropic(dim, c.prior_variance));
    case PriorKind::fitted: {
      require(truth != nullptr, ErrorKind::config_parse, "prior.kind = fitted needs a ground-truth input");
      const double mean = truth->mean();
      const double var = (truth->array() - mean).square().mean();
      return GaussianPrior(Vector::Constant(dim, mean), Covariance::isotropic(dim, std::max(var, 1e-6)));
    }
    case PriorKind::gmm: {
      std::vector<GaussianPrior> comps;
      for (std::size_t k = 0; k < c.gmm_weights.size(); ++k) {
        comps.emplace_back(broadcast(c.gmm_means[k], dim, "prior.means component " + std::to_string(k)),
                           Covariance::isotropic(dim, c.gmm_variances[k]));
      }
      return GmmPrior::normalized(c.gmm_weights, std::move(comps));
    }
  }
  throw Error(ErrorKind::config_parse, "unknown prior kind");
}

/// Draws a demo ground truth from the prior.
inline Vector draw_from_prior(const AnyPrior& prior, const NormalStream& rng) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    return g->mean() + g->covariance().diagonal_values().cwiseSqrt().cwiseProduct(rng.draw(10, g->dim()));
  }
  const auto& gmm = std::get<GmmPrior>(prior);
  const double u = 0.5 * std::erfc(-rng.normals(11, 0)[0] / std::sqrt(2.0));
  std::size_t k = 0;
  double acc = gmm.weights()[0];
  while (u > acc && k + 1 < gmm.size()) acc += gmm.weights()[++k];
  const auto& comp = gmm.components()[k];
  return comp.mean() + comp.covariance().diagonal_values().cwiseSqrt().cwiseProduct(rng.draw(12, comp.dim()));
}

/// Indices of the `count` smallest draws of a normal vector, ascending.
inline std::vector<Index> random_subset(Index n, Index count, const NormalStream& rng, std::uint64_t step) {
  const Vector z = rng.draw(step, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z[a] < z[b]; });
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

inline Matrix gaussian_matrix(Index rows, Index cols, const NormalStream& rng, std::uint64_t step) {
  const Vector v = rng.draw(step, rows * cols);
  return Eigen::Map<const Matrix>(v.data(), rows, cols) / std::sqrt(static_cast<double>(rows));
}

inline Prepared prepare(RunConfig config, const CommandOverrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.out) config.output_dir = *overrides.out;
  validate(config);
  Prepared p;
  const RunConfig& c = config;
  const NormalStream meas_rng(measurement_key(c.seed));

  if (!c.input.empty()) {
    if (!std::filesystem::exists(c.input)) {
      throw Error(ErrorKind::file_not_found, "input not found: " + c.input.string());
    }
    const std::string ext = c.input.extension().string();
    if (ext == ".dmpsmat") {
      const Matrix m = load_matrix(c.input);
      // Row-major flattening, matching the file order.
      const Matrix mt = m.transpose();
      p.truth = Eigen::Map<const Vector>(mt.data(), mt.size());
      if (!is_demo(c.task)) p.shape = ImageShape{m.rows(), m.cols(), 1};
    } else {
      Image img = load_image(c.input);
      p.shape = img.shape;
      p.truth = std::move(img.pixels);
    }
  } else {
    require(is_demo(c.task), ErrorKind::config_parse, "task.input is required for image tasks");
  }

  const Index dim = p.truth.size() > 0 ? p.truth.size() : static_cast<Index>(c.dim);
  if (is_demo(c.task) && p.truth.size() == 0) {
    p.prior = build_prior(c, dim, nullptr);
    p.truth = draw_from_prior(*p.prior, meas_rng);
  } else {
    p.prior = build_prior(c, dim, &p.truth);
  }

  switch (c.task) {
    case Task::denoise:
      p.op = identity_op(dim);
      p.measured_shape = p.shape;
      break;
    case Task::inpaint: {
      const auto keep = std::max<Index>(1, static_cast<Index>(std::llround(c.keep_fraction * static_cast<double>(dim))));
      p.op = mask_op(dim, random_subset(dim, keep, meas_rng, 2));
      break;
    }
    case Task::sr:
      p.op = block_avg_sr_op(*p.shape, static_cast<Index>(c.factor));
      p.measured_shape = ImageShape{p.shape->height / c.factor, p.shape->width / c.factor, p.shape->channels};
      break;
    case Task::blur: {
      const auto len = static_cast<std::size_t>(c.kernel_length);
      p.op = separable_blur_op(*p.shape, c.kernel == "uniform" ? uniform_kernel(len) : gaussian_kernel(len, c.kernel_sd));
      p.measured_shape = p.shape;
      break;
    }
    case Task::colorize:
      p.op = colorize_avg_op(*p.shape);
      p.measured_shape = ImageShape{p.shape->height, p.shape->width, 1};
      break;
    case Task::cs:
      p.op = dense_op(gaussian_matrix(static_cast<Index>(c.measurements), dim, meas_rng, 3));
      break;
    case Task::gaussian_demo:
    case Task::gmm_demo:
      switch (c.demo_operator) {
        case DemoOperator::identity: p.op = identity_op(dim); break;
        case DemoOperator::mask: {
          require(c.measurements <= dim, ErrorKind::dimension_mismatch, "operator.measurements exceeds signal dim");
          std::vector<Index> kept(static_cast<std::size_t>(c.measurements));
          std::iota(kept.begin(), kept.end(), Index{0});
          p.op = mask_op(dim, kept);
          break;
        }
        case DemoOperator::dense:
          p.op = dense_op(gaussian_matrix(static_cast<Index>(c.measurements), dim, meas_rng, 3));
          break;
      }
      break;
  }

  p.y = p.op.apply(p.truth) + c.sigma * meas_rng.draw(1, p.op.rows());
  p.schedule = build_schedule(c);
  p.config = std::move(config);
  p.progress = overrides.progress;
  return p;
}

inline std::unique_ptr<ScoreModel> score_model(const AnyPrior& prior, const AnySchedule& schedule) {
  return std::visit(
      [](const auto& pr, const auto& sc) -> std::unique_ptr<ScoreModel> {
        using P = std::decay_t<decltype(pr)>;
        using S = std::decay_t<decltype(sc)>;
        return std::make_unique<PerturbedPriorScore<P, S>>(pr, sc);
      },
      prior, schedule);
}

/// Pseudo-inverse reconstruction A^+ y, the baseline the estimate is compared against.
inline Vector pseudo_inverse(const LinearOperator& op, const Vector& y) {
  const Svd svd = op.svd();
  Vector z = svd.left_project(y);
  const Vector& s = svd.singular_values();
  const double cutoff = 1e-12 * (s.size() > 0 ? s.maxCoeff() : 0.0);
  for (Index i = 0; i < z.size(); ++i) z[i] = s[i] > cutoff ? z[i] / s[i] : 0.0;
  return svd.right_lift(z);
}

inline bool images_in_unit_range(const Prepared& p) { return p.shape.has_value(); }

struct RunOutcome {
  std::vector<CsvRow> rows;
  std::optional<double> psnr_estimate;
};

inline std::optional<MomentError> oracle_error(const Prepared& p, const SampleSet& set) {
  if (p.truth.size() > kOracleMaxDim || set.size() < 2) return std::nullopt;
  const Problem problem(p.y, p.op, p.config.sigma);
  return std::visit(
      [&](const auto& prior) -> std::optional<MomentError> {
        using P = std::decay_t<decltype(prior)>;
        if constexpr (std::is_same_v<P, GaussianPrior>) {
          return posterior_moment_error(set, exact_gaussian_posterior(prior, problem));
        } else {
          return posterior_moment_error(set, exact_gmm_posterior(prior, problem));
        }
      },
      *p.prior);
}

inline std::string sample_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04zu", k);
  return buf;
}

/// Samples with one lambda and writes samples/ and estimate files into `dir`.
inline RunOutcome run_and_write(const Prepared& p, double lambda, const std::filesystem::path& dir) {
  const RunConfig& c = p.config;
  const Problem problem(p.y, p.op, c.sigma);
  const auto model = score_model(*p.prior, *p.schedule);
  DmpsConfig dc;
  dc.lambda = lambda;
  dc.seed = c.seed;
  dc.num_samples = static_cast<std::size_t>(c.num_samples);
  dc.threads = static_cast<std::size_t>(c.threads);
  if (p.progress != nullptr) {
    dc.progress = [out = p.progress, lambda](const ProgressEvent& e) {
      char line[128];
      std::snprintf(line, sizeof line, "progress lambda=%g chain=%zu step=%zu residual=%.6e\n", lambda, e.chain,
                    e.step, e.residual);
      *out << line;
    };
  }
  const SampleSet set =
      std::visit([&](const auto& sched) { return dmps_sample(problem, *model, sched, dc); }, *p.schedule);

  std::filesystem::create_directories(dir / "samples");
  for (std::size_t k = 0; k < set.size(); ++k) {
    save_matrix(dir / "samples" / (sample_name(k) + ".dmpsmat"), set.samples[k]);
    if (p.shape) {
      save_image(dir / "samples" / (sample_name(k) + (p.shape->channels == 1 ? ".pgm" : ".ppm")), *p.shape,
                 set.samples[k]);
    }
  }
  const MomentSummary summary = moments(set);
  save_matrix(dir / "estimate.dmpsmat", summary.mean);
  if (p.shape) save_image(dir / (p.shape->channels == 1 ? "estimate.pgm" : "estimate.ppm"), *p.shape, summary.mean);

  RunOutcome out;
  const auto err = oracle_error(p, set);
  const bool images = images_in_unit_range(p);
  if (images) out.psnr_estimate = psnr(p.truth, summary.mean, 1.0, true).decibels;
  for (std::size_t k = 0; k < set.size(); ++k) {
    CsvRow row{std::string(to_string(c.task)), lambda, static_cast<std::int64_t>(c.seed)};
    row.push_back(images ? CsvValue(psnr(p.truth, set.samples[k], 1.0, true).decibels) : CsvValue(std::string()));
    row.push_back(err ? CsvValue(err->mean_rel_err) : CsvValue(std::string()));
    row.push_back(err ? CsvValue(err->cov_rel_err) : CsvValue(std::string()));
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h = {"task", "lambda", "seed", "psnr_db", "mean_rel_err", "cov_rel_err"};
  return h;
}

inline void write_measurement(const Prepared& p) {
  const auto& dir = p.config.output_dir;
  std::filesystem::create_directories(dir);
  save_matrix(dir / "measurement.dmpsmat", p.y);
  if (p.measured_shape) {
    save_image(dir / (p.measured_shape->channels == 1 ? "measurement.pgm" : "measurement.ppm"), *p.measured_shape,
               p.y);
  }
  if (is_demo(p.config.task)) save_matrix(dir / "truth.dmpsmat", p.truth);
}

inline std::optional<double> psnr_measurement(const Prepared& p) {
  if (!images_in_unit_range(p)) return std::nullopt;
  return psnr(p.truth, pseudo_inverse(p.op, p.y), 1.0, true).decibels;
}

struct ManifestExtra {
  std::vector<double> lambdas;
  std::vector<std::optional<double>> psnr_estimates;
};

inline void write_manifest(const Prepared& p, const std::string& command, const ManifestExtra& extra) {
  const RunConfig& c = p.config;
  std::string text = "command = " + command + "\n";
  text += "timestamp = " + utc_timestamp() + "\n";
  text += "[config]\n";
  for (const auto& [k, v] : c.echo) text += k + " = " + v + "\n";
  text += "[resolved]\n";
  text += "seed = " + std::to_string(c.seed) + "\n";
  text += "output_dir = " + c.output_dir.string() + "\n";
  if (!c.input.empty()) text += "input = " + c.input.string() + "\n";
  text += "signal_dim = " + std::to_string(p.truth.size()) + "\n";
  text += "measurement_dim = " + std::to_string(p.y.size()) + "\n";
  text += "measurement_key = " + std::to_string(measurement_key(c.seed)) + "\n";
  for (std::size_t k = 0; k < static_cast<std::size_t>(c.num_samples); ++k) {
    text += sample_name(k) + "_key = " + std::to_string(chain_key(c.seed, k)) + "\n";
  }
  text += "[results]\n";
  const auto pm = psnr_measurement(p);
  text += "psnr_measurement = " + (pm ? format_g(*pm) : std::string("n/a")) + "\n";
  for (std::size_t i = 0; i < extra.lambdas.size(); ++i) {
    const auto& pe = extra.psnr_estimates[i];
    text += "lambda = " + format_g(extra.lambdas[i]) + "\n";
    text += "psnr_estimate = " + (pe ? format_g(*pe) : std::string("n/a")) + "\n";
  }
  detail::write_bytes(c.output_dir / "manifest.txt", text.data(), text.size());
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io-failure: " << e.what() << "\n";
    return kExitIo;
  }
}

inline std::string lambda_dir_name(double lambda) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "lambda_%g", lambda);
  return buf;
}

}  // namespace cli_detail

/// Prepared state for a config, exposed for tests.
inline cli_detail::Prepared prepare_run(const RunConfig& config, const CommandOverrides& overrides = {}) {
  return cli_detail::prepare(config, overrides);
}

inline int cmd_sample(const std::filesystem::path& config_path, const CommandOverrides& overrides = {},
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    const auto p = cli_detail::prepare(load_config(config_path), overrides);
    cli_detail::write_measurement(p);
    const auto run = cli_detail::run_and_write(p, p.config.lambda, p.config.output_dir);
    write_csv(p.config.output_dir / "metrics.csv", cli_detail::metrics_header(), run.rows);
    cli_detail::write_manifest(p, "sample", {{p.config.lambda}, {run.psnr_estimate}});
    out << "wrote " << run.rows.size() << " sample(s) to " << p.config.output_dir.string() << "\n";
    if (const auto pm = cli_detail::psnr_measurement(p); pm && run.psnr_estimate) {
      out << "psnr measurement " << cli_detail::format_g(*pm) << " dB, estimate "
          << cli_detail::format_g(*run.psnr_estimate) << " dB\n";
    }
    return static_cast<int>(kExitOk);
  });
}

inline int cmd_sweep(const std::filesystem::path& config_path, const std::vector<double>& lambdas,
                     const CommandOverrides& overrides = {}, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    require(!lambdas.empty(), ErrorKind::config_parse, "no lambdas given");
    for (double l : lambdas) {
      require(std::isfinite(l) && l > 0.0, ErrorKind::config_parse,
              "lambda values must be > 0 (got " + cli_detail::format_g(l) + ")");
    }
    const auto p = cli_detail::prepare(load_config(config_path), overrides);
    cli_detail::write_measurement(p);
    std::vector<CsvRow> rows;
    cli_detail::ManifestExtra extra;
    for (double l : lambdas) {
      auto run = cli_detail::run_and_write(p, l, p.config.output_dir / cli_detail::lambda_dir_name(l));
      for (auto& r : run.rows) rows.push_back(std::move(r));
      extra.lambdas.push_back(l);
      extra.psnr_estimates.push_back(run.psnr_estimate);
    }
    write_csv(p.config.output_dir / "metrics.csv", cli_detail::metrics_header(), rows);
    cli_detail::write_manifest(p, "sweep", extra);
    out << "wrote " << rows.size() << " row(s) for " << lambdas.size() << " lambda value(s) to "
        << p.config.output_dir.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

struct ToyOptions {
  double sigma0 = 25.0;
  double x_t = 5.0;
  std::size_t steps = 500;
  double abar_max = 0.99;
  double abar_min = 0.01;
};

inline std::vector<CsvRow> toy_rows(const ToyCurve& curve) {
  std::vector<CsvRow> rows;
  rows.reserve(curve.size());
  for (const auto& r : curve) {
    rows.push_back({static_cast<std::int64_t>(r.t), r.alpha_bar, r.m_exact, r.v_exact, r.m_pseudo, r.v_pseudo});
  }
  return rows;
}

inline int cmd_toy(const ToyOptions& opt, const std::filesystem::path& out_csv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return cli_detail::guarded(err, [&] {
    require(opt.abar_max > opt.abar_min, ErrorKind::config_parse, "abar_max must exceed abar_min");
    const ToyCurve curve = toy_experiment(opt.sigma0, opt.x_t, opt.steps, opt.abar_max, opt.abar_min);
    if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
    write_csv(out_csv, {"t", "alpha_bar", "m_exact", "v_exact", "m_pseudo", "v_pseudo"}, toy_rows(curve));
    out << "wrote " << curve.size() << " rows to " << out_csv.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

/// Parses "8x16,32x64".
inline std::vector<VerifySize> parse_sizes(const std::string& text) {
  std::vector<VerifySize> sizes;
  for (const auto& part : detail::split(text, ',')) {
    const auto x = part.find('x');
    require(x != std::string::npos, ErrorKind::config_parse, "size '" + part + "' is not of the form MxN");
    sizes.push_back({static_cast<Index>(detail::parse_int("sizes", part.substr(0, x))),
                     static_cast<Index>(detail::parse_int("sizes", part.substr(x + 1)))});
  }
  return sizes;
}

inline const std::vector<VerifySize>& default_verify_sizes() {
  static const std::vector<VerifySize> s = {{4, 8}, {16, 16}, {24, 48}, {64, 128}};
  return s;
}

inline int cmd_verify(std::uint64_t seed, const std::vector<VerifySize>& sizes, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr, double perturbation = 0.0) {
  return cli_detail::guarded(err, [&] {
    const VerifyReport report = run_verification(seed, sizes, perturbation);
    print_report(report, out);
    return static_cast<int>(report.passed() ? kExitOk : kExitVerify);
  });
}

}  // namespace dmps
