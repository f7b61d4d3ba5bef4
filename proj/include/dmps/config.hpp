#pragma once

// Run configuration: UTF-8 text, `key = value` lines under [section] headers.
// `#` and `;` start comments. Unknown sections and keys are rejected.
//
//   [task]      kind, input, sigma, dim
//   [operator]  kind, keep_fraction, factor, kernel, kernel_length, kernel_sd, measurements
//   [schedule]  kind, steps, beta_min, beta_max, abar_max, abar_min,
//               sigma_max, sigma_min, eps, inner_steps
//   [prior]     kind, mean, variance, weights, means, variances
//   [sampler]   variant, lambda, num_samples, seed, threads
//   [output]    dir

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dmps/error.hpp"
#include "dmps/sampler.hpp"

namespace dmps {

enum class Task { denoise, inpaint, sr, blur, colorize, cs, gaussian_demo, gmm_demo };
enum class ScheduleKind { linear, geometric, smld };
enum class PriorKind { gaussian, fitted, gmm };
enum class DemoOperator { identity, mask, dense };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::denoise: return "denoise";
    case Task::inpaint: return "inpaint";
    case Task::sr: return "sr";
    case Task::blur: return "blur";
    case Task::colorize: return "colorize";
    case Task::cs: return "cs";
    case Task::gaussian_demo: return "gaussian_demo";
    case Task::gmm_demo: return "gmm_demo";
  }
  return "?";
}

inline bool is_demo(Task t) { return t == Task::gaussian_demo || t == Task::gmm_demo; }

struct RunConfig {
  Task task = Task::denoise;
  std::filesystem::path input;  // ground truth: .pgm/.ppm image or .dmpsmat matrix
  double sigma = 0.05;
  long long dim = 2;  // demos without an input file

  DemoOperator demo_operator = DemoOperator::dense;
  double keep_fraction = 0.5;
  long long factor = 2;
  std::string kernel = "gaussian";
  long long kernel_length = 5;
  double kernel_sd = 1.0;
  long long measurements = 1;

  ScheduleKind schedule = ScheduleKind::linear;
  long long steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 0.02;
  double abar_max = 0.99;
  double abar_min = 0.01;
  double sigma_max = 1.0;
  double sigma_min = 0.01;
  double eps = 2e-5;
  long long inner_steps = 3;

  PriorKind prior = PriorKind::fitted;
  double prior_mean = 0.5;
  double prior_variance = 0.1;
  std::vector<double> gmm_weights;
  std::vector<std::vector<double>> gmm_means;
  std::vector<double> gmm_variances;

  Variant variant = Variant::ddpm;
  double lambda = 1.75;
  long long num_samples = 1;
  std::uint64_t seed = 0;
  long long threads = 0;

  std::filesystem::path output_dir = "dmps_out";

  /// Normalized `section.key = value` lines, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(begin, &end);
  require(!v.empty() && end == begin + v.size() && errno == 0 && std::isfinite(d), ErrorKind::config_parse,
          key + ": expected a finite number, got '" + v + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(begin, &end, 10);
  require(!v.empty() && end == begin + v.size() && errno == 0, ErrorKind::config_parse,
          key + ": expected an integer, got '" + v + "'");
  return i;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) out.push_back(parse_double(key, part));
  require(!out.empty(), ErrorKind::config_parse, key + ": empty list");
  return out;
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v, const std::vector<std::pair<const char*, E>>& options) {
  for (const auto& [name, value] : options) {
    if (v == name) return value;
  }
  std::string allowed;
  for (const auto& o : options) allowed += std::string(allowed.empty() ? "" : ", ") + o.first;
  throw Error(ErrorKind::config_parse, key + ": '" + v + "' is not one of {" + allowed + "}");
}

}  // namespace detail

/// Parses config text. Relative input/output paths resolve against `base_dir`.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::parse_double;
  using detail::parse_int;
  static const std::map<std::string, std::vector<std::string>> known = {
      {"task", {"kind", "input", "sigma", "dim"}},
      {"operator", {"kind", "keep_fraction", "factor", "kernel", "kernel_length", "kernel_sd", "measurements"}},
      {"schedule",
       {"kind", "steps", "beta_min", "beta_max", "abar_max", "abar_min", "sigma_max", "sigma_min", "eps",
        "inner_steps"}},
      {"prior", {"kind", "mean", "variance", "weights", "means", "variances"}},
      {"sampler", {"variant", "lambda", "num_samples", "seed", "threads"}},
      {"output", {"dir"}},
  };

  std::map<std::string, std::string> values;
  std::vector<std::string> order;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      require(s.back() == ']', ErrorKind::config_parse, where + "unterminated section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      require(known.contains(section), ErrorKind::config_parse, where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    require(eq != std::string::npos, ErrorKind::config_parse, where + "expected key = value");
    require(!section.empty(), ErrorKind::config_parse, where + "key outside of a section");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    const auto& keys = known.at(section);
    require(std::find(keys.begin(), keys.end(), key) != keys.end(), ErrorKind::config_parse,
            where + "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    require(!values.contains(full), ErrorKind::config_parse, where + "duplicate key " + full);
    values[full] = value;
    order.push_back(full);
  }

  RunConfig c;
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    if (auto it = values.find(k); it != values.end()) return it->second;
    return std::nullopt;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };

  const auto task = get("task.kind");
  require(task.has_value(), ErrorKind::config_parse, "missing [task] kind");
  c.task = detail::parse_enum<Task>("task.kind", *task,
                                    {{"denoise", Task::denoise},
                                     {"inpaint", Task::inpaint},
                                     {"sr", Task::sr},
                                     {"blur", Task::blur},
                                     {"colorize", Task::colorize},
                                     {"cs", Task::cs},
                                     {"gaussian_demo", Task::gaussian_demo},
                                     {"gmm_demo", Task::gmm_demo}});
  if (auto v = get("task.input")) c.input = resolve(*v);
  if (auto v = get("task.sigma")) c.sigma = parse_double("task.sigma", *v);
  if (auto v = get("task.dim")) c.dim = parse_int("task.dim", *v);

  if (auto v = get("operator.kind")) {
    c.demo_operator = detail::parse_enum<DemoOperator>(
        "operator.kind", *v,
        {{"identity", DemoOperator::identity}, {"mask", DemoOperator::mask}, {"dense", DemoOperator::dense}});
  }
  if (auto v = get("operator.keep_fraction")) c.keep_fraction = parse_double("operator.keep_fraction", *v);
  if (auto v = get("operator.factor")) c.factor = parse_int("operator.factor", *v);
  if (auto v = get("operator.kernel")) {
    require(*v == "gaussian" || *v == "uniform", ErrorKind::config_parse,
            "operator.kernel: expected gaussian or uniform");
    c.kernel = *v;
  }
  if (auto v = get("operator.kernel_length")) c.kernel_length = parse_int("operator.kernel_length", *v);
  if (auto v = get("operator.kernel_sd")) c.kernel_sd = parse_double("operator.kernel_sd", *v);
  if (auto v = get("operator.measurements")) c.measurements = parse_int("operator.measurements", *v);

  if (auto v = get("schedule.kind")) {
    c.schedule = detail::parse_enum<ScheduleKind>(
        "schedule.kind", *v,
        {{"linear", ScheduleKind::linear}, {"geometric", ScheduleKind::geometric}, {"smld", ScheduleKind::smld}});
  }
  if (auto v = get("schedule.steps")) c.steps = parse_int("schedule.steps", *v);
  if (auto v = get("schedule.beta_min")) c.beta_min = parse_double("schedule.beta_min", *v);
  if (auto v = get("schedule.beta_max")) c.beta_max = parse_double("schedule.beta_max", *v);
  if (auto v = get("schedule.abar_max")) c.abar_max = parse_double("schedule.abar_max", *v);
  if (auto v = get("schedule.abar_min")) c.abar_min = parse_double("schedule.abar_min", *v);
  if (auto v = get("schedule.sigma_max")) c.sigma_max = parse_double("schedule.sigma_max", *v);
  if (auto v = get("schedule.sigma_min")) c.sigma_min = parse_double("schedule.sigma_min", *v);
  if (auto v = get("schedule.eps")) c.eps = parse_double("schedule.eps", *v);
  if (auto v = get("schedule.inner_steps")) c.inner_steps = parse_int("schedule.inner_steps", *v);

  if (auto v = get("prior.kind")) {
    c.prior = detail::parse_enum<PriorKind>(
        "prior.kind", *v, {{"gaussian", PriorKind::gaussian}, {"fitted", PriorKind::fitted}, {"gmm", PriorKind::gmm}});
  }
  if (auto v = get("prior.mean")) c.prior_mean = parse_double("prior.mean", *v);
  if (auto v = get("prior.variance")) c.prior_variance = parse_double("prior.variance", *v);
  if (auto v = get("prior.weights")) c.gmm_weights = detail::parse_list("prior.weights", *v);
  if (auto v = get("prior.means")) {
    for (const auto& comp : detail::split(*v, ';')) c.gmm_means.push_back(detail::parse_list("prior.means", comp));
  }
  if (auto v = get("prior.variances")) c.gmm_variances = detail::parse_list("prior.variances", *v);

  if (auto v = get("sampler.variant")) {
    c.variant = detail::parse_enum<Variant>("sampler.variant", *v, {{"ddpm", Variant::ddpm}, {"smld", Variant::smld}});
  }
  if (auto v = get("sampler.lambda")) c.lambda = parse_double("sampler.lambda", *v);
  if (auto v = get("sampler.num_samples")) c.num_samples = parse_int("sampler.num_samples", *v);
  if (auto v = get("sampler.seed")) {
    const long long s = parse_int("sampler.seed", *v);
    require(s >= 0, ErrorKind::config_parse, "sampler.seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("sampler.threads")) c.threads = parse_int("sampler.threads", *v);
  if (auto v = get("output.dir")) c.output_dir = resolve(*v);

  for (const auto& k : order) c.echo.emplace_back(k, values.at(k));
  return c;
}

/// Value checks that do not depend on the input data.
inline void validate(const RunConfig& c) {
  auto check = [](bool ok, const std::string& msg) { require(ok, ErrorKind::config_parse, msg); };
  check(c.sigma > 0.0, "task.sigma must be > 0");
  check(c.lambda > 0.0, "sampler.lambda must be > 0");
  check(c.num_samples >= 1, "sampler.num_samples must be >= 1");
  check(c.threads >= 0, "sampler.threads must be >= 0");
  check(c.steps >= 2, "schedule.steps must be >= 2");
  check(c.inner_steps >= 1, "schedule.inner_steps must be >= 1");
  check(c.keep_fraction > 0.0 && c.keep_fraction <= 1.0, "operator.keep_fraction must be in (0, 1]");
  check(c.factor >= 1, "operator.factor must be >= 1");
  check(c.measurements >= 1, "operator.measurements must be >= 1");
  check(c.prior_variance > 0.0, "prior.variance must be > 0");
  const bool smld_schedule = c.schedule == ScheduleKind::smld;
  check(smld_schedule == (c.variant == Variant::smld), "sampler.variant smld requires schedule.kind = smld and vice versa");
  if (c.schedule == ScheduleKind::geometric) {
    check(c.abar_max > c.abar_min, "schedule.abar_max must exceed schedule.abar_min");
  }
  if (is_demo(c.task) && c.input.empty()) check(c.dim >= 1, "task.dim must be >= 1");
  if (c.prior == PriorKind::gmm || c.task == Task::gmm_demo) {
    check(c.task != Task::gmm_demo || c.prior == PriorKind::gmm, "gmm_demo requires prior.kind = gmm");
    check(!c.gmm_weights.empty(), "prior.weights is required for a gmm prior");
    check(c.gmm_means.size() == c.gmm_weights.size(), "prior.means needs one entry per weight");
    check(c.gmm_variances.size() == c.gmm_weights.size(), "prior.variances needs one entry per weight");
  }
  if (c.task == Task::gaussian_demo) check(c.prior == PriorKind::gaussian, "gaussian_demo requires prior.kind = gaussian");
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::file_not_found, "config not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig c = parse_config(buf.str(), path.parent_path());
  validate(c);
  return c;
}

}  // namespace dmps
