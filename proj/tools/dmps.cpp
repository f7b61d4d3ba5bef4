#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmps/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Posterior sampling for linear inverse problems with diffusion priors"};
  app.require_subcommand(1);

  std::filesystem::path config;
  std::int64_t seed = -1;
  std::filesystem::path out;
  bool progress = false;
  auto overrides = [&] {
    dmps::CommandOverrides o;
    if (progress) o.progress = &std::cerr;
    if (seed >= 0) o.seed = static_cast<std::uint64_t>(seed);
    if (!out.empty()) o.out = out;
    return o;
  };

  auto* sample = app.add_subcommand("sample", "reconstruct from a synthetic measurement");
  sample->add_option("--config", config, "run configuration file")->required();
  sample->add_option("--seed", seed, "override sampler.seed");
  sample->add_option("--out", out, "override output.dir");
  sample->add_flag("--progress", progress, "print sampler progress lines to stderr");

  std::vector<double> lambdas{0.5, 1.0, 1.75, 2.5};
  auto* sweep = app.add_subcommand("sweep", "repeat a run for several lambda values");
  sweep->add_option("--config", config, "run configuration file")->required();
  sweep->add_option("--lambdas", lambdas, "lambda values")->delimiter(',');
  sweep->add_option("--seed", seed, "override sampler.seed");
  sweep->add_option("--out", out, "override output.dir");
  sweep->add_flag("--progress", progress, "print sampler progress lines to stderr");

  dmps::ToyOptions toy_opt;
  std::filesystem::path toy_out = "toy.csv";
  auto* toy = app.add_subcommand("toy", "scalar exact vs. pseudo reverse-transition moments");
  toy->add_option("--sigma0", toy_opt.sigma0, "prior standard deviation")->capture_default_str();
  toy->add_option("--xt", toy_opt.x_t, "fixed x_t")->capture_default_str();
  toy->add_option("--steps", toy_opt.steps, "number of steps T")->capture_default_str();
  toy->add_option("--abar-max", toy_opt.abar_max, "alpha_bar at t = 1")->capture_default_str();
  toy->add_option("--abar-min", toy_opt.abar_min, "alpha_bar at t = T")->capture_default_str();
  toy->add_option("--out", toy_out, "CSV path")->capture_default_str();

  std::uint64_t verify_seed = 0;
  std::string sizes;
  auto* verify = app.add_subcommand("verify", "cross-check score implementations and operators");
  verify->add_option("--seed", verify_seed, "random seed")->capture_default_str();
  verify->add_option("--sizes", sizes, "comma-separated MxN list, e.g. 8x16,64x128");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dmps::kExitConfig;
  }

  if (*sample) return dmps::cmd_sample(config, overrides());
  if (*sweep) return dmps::cmd_sweep(config, lambdas, overrides());
  if (*toy) return dmps::cmd_toy(toy_opt, toy_out);
  if (*verify) {
    try {
      return dmps::cmd_verify(verify_seed, sizes.empty() ? dmps::default_verify_sizes() : dmps::parse_sizes(sizes));
    } catch (const dmps::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return dmps::exit_code_for(e.kind());
    }
  }
  return dmps::kExitConfig;
}
