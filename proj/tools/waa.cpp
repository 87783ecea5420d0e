// waa: run, verify and sweep prediction experiments described by a TOML file.

#include <CLI11.hpp>

#include "waa/app.hpp"
#include "waa/version.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Weak Aggregating Algorithm experiments"};
  cli.set_version_flag("--version", waa::tool_version);
  cli.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t jobs = 1;
  bool svg = false;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment TOML file")->required();
    sub->add_option("--out", out, "output directory (default: experiment.out_dir)");
    sub->add_option("--jobs", jobs, "concurrent runs, 0 for one per hardware thread")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed-override", seed, "replace scenario seeds with K and predictor seeds with K, K+1, ...");
  };
  auto* run = cli.add_subcommand("run", "play every scenario against every rule and write traces");
  add_common(run);
  run->add_flag("--svg", svg, "also write SVG regret charts");
  auto* verify = cli.add_subcommand("verify", "run the full check battery; exit 3 if any check fails");
  add_common(verify);
  auto* sweep = cli.add_subcommand("sweep", "tabulate empirical vs analytic thresholds over [sweep] axes");
  add_common(sweep);

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : waa::app::exit_config;
  }

  waa::app::Options options;
  if (!out.empty()) options.out_dir = out;
  options.jobs = jobs;
  options.svg = svg;
  for (auto* sub : {run, verify, sweep})
    if (sub->count("--seed-override")) options.seed_override = seed;

  if (run->parsed()) return waa::app::cmd_run(config, options);
  if (verify->parsed()) return waa::app::cmd_verify(config, options);
  return waa::app::cmd_sweep(config, options);
}
