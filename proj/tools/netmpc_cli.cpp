#include <CLI11.hpp>
#include <string>
#include <vector>

#include "netmpc/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bandwidth-aware networked MPC laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> config_paths;
  netmpc::CommandOptions opt;
  std::vector<uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub, bool multi_config) {
    if (multi_config)
      sub->add_option("--config", config_paths, "experiment config files")
          ->required();
    else
      sub->add_option("--config", config_path, "experiment config file")
          ->required();
    sub->add_option("--out", opt.out_dir, "output directory override");
    sub->add_option("--seed", seed_override, "seed override (repeatable)");
    sub->add_option("--jobs", opt.jobs, "parallel episodes")
        ->check(CLI::PositiveNumber);
    sub->add_option("--cache", opt.cache_dir,
                    "invariant-set cache directory");
  };

  CLI::App* run = app.add_subcommand("run", "run the configured episodes");
  add_common(run, false);
  CLI::App* compare =
      app.add_subcommand("compare", "run several configs on one plant and "
                                    "tabulate them");
  add_common(compare, true);
  CLI::App* sweep =
      app.add_subcommand("sweep", "expand the config's sweep axes");
  add_common(sweep, false);
  CLI::App* sets =
      app.add_subcommand("sets-cache", "precompute and describe the "
                                       "invariant sets");
  add_common(sets, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? netmpc::kExitConfig : netmpc::kExitOk;
  }
  opt.seeds = seed_override;

  if (run->parsed()) return netmpc::cmd_run(config_path, opt);
  if (compare->parsed()) return netmpc::cmd_compare(config_paths, opt);
  if (sweep->parsed()) return netmpc::cmd_sweep(config_path, opt);
  if (sets->parsed()) return netmpc::cmd_sets_cache(config_path, opt);
  return netmpc::kExitConfig;
}
