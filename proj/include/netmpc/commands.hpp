#pragma once

#include <string>
#include <vector>

namespace netmpc {

// Exit codes: 0 success, 1 config error, 2 episode failure,
// 3 infrastructure error. The CLI maps these directly.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitEpisode = 2;
constexpr int kExitInfra = 3;

struct CommandOptions {
  std::string out_dir;           // overrides config output_dir when nonempty
  std::vector<uint64_t> seeds;   // overrides config seeds when nonempty
  int jobs = 1;
  std::string cache_dir;         // invariant-set cache ("" = no cache)
};

int cmd_run(const std::string& config_path, const CommandOptions& opt);
int cmd_compare(const std::vector<std::string>& config_paths,
                const CommandOptions& opt);
int cmd_sweep(const std::string& config_path, const CommandOptions& opt);
int cmd_sets_cache(const std::string& config_path, const CommandOptions& opt);

}  // namespace netmpc
