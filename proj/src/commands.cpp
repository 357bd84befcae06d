#include "netmpc/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>

#include "netmpc/config.hpp"
#include "netmpc/errors.hpp"
#include "netmpc/parallel.hpp"

namespace netmpc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string horizon_str(const std::vector<int>& h) {
  std::string s = "[";
  for (size_t i = 0; i < h.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(h[i]);
  }
  return s + "]";
}

std::string fmt(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
  return buf;
}

double loss_pct(long losses, long sends) {
  return sends > 0 ? 100.0 * static_cast<double>(losses) /
                         static_cast<double>(sends)
                   : 0.0;
}

void apply_overrides(ExperimentConfig* cfg, const CommandOptions& opt) {
  if (!opt.out_dir.empty()) cfg->output_dir = opt.out_dir;
  if (!opt.seeds.empty()) cfg->seeds = opt.seeds;
}

struct VariantOutcome {
  std::vector<Metrics> metrics;  // per seed
  bool all_ok = true;
};

// Runs every seed of one config, writing per-seed outputs into out_dir.
// Single-seed runs use unsuffixed filenames so reruns are byte-comparable.
VariantOutcome run_all_seeds(const ExperimentConfig& cfg,
                             const TrackingOcp& ocp, const fs::path& out_dir,
                             int jobs) {
  DenseIpmBackend backend;
  VariantOutcome outcome;
  outcome.metrics.resize(cfg.seeds.size());
  std::mutex flag_mu;
  parallel_for(static_cast<long>(cfg.seeds.size()), jobs, [&](long i) {
    uint64_t seed = cfg.seeds[static_cast<size_t>(i)];
    EpisodeResult res =
        run_episode(ocp, backend, cfg.plant, episode_options(cfg, seed));
    res.trace.config_hash = cfg.hash;

    std::string suffix =
        cfg.seeds.size() == 1 ? "" : "_seed" + std::to_string(seed);
    write_trace_csv((out_dir / ("trace" + suffix + ".csv")).string(),
                    res.trace);
    write_solvetimes_csv(
        (out_dir / ("solvetimes" + suffix + ".csv")).string(), res.solves);
    std::ofstream mj(out_dir / ("metrics" + suffix + ".json"));
    mj << metrics_to_json(res.metrics, cfg.hash, seed) << "\n";
    write_bit_file((out_dir / ("uplink_bits" + suffix + ".txt")).string(),
                   res.uplink_bits);
    write_bit_file((out_dir / ("downlink_bits" + suffix + ".txt")).string(),
                   res.downlink_bits);

    outcome.metrics[static_cast<size_t>(i)] = res.metrics;
    if (!res.metrics.success) {
      std::lock_guard<std::mutex> lock(flag_mu);
      outcome.all_ok = false;
    }
  });
  return outcome;
}

json summary_json(const ExperimentConfig& cfg,
                  const VariantOutcome& outcome) {
  json per_seed = json::array();
  double mse_sum = 0.0, solve_sum = 0.0;
  double up_bytes = 0.0, down_bytes = 0.0;
  long up_losses = 0, up_sends = 0, down_losses = 0, down_sends = 0;
  long successes = 0;
  for (size_t i = 0; i < outcome.metrics.size(); ++i) {
    const Metrics& m = outcome.metrics[i];
    per_seed.push_back({{"seed", cfg.seeds[i]},
                        {"success", m.success},
                        {"fail_reason", m.fail_reason},
                        {"mse", m.mse},
                        {"final_error", m.final_error},
                        {"solve_ms_mean", m.solve_ms_mean}});
    if (m.success) ++successes;
    mse_sum += m.mse;
    solve_sum += m.solve_ms_mean;
    up_bytes += m.uplink_bytes_per_s;
    down_bytes += m.downlink_bytes_per_s;
    up_losses += m.uplink_losses;
    up_sends += m.uplink_sends;
    down_losses += m.downlink_losses;
    down_sends += m.downlink_sends;
  }
  double count = static_cast<double>(outcome.metrics.size());
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(cfg.hash));
  return json{{"config_hash", hash_buf},
              {"name", cfg.name},
              {"horizon", cfg.horizon},
              {"n", cfg.n},
              {"episodes", outcome.metrics.size()},
              {"successes", successes},
              {"mse_mean", mse_sum / count},
              {"uplink_loss_pct", loss_pct(up_losses, up_sends)},
              {"downlink_loss_pct", loss_pct(down_losses, down_sends)},
              {"solve_ms_mean", solve_sum / count},
              {"uplink_bytes_per_s_mean", up_bytes / count},
              {"downlink_bytes_per_s_mean", down_bytes / count}};
}

void print_table(const std::vector<std::vector<std::string>>& rows,
                 std::ostream& out) {
  if (rows.empty()) return;
  std::vector<size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << row[c] << std::string(width[c] - row[c].size(), ' ');
      out << (c + 1 == row.size() ? "\n" : "  ");
    }
  }
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfra;
  }
}

// Offline sets are cached under the output root unless --cache overrides;
// the content key keeps stale entries from ever being served.
std::string cache_or_default(const CommandOptions& opt, const fs::path& root) {
  if (!opt.cache_dir.empty()) return opt.cache_dir;
  return (root / "sets_cache").string();
}

TrackingOcp build_ocp(const ExperimentConfig& cfg,
                      const std::string& cache_dir) {
  return TrackingOcp(cfg.model, cfg.horizon, cfg.q_cost, cfg.r_cost,
                     cfg.t_cost, cfg.lambda, cache_dir);
}

}  // namespace

int cmd_run(const std::string& config_path, const CommandOptions& opt) {
  return guarded([&]() -> int {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(&cfg, opt);
    fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    TrackingOcp ocp = build_ocp(cfg, cache_or_default(opt, out_dir));
    VariantOutcome outcome = run_all_seeds(cfg, ocp, out_dir, opt.jobs);
    std::ofstream sj(out_dir / "summary.json");
    sj << summary_json(cfg, outcome).dump(2) << "\n";
    for (size_t i = 0; i < outcome.metrics.size(); ++i) {
      const Metrics& m = outcome.metrics[i];
      std::cout << "seed " << cfg.seeds[i] << ": "
                << (m.success ? "ok" : "FAILED " + m.fail_reason)
                << " mse=" << fmt(m.mse)
                << " final_error=" << fmt(m.final_error) << "\n";
    }
    return outcome.all_ok ? kExitOk : kExitEpisode;
  });
}

int cmd_compare(const std::vector<std::string>& config_paths,
                const CommandOptions& opt) {
  return guarded([&]() -> int {
    if (config_paths.empty())
      throw ConfigError("compare: needs at least one --config");
    std::vector<ExperimentConfig> cfgs;
    for (const auto& p : config_paths) {
      cfgs.push_back(load_config(p));
      if (!opt.seeds.empty()) cfgs.back().seeds = opt.seeds;
    }
    for (size_t i = 1; i < cfgs.size(); ++i) {
      if (cfgs[i].plant_identity != cfgs[0].plant_identity)
        throw ConfigError("compare: " + cfgs[i].name + " and " +
                          cfgs[0].name + " describe different plants");
    }
    fs::path out_dir(!opt.out_dir.empty() ? opt.out_dir
                                          : cfgs[0].output_dir);
    fs::create_directories(out_dir);

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"name", "horizon", "n", "episodes", "ok", "mse_mean",
                    "up_loss_pct", "down_loss_pct", "solve_ms",
                    "up_bytes_per_s", "down_bytes_per_s"});
    bool all_ok = true;
    for (const auto& cfg : cfgs) {
      fs::path vdir = out_dir / cfg.name;
      fs::create_directories(vdir);
      TrackingOcp ocp = build_ocp(cfg, cache_or_default(opt, out_dir));
      VariantOutcome outcome = run_all_seeds(cfg, ocp, vdir, opt.jobs);
      all_ok = all_ok && outcome.all_ok;
      json s = summary_json(cfg, outcome);
      rows.push_back({cfg.name, horizon_str(cfg.horizon),
                      std::to_string(cfg.n),
                      std::to_string(cfg.seeds.size()),
                      std::to_string(s["successes"].get<long>()),
                      fmt(s["mse_mean"].get<double>()),
                      fmt(s["uplink_loss_pct"].get<double>(), 4),
                      fmt(s["downlink_loss_pct"].get<double>(), 4),
                      fmt(s["solve_ms_mean"].get<double>(), 4),
                      fmt(s["uplink_bytes_per_s_mean"].get<double>()),
                      fmt(s["downlink_bytes_per_s_mean"].get<double>())});
    }
    std::ofstream csv(out_dir / "compare.csv");
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c)
        csv << row[c] << (c + 1 == row.size() ? "\n" : ",");
    }
    print_table(rows, std::cout);
    return all_ok ? kExitOk : kExitEpisode;
  });
}

int cmd_sweep(const std::string& config_path, const CommandOptions& opt) {
  return guarded([&]() -> int {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config: cannot open " + config_path);
    json base;
    try {
      in >> base;
    } catch (const json::parse_error& e) {
      throw ConfigError("config: " + config_path +
                        " is not valid JSON: " + e.what());
    }
    ExperimentConfig probe = parse_config(base, "sweep");
    apply_overrides(&probe, opt);
    fs::path out_root(probe.output_dir);
    fs::create_directories(out_root);

    // Cartesian product over the axes; no axes = the single base point.
    struct Point {
      std::string slug;
      json overrides;  // axis -> value
    };
    std::vector<Point> points{{"", json::object()}};
    for (const auto& axis : probe.sweep) {
      std::vector<Point> expanded;
      for (const auto& pt : points) {
        for (const auto& v : axis.values) {
          Point np = pt;
          std::string vs;
          if (axis.axis == "horizon") {
            vs = "";
            for (const auto& h : v) vs += (vs.empty() ? "" : "-") +
                                          std::to_string(h.get<int>());
          } else {
            vs = v.is_number_integer() ? std::to_string(v.get<long>())
                                       : fmt(v.get<double>(), 6);
          }
          np.slug += (np.slug.empty() ? "" : "_") + axis.axis + "=" + vs;
          np.overrides[axis.axis] = v;
          expanded.push_back(std::move(np));
        }
      }
      points = std::move(expanded);
    }

    bool all_ok = true;
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"point", "n", "horizon", "ok", "mse_mean",
                    "down_packets_total"});
    for (const auto& pt : points) {
      fs::path leaf = pt.slug.empty() ? out_root : out_root / pt.slug;
      fs::create_directories(leaf);
      if (fs::exists(leaf / "summary.json")) {
        rows.push_back({pt.slug.empty() ? "(base)" : pt.slug, "-", "-",
                        "cached", "-", "-"});
        continue;
      }
      json j = base;
      j.erase("sweep");
      for (auto it = pt.overrides.begin(); it != pt.overrides.end(); ++it) {
        if (it.key() == "n")
          j["n"] = it.value();
        else if (it.key() == "horizon")
          j["horizon"] = it.value();
        else if (it.key() == "loss") {
          j["channels"]["uplink"] = {{"kind", "bernoulli"},
                                     {"loss", it.value()}};
          j["channels"]["downlink"] = {{"kind", "bernoulli"},
                                       {"loss", it.value()}};
        }
      }
      ExperimentConfig cfg =
          parse_config(j, pt.slug.empty() ? probe.name : pt.slug);
      apply_overrides(&cfg, opt);
      TrackingOcp ocp = build_ocp(cfg, cache_or_default(opt, out_root));
      VariantOutcome outcome = run_all_seeds(cfg, ocp, leaf, opt.jobs);
      all_ok = all_ok && outcome.all_ok;
      std::ofstream sj(leaf / "summary.json");
      json s = summary_json(cfg, outcome);
      sj << s.dump(2) << "\n";
      long down_total = 0;
      for (const Metrics& m : outcome.metrics) down_total += m.downlink_sends;
      rows.push_back({pt.slug.empty() ? "(base)" : pt.slug,
                      std::to_string(cfg.n), horizon_str(cfg.horizon),
                      std::to_string(s["successes"].get<long>()) + "/" +
                          std::to_string(cfg.seeds.size()),
                      fmt(s["mse_mean"].get<double>()),
                      std::to_string(down_total)});
    }
    print_table(rows, std::cout);
    return all_ok ? kExitOk : kExitEpisode;
  });
}

int cmd_sets_cache(const std::string& config_path,
                   const CommandOptions& opt) {
  return guarded([&]() -> int {
    ExperimentConfig cfg = load_config(config_path);
    apply_overrides(&cfg, opt);
    std::string cache_dir = cache_or_default(opt, cfg.output_dir);
    fs::create_directories(cache_dir);
    TrackingOcp ocp = build_ocp(cfg, cache_dir);
    std::cout << "model: " << cfg.model_kind
              << "  horizon: " << horizon_str(cfg.horizon)
              << "  lambda: " << fmt(ocp.coupling_set().lambda, 6) << "\n";
    std::cout << "coupling set: " << ocp.coupling_set().set.A().rows()
              << " rows, settled at iteration " << ocp.coupling_set().kstar
              << "\n";
    const auto& tails = ocp.tail_sets().sets;
    std::cout << "tail feasible sets (coarse boundary first):";
    for (const auto& s : tails) std::cout << " " << s.A().rows();
    std::cout << " rows\n";
    std::cout << "cache dir: " << cache_dir << "\n";
    return kExitOk;
  });
}

}  // namespace netmpc
