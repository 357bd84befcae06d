#include "netmpc/config.hpp"

#include <cmath>
#include <fstream>

#include "netmpc/cartpole.hpp"
#include "netmpc/errors.hpp"

namespace netmpc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config: " + field + " " + what);
}

const json& need(const json& j, const std::string& key,
                 const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "is required");
  return *it;
}

double need_number(const json& j, const std::string& key,
                   const std::string& path) {
  const json& v = need(j, key, path);
  if (!v.is_number()) fail(path + "." + key, "must be a number");
  return v.get<double>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail(path, "must be a nonempty array");
  Eigen::VectorXd out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) fail(path, "must contain numbers only");
    out(static_cast<int>(i)) = v[i].get<double>();
  }
  return out;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty() || !v[0].is_array())
    fail(path, "must be an array of rows");
  const size_t cols = v[0].size();
  Eigen::MatrixXd out(v.size(), cols);
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      fail(path, "has ragged rows");
    for (size_t j = 0; j < cols; ++j)
      out(static_cast<int>(i), static_cast<int>(j)) = v[i][j].get<double>();
  }
  return out;
}

// Full matrix as rows, or a flat array treated as a diagonal.
Eigen::MatrixXd as_weight(const json& v, const std::string& path) {
  if (v.is_array() && !v.empty() && v[0].is_array()) return as_matrix(v, path);
  Eigen::VectorXd d = as_vector(v, path);
  return d.asDiagonal();
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Polytope parse_set(const json& model, const std::string& box_key,
                   const std::string& set_key, int dim,
                   const std::string& path) {
  if (model.contains(box_key)) {
    const json& b = model[box_key];
    Eigen::VectorXd lo = as_vector(need(b, "lo", path + "." + box_key),
                                   path + "." + box_key + ".lo");
    Eigen::VectorXd hi = as_vector(need(b, "hi", path + "." + box_key),
                                   path + "." + box_key + ".hi");
    if (lo.size() != dim || hi.size() != dim)
      fail(path + "." + box_key, "has wrong dimension");
    if (((hi - lo).array() <= 0.0).any())
      fail(path + "." + box_key, "needs lo < hi elementwise");
    return Polytope::box(lo, hi);
  }
  if (model.contains(set_key)) {
    const json& s = model[set_key];
    Eigen::MatrixXd a = as_matrix(need(s, "A", path + "." + set_key),
                                  path + "." + set_key + ".A");
    Eigen::VectorXd b = as_vector(need(s, "b", path + "." + set_key),
                                  path + "." + set_key + ".b");
    if (a.cols() != dim || a.rows() != b.size())
      fail(path + "." + set_key, "has mismatched dimensions");
    return Polytope(a, b);
  }
  fail(path, "needs either " + box_key + " or " + set_key);
}

ChannelSpec parse_channel(const json& c, const std::string& path) {
  ChannelSpec spec;
  std::string kind = need(c, "kind", path).get<std::string>();
  auto prob = [&](const char* key, double fallback,
                  bool required) -> double {
    double v = required ? need_number(c, key, path)
                        : c.value(key, fallback);
    if (v < 0.0 || v > 1.0) fail(path + "." + key, "must be in [0,1]");
    return v;
  };
  if (kind == "bernoulli") {
    spec.kind = ChannelSpec::Kind::Bernoulli;
    spec.loss = prob("loss", 0.0, true);
  } else if (kind == "gilbert_elliott") {
    spec.kind = ChannelSpec::Kind::GilbertElliott;
    spec.p_good_to_bad = prob("p_good_to_bad", 0.0, true);
    spec.p_bad_to_good = prob("p_bad_to_good", 0.0, true);
    spec.loss_good = prob("loss_good", 0.0, false);
    spec.loss_bad = prob("loss_bad", 1.0, false);
  } else if (kind == "replay") {
    spec.kind = ChannelSpec::Kind::Replay;
    spec.trace_path = need(c, "path", path).get<std::string>();
  } else {
    fail(path + ".kind", "must be bernoulli, gilbert_elliott or replay");
  }
  return spec;
}

}  // namespace

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig parse_config(const json& j, const std::string& name) {
  if (!j.is_object()) fail("root", "must be a JSON object");
  ExperimentConfig cfg;
  cfg.name = name;

  {
    json canonical = j;
    canonical.erase("output_dir");
    cfg.hash = fnv1a64(canonical.dump());
  }

  const json& model = need(j, "model", "root");
  cfg.model_kind = need(model, "kind", "model").get<std::string>();
  double ts = need_number(model, "Ts", "model");
  if (ts <= 0.0) fail("model.Ts", "must be positive");
  cfg.substeps = model.value("substeps", 4);
  if (cfg.substeps < 1) fail("model.substeps", "must be >= 1");
  cfg.divergence_bound = j.value("divergence_bound", 1e6);
  if (cfg.divergence_bound <= 0.0)
    fail("divergence_bound", "must be positive");

  if (cfg.model_kind == "double_integrator") {
    cfg.continuous_time = true;
    Eigen::MatrixXd ac(2, 2), bc(2, 1);
    ac << 0, 1, 0, 0;
    bc << 0, 1;
    zoh_discretize(ac, bc, ts, &cfg.model.A, &cfg.model.B);
    cfg.model.X = parse_set(model, "x_box", "X", 2, "model");
    cfg.model.U = parse_set(model, "u_box", "U", 1, "model");
    cfg.model.Ts = ts;
    cfg.plant = Plant::linear(cfg.model.A, cfg.model.B, cfg.divergence_bound);
    cfg.plant_identity = {{"kind", "double_integrator"},
                          {"X", matrix_json(cfg.model.X.A())},
                          {"Xb", matrix_json(cfg.model.X.b())},
                          {"U", matrix_json(cfg.model.U.A())},
                          {"Ub", matrix_json(cfg.model.U.b())}};
  } else if (cfg.model_kind == "linear") {
    cfg.continuous_time = model.value("continuous", false);
    Eigen::MatrixXd a = as_matrix(need(model, "A", "model"), "model.A");
    Eigen::MatrixXd b = as_matrix(need(model, "B", "model"), "model.B");
    if (a.rows() != a.cols()) fail("model.A", "must be square");
    if (b.rows() != a.rows()) fail("model.B", "row count must match A");
    if (cfg.continuous_time) {
      zoh_discretize(a, b, ts, &cfg.model.A, &cfg.model.B);
    } else {
      cfg.model.A = a;
      cfg.model.B = b;
    }
    int nx = static_cast<int>(a.rows());
    int nu = static_cast<int>(b.cols());
    cfg.model.X = parse_set(model, "x_box", "X", nx, "model");
    cfg.model.U = parse_set(model, "u_box", "U", nu, "model");
    cfg.model.Ts = ts;
    cfg.plant = Plant::linear(cfg.model.A, cfg.model.B, cfg.divergence_bound);
    cfg.plant_identity = {{"kind", "linear"},
                          {"continuous", cfg.continuous_time},
                          {"A", matrix_json(a)},
                          {"B", matrix_json(b)},
                          {"X", matrix_json(cfg.model.X.A())},
                          {"Xb", matrix_json(cfg.model.X.b())},
                          {"U", matrix_json(cfg.model.U.A())},
                          {"Ub", matrix_json(cfg.model.U.b())}};
    if (!cfg.continuous_time) cfg.plant_identity["Ts"] = ts;
  } else if (cfg.model_kind == "cartpole") {
    cfg.continuous_time = true;
    CartPoleParams params;
    params.cart_mass = model.value("cart_mass", params.cart_mass);
    params.pole_mass = model.value("pole_mass", params.pole_mass);
    params.pole_half_length =
        model.value("pole_half_length", params.pole_half_length);
    params.gravity = model.value("gravity", params.gravity);
    for (double v : {params.cart_mass, params.pole_mass,
                     params.pole_half_length, params.gravity})
      if (v <= 0.0) fail("model", "cart-pole parameters must be positive");
    Eigen::MatrixXd ac, bc;
    cartpole_linearize(params, &ac, &bc);
    zoh_discretize(ac, bc, ts, &cfg.model.A, &cfg.model.B);
    cfg.model.X = parse_set(model, "x_box", "X", 4, "model");
    cfg.model.U = parse_set(model, "u_box", "U", 1, "model");
    cfg.model.Ts = ts;
    cfg.plant =
        Plant::cartpole(params, ts, cfg.substeps, cfg.divergence_bound);
    cfg.plant_identity = {{"kind", "cartpole"},
                          {"cart_mass", params.cart_mass},
                          {"pole_mass", params.pole_mass},
                          {"pole_half_length", params.pole_half_length},
                          {"gravity", params.gravity},
                          {"X", matrix_json(cfg.model.X.A())},
                          {"Xb", matrix_json(cfg.model.X.b())},
                          {"U", matrix_json(cfg.model.U.A())},
                          {"Ub", matrix_json(cfg.model.U.b())}};
  } else {
    fail("model.kind", "must be double_integrator, linear or cartpole");
  }

  const json& hj = need(j, "horizon", "root");
  if (!hj.is_array() || hj.empty()) fail("horizon", "must be a nonempty array");
  for (const auto& v : hj) {
    if (!v.is_number_integer() || v.get<int>() < 0)
      fail("horizon", "entries must be nonnegative integers");
    cfg.horizon.push_back(v.get<int>());
  }
  if (cfg.horizon[0] < 1) fail("horizon", "first entry must be >= 1");

  const json& costs = need(j, "costs", "root");
  cfg.q_cost = as_weight(need(costs, "Q", "costs"), "costs.Q");
  cfg.r_cost = as_weight(need(costs, "R", "costs"), "costs.R");
  cfg.t_cost = as_weight(need(costs, "T", "costs"), "costs.T");
  cfg.lambda = j.value("lambda", 0.99);
  if (cfg.lambda <= 0.0 || cfg.lambda > 1.0)
    fail("lambda", "must be in (0,1]");

  cfg.n = j.value("n", 1);
  if (cfg.n < 1) fail("n", "must be >= 1");
  if (cfg.n > cfg.horizon[0])
    fail("n", "= " + std::to_string(cfg.n) +
                 " exceeds the fine horizon h1 = " +
                 std::to_string(cfg.horizon[0]) +
                 "; the actuator buffer cannot cover a send period");

  const json& ep = need(j, "episode", "root");
  double t_slots = need_number(ep, "T", "episode");
  if (t_slots < 1 || t_slots != std::floor(t_slots))
    fail("episode.T", "must be a positive integer");
  cfg.episode_len = static_cast<long>(t_slots);
  cfg.x0 = as_vector(need(ep, "x0", "episode"), "episode.x0");
  if (cfg.x0.size() != cfg.model.nx())
    fail("episode.x0", "has wrong dimension");
  if (ep.contains("reference")) {
    const json& refj = ep["reference"];
    if (refj.is_array() && !refj.empty() && refj[0].is_object()) {
      long prev = 0;
      for (size_t i = 0; i < refj.size(); ++i) {
        const json& seg = refj[i];
        std::string p = "episode.reference[" + std::to_string(i) + "]";
        long until = i + 1 == refj.size()
                         ? std::numeric_limits<long>::max()
                         : static_cast<long>(need_number(seg, "until", p));
        Eigen::VectorXd r = as_vector(need(seg, "r", p), p + ".r");
        if (r.size() != cfg.model.nx()) fail(p + ".r", "has wrong dimension");
        if (until <= prev) fail(p + ".until", "must increase");
        cfg.ref.pieces.push_back({until, r});
        prev = until;
      }
    } else {
      Eigen::VectorXd r = as_vector(refj, "episode.reference");
      if (r.size() != cfg.model.nx())
        fail("episode.reference", "has wrong dimension");
      cfg.ref = ReferenceSchedule::constant(r);
    }
  } else {
    cfg.ref = ReferenceSchedule::constant(
        Eigen::VectorXd::Zero(cfg.model.nx()));
  }
  cfg.consistency_tol = j.value("consistency_tol", 1e-9);

  if (j.contains("channels")) {
    const json& ch = j["channels"];
    if (ch.contains("uplink"))
      cfg.uplink = parse_channel(ch["uplink"], "channels.uplink");
    if (ch.contains("downlink"))
      cfg.downlink = parse_channel(ch["downlink"], "channels.downlink");
    cfg.correlated = ch.value("correlated", false);
    cfg.guard_limit = ch.value("guard_limit", 0);
    if (cfg.guard_limit < 0) fail("channels.guard_limit", "must be >= 0");
    if (cfg.correlated &&
        (cfg.uplink.kind != ChannelSpec::Kind::GilbertElliott ||
         cfg.downlink.kind != ChannelSpec::Kind::GilbertElliott))
      fail("channels.correlated", "requires gilbert_elliott on both links");
  }

  if (j.contains("seeds")) {
    const json& sj = j["seeds"];
    if (!sj.is_array() || sj.empty()) fail("seeds", "must be a nonempty array");
    for (const auto& v : sj) {
      if (!v.is_number_integer()) fail("seeds", "entries must be integers");
      cfg.seeds.push_back(v.get<uint64_t>());
    }
  } else if (j.contains("seed")) {
    cfg.seeds.push_back(j["seed"].get<uint64_t>());
  } else {
    cfg.seeds.push_back(0);
  }

  cfg.output_dir = j.value("output_dir", std::string("out"));

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    if (!sw.is_array()) fail("sweep", "must be an array of axes");
    for (size_t i = 0; i < sw.size(); ++i) {
      std::string p = "sweep[" + std::to_string(i) + "]";
      const json& axis = sw[i];
      ExperimentConfig::SweepAxis a;
      a.axis = need(axis, "axis", p).get<std::string>();
      if (a.axis != "n" && a.axis != "horizon" && a.axis != "loss")
        fail(p + ".axis", "must be n, horizon or loss");
      a.values = need(axis, "values", p);
      if (!a.values.is_array() || a.values.empty())
        fail(p + ".values", "must be a nonempty array");
      cfg.sweep.push_back(std::move(a));
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  std::string stem = path;
  if (auto pos = stem.find_last_of('/'); pos != std::string::npos)
    stem = stem.substr(pos + 1);
  if (auto pos = stem.rfind(".json"); pos != std::string::npos)
    stem = stem.substr(0, pos);
  return parse_config(j, stem);
}

EpisodeOptions episode_options(const ExperimentConfig& cfg, uint64_t seed) {
  EpisodeOptions opt;
  opt.T = cfg.episode_len;
  opt.x0 = cfg.x0;
  opt.ref = cfg.ref;
  opt.n = cfg.n;
  opt.uplink = cfg.uplink;
  opt.downlink = cfg.downlink;
  opt.correlated = cfg.correlated;
  opt.guard_limit = cfg.guard_limit;
  opt.seed = seed;
  opt.consistency_tol = cfg.consistency_tol;
  return opt;
}

}  // namespace netmpc
