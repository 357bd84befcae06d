#include "netmpc/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "netmpc/errors.hpp"
#include "netmpc/rng.hpp"

namespace netmpc {

const Eigen::VectorXd& ReferenceSchedule::at(long t) const {
  if (pieces.empty()) throw ConfigError("reference schedule is empty");
  for (const auto& p : pieces)
    if (t < p.until) return p.r;
  return pieces.back().r;
}

Eigen::VectorXd auxiliary_input(const ControllerPacket& plan,
                                const Eigen::MatrixXd& K, long t,
                                const Eigen::VectorXd& x) {
  long j = t - plan.origin;
  if (j >= 0 && j < plan.u_slice.rows())
    return plan.u_slice.row(j).transpose();
  return plan.ubar + K * (plan.xbar - x);
}

int consistency_certificate(long t, long q, int n,
                            const std::vector<int8_t>& theta_log,
                            int theta_t) {
  if ((t - q - 1) % n != 0)
    throw std::logic_error("certificate: q not aligned to the send schedule");
  if (theta_t == 0) return 0;
  for (long j = q + 1; j < t; j += n)
    if (theta_log[static_cast<size_t>(j)] == 0) return 0;
  return 1;
}

void estimator_step(CloudState& cloud, const Eigen::MatrixXd& A,
                    const Eigen::MatrixXd& B, const Eigen::MatrixXd& K,
                    long t, int n, bool gamma,
                    const std::optional<PlantPacket>& meas) {
  const ControllerPacket& latest = cloud.plans.at(t - t % n);
  Eigen::VectorXd xpost;
  Eigen::VectorXd u;
  if (gamma) {
    if (!meas)
      throw std::logic_error("estimator: delivered uplink without payload");
    xpost = meas->x;
    // The reported label pins down exactly which plan the actuator ran, so
    // the replayed input equals the applied one bit for bit.
    u = auxiliary_input(cloud.plans.at(meas->s), K, t, xpost);
  } else {
    xpost = cloud.xhat_prior;
    // Optimistic guess: the latest plan was accepted and is inside its
    // shipped slice, since t - (t - t%n) = t%n < n <= h1.
    u = latest.u_slice.row(t % n).transpose();
  }
  cloud.xhat_prior = A * xpost + B * u;
}

std::optional<ControllerPacket> controller_step(
    CloudState& cloud, const TrackingOcp& ocp, const QpBackend& backend,
    long t, int n, bool gamma, const Eigen::VectorXd& r,
    double* solve_seconds, QpStatus* status) {
  if ((t + 1) % n != 0) return std::nullopt;
  if (gamma) cloud.q = t;
  OcpSolution sol = ocp.solve(backend, cloud.xhat_prior, r, cloud.warm);
  ++cloud.solves;
  *solve_seconds = sol.solve_seconds;
  *status = sol.status;
  if (sol.status != QpStatus::Optimal) {
    ++cloud.infeasible;
    return std::nullopt;
  }
  cloud.warm = sol.z;
  ControllerPacket pkt;
  pkt.u_slice = sol.u.topRows(ocp.horizon().h1);
  pkt.xbar = sol.xbar;
  pkt.ubar = sol.ubar;
  pkt.q = cloud.q;
  pkt.origin = t + 1;
  cloud.plans[t + 1] = pkt;
  return pkt;
}

EpisodeResult run_episode(const TrackingOcp& ocp, const QpBackend& backend,
                          const Plant& plant, const EpisodeOptions& opt) {
  const int nx = ocp.vars().nx;
  const int nu = ocp.vars().nu;
  const int h1 = ocp.horizon().h1;
  const int n = opt.n;
  if (n < 1) throw ConfigError("episode: send period must be >= 1");
  if (n > h1)
    throw ConfigError("episode: send period exceeds the shipped plan slice");
  if (opt.T < 1) throw ConfigError("episode: length must be >= 1");
  if (opt.x0.size() != nx) throw ConfigError("episode: x0 dimension mismatch");
  if (plant.nx() != nx || plant.nu() != nu)
    throw ConfigError("episode: plant and model dimensions differ");

  const Eigen::MatrixXd& A = ocp.model().A;
  const Eigen::MatrixXd& B = ocp.model().B;
  const Eigen::MatrixXd& K = ocp.terminal().K;
  const bool check_cons =
      opt.check_consistency && plant.kind() == Plant::Kind::Linear;

  std::shared_ptr<GeState> shared;
  if (opt.correlated) {
    if (opt.uplink.kind != ChannelSpec::Kind::GilbertElliott ||
        opt.downlink.kind != ChannelSpec::Kind::GilbertElliott)
      throw ConfigError("episode: correlated mode needs burst channels");
    shared = std::make_shared<GeState>();
  }
  ChannelModel up = make_channel(opt.uplink, derive_stream(opt.seed, 1),
                                 shared);
  ChannelModel down = make_channel(opt.downlink, derive_stream(opt.seed, 2),
                                   shared);
  LossGuard guard(opt.guard_limit);

  EpisodeResult out;
  out.trace.nx = nx;
  out.trace.nu = nu;
  out.trace.seed = opt.seed;

  CloudState cloud;
  cloud.xhat_prior = opt.x0;

  // Startup contract: the first plan is solved from the shared initial
  // state and its delivery at slot 0 is guaranteed.
  OcpSolution boot = ocp.solve(backend, opt.x0, opt.ref.at(0), std::nullopt);
  ++cloud.solves;
  out.solves.push_back({-1, boot.solve_seconds});
  if (boot.status != QpStatus::Optimal) {
    ++cloud.infeasible;
    out.metrics.fail_reason = boot.status == QpStatus::Infeasible
                                  ? "initial_infeasible"
                                  : "solver_error";
    out.metrics.qp_solves = cloud.solves;
    out.metrics.infeasible_qps = cloud.infeasible;
    out.x_final = opt.x0;
    return out;
  }
  cloud.warm = boot.z;
  ControllerPacket bootpkt;
  bootpkt.u_slice = boot.u.topRows(h1);
  bootpkt.xbar = boot.xbar;
  bootpkt.ubar = boot.ubar;
  bootpkt.q = -1;
  bootpkt.origin = 0;
  cloud.plans[0] = bootpkt;
  std::optional<ControllerPacket> in_flight = bootpkt;

  ControllerPacket buffer = bootpkt;  // re-accepted at slot 0
  long s = 0;
  std::vector<int8_t> theta_log(static_cast<size_t>(opt.T), 0);
  std::vector<int8_t> acc_log(static_cast<size_t>(opt.T), 0);

  Eigen::VectorXd x = opt.x0;
  bool force_arrival = true;  // startup delivery
  int round_gamma = 1;        // no uplink precedes the first arrival
  double cons_max = 0.0;
  bool ok = true;
  std::string reason;

  for (long t = 0; t < opt.T; ++t) {
    const Eigen::VectorXd& r = opt.ref.at(t);
    TraceRow row;
    row.t = t;
    row.r = r;
    row.xhat_prior = cloud.xhat_prior;

    if (t % n == 0) {
      if (!in_flight)
        throw std::logic_error("episode: arrival slot without a plan");
      row.bytes_down = controller_packet_bytes(h1, nu, nx);
      bool raw = down.realize_step();
      bool delivered = force_arrival || raw;
      row.theta = delivered ? 1 : 0;
      theta_log[static_cast<size_t>(t)] = static_cast<int8_t>(row.theta);
      int acc = delivered
                    ? consistency_certificate(t, in_flight->q, n, theta_log, 1)
                    : 0;
      row.theta_acc = acc;
      acc_log[static_cast<size_t>(t)] = static_cast<int8_t>(acc);
      if (acc == 1) {
        buffer = *in_flight;
        s = t;
      }
      guard.observe_round(round_gamma == 1, delivered);
      force_arrival = false;
      in_flight.reset();
    }

    if (check_cons) {
      long a = t - t % n;
      if (acc_log[static_cast<size_t>(a)] == 1) {
        double dev = (x - cloud.xhat_prior).norm();
        cons_max = std::max(cons_max, dev);
        if (dev > opt.consistency_tol)
          throw std::logic_error(
              "episode: certified estimate diverged from the plant");
      }
    }

    Eigen::VectorXd u = auxiliary_input(buffer, K, t, x);
    row.x = x;
    row.u = u;
    row.s = s;

    Eigen::VectorXd xnext = plant.step(x, u);

    bool solve_slot = ((t + 1) % n == 0);
    bool gamma = false;
    std::optional<PlantPacket> meas;
    if (solve_slot) {
      row.bytes_up = plant_packet_bytes(nx);
      bool force = guard.force_round();
      bool raw = up.realize_step();
      gamma = force || raw;
      row.gamma = gamma ? 1 : 0;
      round_gamma = row.gamma;
      if (gamma) meas = PlantPacket{x, s};
      // A forced round pushes both directions through; the arrival side of
      // this round is the next slot.
      force_arrival = force;
    }

    estimator_step(cloud, A, B, K, t, n, gamma, meas);
    if (solve_slot) {
      double secs = 0.0;
      QpStatus st = QpStatus::Optimal;
      auto pkt =
          controller_step(cloud, ocp, backend, t, n, gamma, r, &secs, &st);
      out.solves.push_back({t, secs});
      if (!pkt) {
        ok = false;
        reason =
            st == QpStatus::Infeasible ? "ocp_infeasible" : "solver_error";
        row.q = cloud.q;
        out.trace.rows.push_back(std::move(row));
        break;
      }
      in_flight = pkt;
    }
    row.q = cloud.q;
    out.trace.rows.push_back(std::move(row));

    x = xnext;
    if (plant.diverged(x)) {
      ok = false;
      reason = "diverged";
      break;
    }
  }

  out.x_final = x;
  out.uplink_bits = up.history();
  out.downlink_bits = down.history();

  out.metrics = compute_metrics(out.trace, ocp.model().Ts);
  out.metrics.success = ok;
  out.metrics.fail_reason = reason;
  out.metrics.qp_solves = cloud.solves;
  out.metrics.infeasible_qps = cloud.infeasible;
  out.metrics.final_error = (x - opt.ref.at(opt.T - 1)).norm();
  if (check_cons) out.metrics.consistency_max_error = cons_max;
  double sv = 0.0, iv = 0.0;
  for (const auto& rw : out.trace.rows) {
    sv = std::max(sv, ocp.model().X.max_violation(rw.x));
    iv = std::max(iv, ocp.model().U.max_violation(rw.u));
  }
  out.metrics.max_state_violation = sv;
  out.metrics.max_input_violation = iv;
  double ssum = 0.0, smax = 0.0;
  for (const auto& rec : out.solves) {
    ssum += rec.seconds;
    smax = std::max(smax, rec.seconds);
  }
  out.metrics.solve_ms_mean =
      out.solves.empty() ? 0.0 : 1000.0 * ssum / out.solves.size();
  out.metrics.solve_ms_max = 1000.0 * smax;
  return out;
}

Metrics compute_metrics(const SimTrace& trace, double Ts) {
  Metrics m;
  m.episode_len = static_cast<long>(trace.rows.size());
  if (trace.rows.empty() || Ts <= 0.0) return m;
  double se = 0.0;
  long ub = 0, db = 0;
  for (const auto& row : trace.rows) {
    se += (row.x - row.r).squaredNorm();
    if (row.gamma >= 0) {
      ++m.uplink_sends;
      if (row.gamma == 0) ++m.uplink_losses;
    }
    if (row.theta >= 0) {
      ++m.downlink_sends;
      if (row.theta == 0) ++m.downlink_losses;
    }
    ub += row.bytes_up;
    db += row.bytes_down;
  }
  double horizon_seconds = Ts * static_cast<double>(m.episode_len);
  m.mse = se / static_cast<double>(m.episode_len);
  m.uplink_bytes_per_s = static_cast<double>(ub) / horizon_seconds;
  m.downlink_bytes_per_s = static_cast<double>(db) / horizon_seconds;
  m.packets_per_s_up =
      static_cast<double>(m.uplink_sends) / horizon_seconds;
  m.packets_per_s_down =
      static_cast<double>(m.downlink_sends) / horizon_seconds;
  return m;
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace: " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(trace.config_hash));
  out << "# config_hash=" << buf << " seed=" << trace.seed
      << " nx=" << trace.nx << " nu=" << trace.nu << "\n";
  out << "t";
  for (int i = 0; i < trace.nx; ++i) out << ",x" << i;
  for (int i = 0; i < trace.nu; ++i) out << ",u" << i;
  for (int i = 0; i < trace.nx; ++i) out << ",r" << i;
  for (int i = 0; i < trace.nx; ++i) out << ",xhat" << i;
  out << ",gamma,theta,theta_acc,s,q,bytes_up,bytes_down\n";
  for (const auto& row : trace.rows) {
    out << row.t;
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    };
    for (int i = 0; i < trace.nx; ++i) put(row.x(i));
    for (int i = 0; i < trace.nu; ++i) put(row.u(i));
    for (int i = 0; i < trace.nx; ++i) put(row.r(i));
    for (int i = 0; i < trace.nx; ++i) put(row.xhat_prior(i));
    out << "," << row.gamma << "," << row.theta << "," << row.theta_acc
        << "," << row.s << "," << row.q << "," << row.bytes_up << ","
        << row.bytes_down << "\n";
  }
}

SimTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read trace: " + path);
  SimTrace trace;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("trace: missing header line");
  {
    unsigned long long hash = 0, seed = 0;
    int nx = 0, nu = 0;
    if (std::sscanf(line.c_str(), "# config_hash=%llx seed=%llu nx=%d nu=%d",
                    &hash, &seed, &nx, &nu) != 4)
      throw std::runtime_error("trace: malformed header");
    trace.config_hash = hash;
    trace.seed = seed;
    trace.nx = nx;
    trace.nu = nu;
  }
  if (!std::getline(in, line))
    throw std::runtime_error("trace: missing column line");
  const int ncols = 1 + 3 * trace.nx + trace.nu + 7;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (static_cast<int>(f.size()) != ncols)
      throw std::runtime_error("trace: wrong column count");
    TraceRow row;
    int c = 0;
    row.t = std::stol(f[c++]);
    row.x.resize(trace.nx);
    row.u.resize(trace.nu);
    row.r.resize(trace.nx);
    row.xhat_prior.resize(trace.nx);
    for (int i = 0; i < trace.nx; ++i) row.x(i) = std::stod(f[c++]);
    for (int i = 0; i < trace.nu; ++i) row.u(i) = std::stod(f[c++]);
    for (int i = 0; i < trace.nx; ++i) row.r(i) = std::stod(f[c++]);
    for (int i = 0; i < trace.nx; ++i) row.xhat_prior(i) = std::stod(f[c++]);
    row.gamma = std::stoi(f[c++]);
    row.theta = std::stoi(f[c++]);
    row.theta_acc = std::stoi(f[c++]);
    row.s = std::stol(f[c++]);
    row.q = std::stol(f[c++]);
    row.bytes_up = std::stol(f[c++]);
    row.bytes_down = std::stol(f[c++]);
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

void write_solvetimes_csv(const std::string& path,
                          const std::vector<SolveRecord>& solves) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write solve times: " + path);
  out << "t,solve_seconds\n";
  char buf[48];
  for (const auto& rec : solves) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9f\n", rec.t, rec.seconds);
    out << buf;
  }
}

std::string metrics_to_json(const Metrics& m, uint64_t config_hash,
                            uint64_t seed) {
  nlohmann::json j;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(config_hash));
  j["config_hash"] = buf;
  j["seed"] = seed;
  j["success"] = m.success;
  j["fail_reason"] = m.fail_reason;
  j["episode_len"] = m.episode_len;
  j["mse"] = m.mse;
  j["final_error"] = m.final_error;
  j["uplink_sends"] = m.uplink_sends;
  j["downlink_sends"] = m.downlink_sends;
  j["uplink_losses"] = m.uplink_losses;
  j["downlink_losses"] = m.downlink_losses;
  j["uplink_bytes_per_s"] = m.uplink_bytes_per_s;
  j["downlink_bytes_per_s"] = m.downlink_bytes_per_s;
  j["packets_per_s_up"] = m.packets_per_s_up;
  j["packets_per_s_down"] = m.packets_per_s_down;
  j["qp_solves"] = m.qp_solves;
  j["infeasible_qps"] = m.infeasible_qps;
  j["solve_ms_mean"] = m.solve_ms_mean;
  j["solve_ms_max"] = m.solve_ms_max;
  j["max_state_violation"] = m.max_state_violation;
  j["max_input_violation"] = m.max_input_violation;
  if (std::isnan(m.consistency_max_error))
    j["consistency_max_error"] = nullptr;
  else
    j["consistency_max_error"] = m.consistency_max_error;
  return j.dump(2);
}

}  // namespace netmpc
