#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netmpc/channel.hpp"
#include "netmpc/packets.hpp"
#include "netmpc/plant.hpp"
#include "netmpc/tracking_ocp.hpp"

namespace netmpc {

// Piecewise-constant reference; the last piece extends forever.
struct ReferenceSchedule {
  struct Piece {
    long until;  // active for t < until
    Eigen::VectorXd r;
  };
  std::vector<Piece> pieces;

  static ReferenceSchedule constant(const Eigen::VectorXd& r) {
    return ReferenceSchedule{{Piece{std::numeric_limits<long>::max(), r}}};
  }
  const Eigen::VectorXd& at(long t) const;
};

// Input the actuator applies at slot t while holding `plan`: the shipped
// slice while it lasts, then the feedback law around the plan's target.
// The estimator replays inputs through this same function so that its
// reconstruction matches the actuator bit for bit.
Eigen::VectorXd auxiliary_input(const ControllerPacket& plan,
                                const Eigen::MatrixXd& K, long t,
                                const Eigen::VectorXd& x);

// Joint-delivery certificate evaluated by the actuator at arrival slot t:
// the new plan's guessed input chain is valid iff every downlink since the
// packet's q landed, including this one. theta_log holds realized downlink
// outcomes per slot. Requires (t - q - 1) % n == 0.
int consistency_certificate(long t, long q, int n,
                            const std::vector<int8_t>& theta_log,
                            int theta_t);

struct CloudState {
  Eigen::VectorXd xhat_prior;  // current one-step prediction
  long q = -1;                 // newest slot with a received measurement
  std::map<long, ControllerPacket> plans;  // every sent plan, by arrival slot
  std::optional<Eigen::VectorXd> warm;
  long solves = 0;
  long infeasible = 0;
};

// One estimator update for slot t. With a measurement, the applied input is
// reconstructed exactly from the reported plan label; without one, the
// estimate coasts on the optimistic guess that the latest plan was accepted.
void estimator_step(CloudState& cloud, const Eigen::MatrixXd& A,
                    const Eigen::MatrixXd& B, const Eigen::MatrixXd& K,
                    long t, int n, bool gamma,
                    const std::optional<PlantPacket>& meas);

// Runs at slots where (t+1) is a multiple of n: folds the uplink outcome
// into q, solves from the one-step prediction, and emits the plan that
// arrives at slot t+1. Returns nothing on a failed solve; *status carries
// the solver verdict so the episode can abort with a precise reason.
std::optional<ControllerPacket> controller_step(
    CloudState& cloud, const TrackingOcp& ocp, const QpBackend& backend,
    long t, int n, bool gamma, const Eigen::VectorXd& r,
    double* solve_seconds, QpStatus* status);

struct SolveRecord {
  long t;  // -1 marks the bootstrap solve
  double seconds;
};

struct TraceRow {
  long t = 0;
  Eigen::VectorXd x, u, r, xhat_prior;
  int gamma = -1;      // -1 = no send opportunity at this slot
  int theta = -1;
  int theta_acc = -1;  // certificate outcome at arrival slots
  long s = 0;          // plan label the actuator ran during this slot
  long q = -1;         // cloud's q after this slot's processing
  long bytes_up = 0, bytes_down = 0;
};

struct SimTrace {
  int nx = 0, nu = 0;
  uint64_t config_hash = 0;
  uint64_t seed = 0;
  std::vector<TraceRow> rows;
};

struct Metrics {
  bool success = false;
  std::string fail_reason;
  long episode_len = 0;
  double mse = 0.0;
  double final_error = 0.0;
  long uplink_sends = 0, downlink_sends = 0;
  long uplink_losses = 0, downlink_losses = 0;
  double uplink_bytes_per_s = 0.0, downlink_bytes_per_s = 0.0;
  double packets_per_s_up = 0.0, packets_per_s_down = 0.0;
  long qp_solves = 0, infeasible_qps = 0;
  double solve_ms_mean = 0.0, solve_ms_max = 0.0;
  double max_state_violation = 0.0, max_input_violation = 0.0;
  double consistency_max_error = std::numeric_limits<double>::quiet_NaN();
};

struct EpisodeOptions {
  long T = 0;
  Eigen::VectorXd x0;
  ReferenceSchedule ref;
  int n = 1;  // send period in samples
  ChannelSpec uplink;
  ChannelSpec downlink;
  bool correlated = false;  // both links share one burst-state chain
  int guard_limit = 0;      // 0 disables delivery forcing
  uint64_t seed = 0;
  bool check_consistency = true;  // ignored for nonlinear plants
  double consistency_tol = 1e-9;
};

struct EpisodeResult {
  SimTrace trace;
  std::vector<SolveRecord> solves;
  Metrics metrics;
  std::vector<uint8_t> uplink_bits, downlink_bits;  // raw channel draws
  Eigen::VectorXd x_final;
};

// Simulates the full loop: scheduled solves every n samples from the cloud
// estimate, lossy plan/measurement exchange, buffer updates gated by the
// consistency certificate, watchdog forcing, and per-slot logging. Aborts
// on plant divergence or an infeasible solve; throws only on internal
// invariant breaches.
EpisodeResult run_episode(const TrackingOcp& ocp, const QpBackend& backend,
                          const Plant& plant, const EpisodeOptions& opt);

// Trace-derived subset of Metrics, recomputable from a CSV round trip.
Metrics compute_metrics(const SimTrace& trace, double Ts);

void write_trace_csv(const std::string& path, const SimTrace& trace);
SimTrace read_trace_csv(const std::string& path);
void write_solvetimes_csv(const std::string& path,
                          const std::vector<SolveRecord>& solves);
std::string metrics_to_json(const Metrics& m, uint64_t config_hash,
                            uint64_t seed);

}  // namespace netmpc
