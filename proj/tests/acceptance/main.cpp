// Acceptance gate for the networked MPC laboratory: ten end-to-end checks,
// one PASS/FAIL line each. A nonzero exit means some requested check failed.
#include <CLI11.hpp>

#include <Eigen/Dense>
#include <array>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "netmpc/cartpole.hpp"
#include "netmpc/channel.hpp"
#include "netmpc/closed_loop.hpp"
#include "netmpc/lti_model.hpp"
#include "netmpc/multi_horizon.hpp"
#include "netmpc/parallel.hpp"
#include "netmpc/plant.hpp"
#include "netmpc/polytope.hpp"
#include "netmpc/qp.hpp"
#include "netmpc/riccati.hpp"
#include "netmpc/tracking_ocp.hpp"
#include "netmpc/tracking_sets.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace {

// Pinned acceptance tolerances.
constexpr double kObjRelTol = 1e-6;     // objective gap between formulations
constexpr double kU0AbsTol = 1e-5;      // first-input gap between formulations
constexpr double kViolationTol = 1e-8;  // constraint violation counted as zero
constexpr double kPredictTol = 1e-9;    // certified prediction deviation
constexpr double kTrackTol = 1e-2;      // tracking error at the final slot
constexpr double kGapTol = 1e-8;        // mutual polytope inclusion gap
constexpr double kMemberTol = 1e-7;     // sampled membership slack
constexpr double kMseBand = 0.25;       // allowed MSE growth at halved rate

int g_jobs = 1;
std::string g_cache;

struct Check {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Hit-and-run samples pulled toward the Chebyshev center, so every point
// keeps strict interior margin.
std::vector<Eigen::VectorXd> interior_samples(const netmpc::Polytope& p,
                                              int count, uint64_t seed,
                                              double shrink) {
  std::vector<Eigen::VectorXd> pts = netmpc::sample_hit_and_run(p, count,
                                                                seed);
  Eigen::VectorXd c = p.chebyshev_center().center;
  for (auto& w : pts) w = c + shrink * (w - c);
  return pts;
}

// Criterion 1 worker: the staged problem at a single granularity against an
// independently condensed formulation, solved from shared ingredients.
struct EquivalenceStats {
  double obj_rel = 0.0;
  double u0_abs = 0.0;
  std::string error;
};

EquivalenceStats uniform_equivalence(const netmpc::LtiModel& model,
                                     const Eigen::MatrixXd& Q,
                                     const Eigen::MatrixXd& R,
                                     const Eigen::MatrixXd& T, int N,
                                     const Eigen::VectorXd& r_lo,
                                     const Eigen::VectorXd& r_hi,
                                     uint64_t seed) {
  EquivalenceStats st;
  netmpc::TrackingOcp ocp(model, {N}, Q, R, T, 0.99, g_cache);
  netmpc::DenseIpmBackend backend;
  const int nx = model.nx();
  std::vector<Eigen::VectorXd> anchors =
      interior_samples(ocp.coupling_set().set, 50, seed, 0.95);
  oracles::TestRng rng(seed * 2654435761ULL + 1);
  for (size_t i = 0; i < anchors.size(); ++i) {
    Eigen::VectorXd x0 = anchors[i].head(nx);
    Eigen::VectorXd r(nx);
    for (int d = 0; d < nx; ++d) r(d) = rng.range(r_lo(d), r_hi(d));
    netmpc::OcpSolution sparse = ocp.solve(backend, x0, r);
    if (sparse.status != netmpc::QpStatus::Optimal) {
      st.error = strf("pair %zu: staged solve not optimal", i);
      return st;
    }
    oracles::CondensedTracking flat = oracles::condense_tracking(
        model, N, Q, R, T, ocp.terminal().P, ocp.target_basis(),
        ocp.coupling_set().set, x0, r);
    netmpc::QpSolution qs = backend.solve(flat.qp);
    if (qs.status != netmpc::QpStatus::Optimal) {
      st.error = strf("pair %zu: condensed solve not optimal", i);
      return st;
    }
    double obj_flat = qs.objective + flat.constant;
    double denom =
        std::max({1e-12, std::abs(sparse.objective), std::abs(obj_flat)});
    st.obj_rel =
        std::max(st.obj_rel, std::abs(sparse.objective - obj_flat) / denom);
    st.u0_abs = std::max(st.u0_abs, (sparse.u.row(0).transpose() -
                                     flat.u0(qs.z))
                                        .lpNorm<Eigen::Infinity>());
  }
  return st;
}

Check criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  fixtures::DiSetup di = fixtures::double_integrator();
  EquivalenceStats a = uniform_equivalence(
      di.model, di.Q, di.R, di.T, 12, Eigen::Vector2d(-4.5, -2.0),
      Eigen::Vector2d(4.5, 2.0), 101);
  if (!a.error.empty()) return {false, "double integrator: " + a.error};
  fixtures::CartSetup cp = fixtures::cartpole_linear();
  Eigen::Vector4d lo(-1.8, -0.3, -2.0, -1.0);
  Eigen::Vector4d hi(1.8, 0.3, 2.0, 1.0);
  EquivalenceStats b =
      uniform_equivalence(cp.model, cp.Q, cp.R, cp.T, 10, lo, hi, 202);
  if (!b.error.empty()) return {false, "cart-pole: " + b.error};
  double obj = std::max(a.obj_rel, b.obj_rel);
  double u0 = std::max(a.u0_abs, b.u0_abs);
  double el = seconds_since(t0);
  bool pass = obj <= kObjRelTol && u0 <= kU0AbsTol && el < 60.0;
  return {pass, strf("100 pairs, max objective rel err %.1e, max first-input "
                     "err %.1e, %.1fs",
                     obj, u0, el)};
}

// Shared 500-episode batch for criteria 2 and 3: lossy double-integrator
// runs across send rates and horizon layouts, started from sampled feasible
// states. Computed once per process.
struct SuiteOutcome {
  long episodes = 0;
  long failed = 0;
  long infeasible = 0;
  double worst_violation = 0.0;
  double worst_certified = 0.0;
  long certified_steps = 0;
  double seconds = 0.0;
  std::string first_error;
};

const SuiteOutcome& feasibility_suite() {
  static const SuiteOutcome cached = [] {
    SuiteOutcome s;
    auto t0 = std::chrono::steady_clock::now();
    fixtures::DiSetup di = fixtures::double_integrator();
    struct Variant {
      std::vector<int> H;
      int n;
    };
    const std::vector<Variant> variants = {
        {{10}, 1}, {{10}, 2}, {{3, 2, 2}, 1}, {{3, 2, 2}, 2}};
    const long per = 125;
    std::vector<std::unique_ptr<netmpc::TrackingOcp>> ocps;
    std::vector<std::vector<Eigen::VectorXd>> starts;
    for (size_t v = 0; v < variants.size(); ++v) {
      ocps.push_back(std::make_unique<netmpc::TrackingOcp>(
          di.model, variants[v].H, di.Q, di.R, di.T, 0.99, g_cache));
      starts.push_back(interior_samples(ocps[v]->coupling_set().set,
                                        static_cast<int>(per),
                                        9000 + static_cast<uint64_t>(v),
                                        0.9));
    }
    netmpc::Plant plant = netmpc::Plant::linear(di.model.A, di.model.B);
    netmpc::DenseIpmBackend backend;
    std::mutex mu;
    netmpc::parallel_for(
        per * static_cast<long>(variants.size()), g_jobs, [&](long i) {
          const long v = i / per;
          const int n = variants[static_cast<size_t>(v)].n;
          netmpc::EpisodeOptions opt;
          opt.T = 240;
          opt.x0 = starts[static_cast<size_t>(v)][static_cast<size_t>(
                            i % per)]
                       .head(2);
          opt.ref = netmpc::ReferenceSchedule::constant(
              Eigen::Vector2d(2.0, 0.0));
          opt.n = n;
          opt.uplink = netmpc::ChannelSpec::bernoulli(0.3);
          opt.downlink = netmpc::ChannelSpec::bernoulli(0.3);
          opt.guard_limit = 10;
          opt.seed = 1000 + static_cast<uint64_t>(i);
          // The certificate property is re-derived from the trace below, so
          // the loop's own cross-check stays out of the loop.
          opt.check_consistency = false;
          bool ok = true;
          long infeas = 0;
          double sv = 0.0, cv = 0.0;
          long cert = 0;
          std::string err;
          try {
            netmpc::EpisodeResult res =
                netmpc::run_episode(*ocps[static_cast<size_t>(v)], backend,
                                    plant, opt);
            ok = res.metrics.success;
            infeas = res.metrics.infeasible_qps;
            if (!ok)
              err = strf("episode %ld: %s", i, res.metrics.fail_reason.c_str());
            const auto& rows = res.trace.rows;
            for (const auto& row : rows) {
              sv = std::max(sv, di.model.X.max_violation(row.x));
              sv = std::max(sv, di.model.U.max_violation(row.u));
            }
            for (size_t t = 0; t < rows.size(); ++t) {
              const size_t arr = t - t % static_cast<size_t>(n);
              if (rows[arr].theta_acc != 1) continue;
              ++cert;
              cv = std::max(cv, (rows[t].x - rows[t].xhat_prior).norm());
            }
          } catch (const std::exception& e) {
            ok = false;
            err = strf("episode %ld: %s", i, e.what());
          }
          std::lock_guard<std::mutex> lock(mu);
          ++s.episodes;
          if (!ok) ++s.failed;
          s.infeasible += infeas;
          s.worst_violation = std::max(s.worst_violation, sv);
          s.worst_certified = std::max(s.worst_certified, cv);
          s.certified_steps += cert;
          if (!err.empty() && s.first_error.empty()) s.first_error = err;
        });
    s.seconds = seconds_since(t0);
    return s;
  }();
  return cached;
}

Check criterion_2() {
  const SuiteOutcome& s = feasibility_suite();
  bool pass = s.failed == 0 && s.infeasible == 0 &&
              s.worst_violation <= kViolationTol && s.seconds < 600.0;
  std::string detail =
      strf("%ld episodes, %ld failed, %ld infeasible solves, max violation "
           "%.1e, %.0fs",
           s.episodes, s.failed, s.infeasible, s.worst_violation, s.seconds);
  if (!s.first_error.empty()) detail += "; " + s.first_error;
  return {pass, detail};
}

Check criterion_3() {
  const SuiteOutcome& s = feasibility_suite();
  bool pass =
      s.failed == 0 && s.certified_steps > 0 && s.worst_certified <= kPredictTol;
  return {pass, strf("%ld certified slots, max prediction deviation %.1e",
                     s.certified_steps, s.worst_certified)};
}

Check criterion_4() {
  fixtures::DiSetup di = fixtures::double_integrator();
  netmpc::TrackingOcp ocp(di.model, {10}, di.Q, di.R, di.T, 0.99, g_cache);
  netmpc::Plant plant = netmpc::Plant::linear(di.model.A, di.model.B);
  netmpc::DenseIpmBackend backend;
  const Eigen::Vector2d r(3.0, 0.0);
  const long per = 100;
  std::vector<Eigen::VectorXd> starts =
      interior_samples(ocp.coupling_set().set, static_cast<int>(3 * per), 777,
                       0.8);
  std::mutex mu;
  long converged = 0;
  double worst = 0.0;
  std::string first_error;
  netmpc::parallel_for(3 * per, g_jobs, [&](long i) {
    netmpc::EpisodeOptions opt;
    opt.T = 200;
    opt.x0 = starts[static_cast<size_t>(i)].head(2);
    opt.ref = netmpc::ReferenceSchedule::constant(r);
    opt.n = static_cast<int>(i / per) + 1;
    opt.uplink = netmpc::ChannelSpec::bernoulli(0.3);
    opt.downlink = netmpc::ChannelSpec::bernoulli(0.3);
    opt.guard_limit = 10;
    opt.seed = 40000 + static_cast<uint64_t>(i);
    double err = std::numeric_limits<double>::infinity();
    std::string msg;
    try {
      netmpc::EpisodeResult res = netmpc::run_episode(ocp, backend, plant,
                                                      opt);
      if (res.metrics.success)
        err = (res.x_final - r).norm();
      else
        msg = strf("run %ld: %s", i, res.metrics.fail_reason.c_str());
    } catch (const std::exception& e) {
      msg = strf("run %ld: %s", i, e.what());
    }
    std::lock_guard<std::mutex> lock(mu);
    if (err <= kTrackTol) ++converged;
    if (std::isfinite(err)) worst = std::max(worst, err);
    if (!msg.empty() && first_error.empty()) first_error = msg;
  });
  bool pass = converged == 3 * per;
  std::string detail = strf(
      "%ld/%ld lossy runs inside %.0e of the target after 200 slots "
      "(n = 1..3, worst %.1e)",
      converged, 3 * per, kTrackTol, worst);
  if (!first_error.empty()) detail += "; " + first_error;
  return {pass, detail};
}

Check criterion_5() {
  fixtures::DiSetup di = fixtures::double_integrator();
  netmpc::HorizonLayout lay = netmpc::horizon_layout({2, 2, 1});
  netmpc::TailFeasibleSets tail = netmpc::feasible_set_x02(di.model, lay);
  const netmpc::Polytope& x02 = tail.x02();
  const int grid = 41;
  long agree = 0, members = 0, mismatches = 0;
  std::string first;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      Eigen::Vector2d p(-5.0 + 10.0 * i / (grid - 1.0),
                        -5.0 + 10.0 * j / (grid - 1.0));
      bool member = x02.contains(p);
      bool lp = oracles::tail_lp_feasible(di.model, lay, p);
      if (member == lp) {
        ++agree;
      } else {
        ++mismatches;
        if (first.empty())
          first = strf("first mismatch at (%.2f, %.2f): set %d, lp %d", p(0),
                       p(1), member ? 1 : 0, lp ? 1 : 0);
      }
      if (member) ++members;
    }
  bool pass = mismatches == 0;
  std::string detail = strf("%ld/%d grid points agree (%ld inside)", agree,
                            grid * grid, members);
  if (!first.empty()) detail += "; " + first;
  return {pass, detail};
}

Check criterion_6() {
  fixtures::DiSetup di = fixtures::double_integrator();
  netmpc::TerminalPair term =
      netmpc::terminal_pair(di.model.A, di.model.B, di.Q, di.R);
  netmpc::SteadyStateBasis basis =
      netmpc::steady_state_basis(di.model.A, di.model.B);
  Eigen::MatrixXd Ae =
      netmpc::extended_system(di.model.A, di.model.B, term.K, basis);

  netmpc::HorizonLayout lay_mh = netmpc::horizon_layout({3, 2, 2});
  netmpc::TailFeasibleSets tail_mh = netmpc::feasible_set_x02(di.model,
                                                              lay_mh);
  netmpc::AdmissibleSet staged =
      netmpc::build_oinf_mh(di.model, tail_mh, term.K, basis, 0.99);
  netmpc::Polytope w_staged =
      netmpc::build_w(tail_mh.x02(), di.model.U, term.K, basis);

  netmpc::Polytope w_plain =
      netmpc::build_w(di.model.X, di.model.U, term.K, basis);
  netmpc::AdmissibleSet plain = netmpc::max_admissible_set(Ae, w_plain, 0.99);

  long bad = 0;
  double worst = -std::numeric_limits<double>::infinity();
  auto sample_check = [&](const netmpc::Polytope& set,
                          const netmpc::Polytope& w, uint64_t seed) {
    for (const Eigen::VectorXd& z : netmpc::sample_hit_and_run(set, 1000,
                                                               seed)) {
      double v = std::max(set.max_violation(Ae * z), w.max_violation(z));
      worst = std::max(worst, v);
      if (v > kMemberTol) ++bad;
    }
  };
  sample_check(staged.set, w_staged, 61001);
  sample_check(plain.set, w_plain, 61002);

  // At a single granularity the tail problem has no steps, its feasible set
  // collapses to the state set, and the staged pipeline must reproduce the
  // plain construction.
  netmpc::HorizonLayout lay_uni = netmpc::horizon_layout({10});
  netmpc::TailFeasibleSets tail_uni = netmpc::feasible_set_x02(di.model,
                                                               lay_uni);
  bool tail_collapses = netmpc::poly_equal(tail_uni.x02(), di.model.X);
  netmpc::AdmissibleSet reduced =
      netmpc::build_oinf_mh(di.model, tail_uni, term.K, basis, 0.99);
  double gap = std::max(netmpc::inclusion_gap(reduced.set, plain.set),
                        netmpc::inclusion_gap(plain.set, reduced.set));
  bool pass = bad == 0 && tail_collapses && gap <= kGapTol;
  return {pass,
          strf("2000 samples, %ld outside after one step (worst slack %.1e), "
               "uniform reduction gap %.1e%s",
               bad, worst, gap,
               tail_collapses ? "" : ", tail set differs from the state set")};
}

Check criterion_7() {
  fixtures::CartSetup cp = fixtures::cartpole_linear();
  const std::vector<std::vector<int>> layouts = {{5}, {5, 4, 3, 2}, {30}};
  std::vector<std::unique_ptr<netmpc::TrackingOcp>> ocps;
  for (const auto& H : layouts)
    ocps.push_back(std::make_unique<netmpc::TrackingOcp>(
        cp.model, H, cp.Q, cp.R, cp.T, 0.99, g_cache));
  const int nvar_staged = ocps[1]->vars().nvar();
  const int nvar_long = ocps[2]->vars().nvar();

  const int solves = 240;
  std::vector<std::vector<Eigen::VectorXd>> anchors;
  for (size_t k = 0; k < ocps.size(); ++k)
    anchors.push_back(interior_samples(ocps[k]->coupling_set().set, solves,
                                       7100 + static_cast<uint64_t>(k),
                                       0.95));
  netmpc::DenseIpmBackend backend;
  const Eigen::Vector4d r(0.4, 0.0, 0.0, 0.0);
  std::array<double, 3> total{0.0, 0.0, 0.0};
  // Untimed passes touch every code path first; timed solves then interleave
  // the three problems so machine drift cancels.
  for (size_t k = 0; k < ocps.size(); ++k)
    for (int i = 0; i < 3; ++i)
      (void)ocps[k]->solve(backend, anchors[k][static_cast<size_t>(i)].head(4),
                           r);
  for (int i = 0; i < solves; ++i)
    for (size_t k = 0; k < ocps.size(); ++k) {
      netmpc::OcpSolution sol =
          ocps[k]->solve(backend, anchors[k][static_cast<size_t>(i)].head(4),
                         r);
      if (sol.status != netmpc::QpStatus::Optimal)
        return {false, strf("layout %zu, anchor %d: solve not optimal", k, i)};
      total[k] += sol.solve_seconds;
    }
  std::array<double, 3> mean{};
  for (size_t k = 0; k < 3; ++k) mean[k] = 1000.0 * total[k] / solves;
  bool ordered = mean[0] < mean[1] && mean[1] < mean[2];
  bool halved = 2 * nvar_staged < nvar_long;
  return {ordered && halved,
          strf("mean solve %.2f / %.2f / %.2f ms (short / staged / long) over "
               "%d each; %d vs %d decision vars",
               mean[0], mean[1], mean[2], solves, nvar_staged, nvar_long)};
}

Check criterion_8() {
  netmpc::CartPoleParams params;
  fixtures::CartSetup base = fixtures::cartpole_linear(0.1);
  fixtures::CartSetup slow = fixtures::cartpole_linear(0.2);
  netmpc::TrackingOcp ocp_base(base.model, {30}, base.Q, base.R, base.T, 0.99,
                               g_cache);
  netmpc::TrackingOcp ocp_slow(slow.model, {15}, slow.Q, slow.R, slow.T, 0.99,
                               g_cache);
  // Identical truth integration step, so only the control period differs.
  netmpc::Plant plant_base = netmpc::Plant::cartpole(params, 0.1, 8);
  netmpc::Plant plant_slow = netmpc::Plant::cartpole(params, 0.2, 16);
  netmpc::DenseIpmBackend backend;
  const Eigen::Vector4d x0(0.0, 0.12, 0.0, 0.0);
  const Eigen::Vector4d r(0.5, 0.0, 0.0, 0.0);
  auto run = [&](const netmpc::TrackingOcp& ocp, const netmpc::Plant& plant,
                 long T, int n) {
    netmpc::EpisodeOptions opt;
    opt.T = T;
    opt.x0 = x0;
    opt.ref = netmpc::ReferenceSchedule::constant(r);
    opt.n = n;
    opt.uplink = netmpc::ChannelSpec::bernoulli(0.0);
    opt.downlink = netmpc::ChannelSpec::bernoulli(0.0);
    opt.seed = 99;
    return netmpc::run_episode(ocp, backend, plant, opt);
  };
  netmpc::EpisodeResult a = run(ocp_base, plant_base, 300, 1);
  netmpc::EpisodeResult b = run(ocp_base, plant_base, 300, 2);
  netmpc::EpisodeResult c = run(ocp_slow, plant_slow, 150, 1);
  for (const auto* res : {&a, &b, &c})
    if (!res->metrics.success)
      return {false, "episode failed: " + res->metrics.fail_reason};
  double rate_ratio = b.metrics.mse / a.metrics.mse;
  double period_ratio = c.metrics.mse / a.metrics.mse;
  bool pass =
      rate_ratio <= 1.0 + kMseBand && period_ratio > 1.0 + kMseBand;
  return {pass, strf("mse %.4g baseline, %+.1f%% at halved send rate, "
                     "%+.1f%% at doubled period (band %.0f%%)",
                     a.metrics.mse, 100.0 * (rate_ratio - 1.0),
                     100.0 * (period_ratio - 1.0), 100.0 * kMseBand)};
}

Check criterion_9() {
  fixtures::DiSetup di = fixtures::double_integrator();
  netmpc::Plant plant = netmpc::Plant::linear(di.model.A, di.model.B);
  netmpc::DenseIpmBackend backend;
  auto lossless = [&](const netmpc::TrackingOcp& ocp, long T, int n) {
    netmpc::EpisodeOptions opt;
    opt.T = T;
    opt.x0 = Eigen::Vector2d(1.0, 0.0);
    opt.ref = netmpc::ReferenceSchedule::constant(Eigen::Vector2d(2.0, 0.0));
    opt.n = n;
    opt.uplink = netmpc::ChannelSpec::bernoulli(0.0);
    opt.downlink = netmpc::ChannelSpec::bernoulli(0.0);
    opt.seed = 5;
    return netmpc::run_episode(ocp, backend, plant, opt);
  };

  netmpc::TrackingOcp staged(di.model, {3, 2, 2}, di.Q, di.R, di.T, 0.99,
                             g_cache);
  std::array<long, 3> down{}, up{};
  std::array<double, 3> pps{};
  for (int n = 1; n <= 3; ++n) {
    netmpc::EpisodeResult res = lossless(staged, 60, n);
    if (!res.metrics.success)
      return {false, strf("n=%d episode failed: %s", n,
                          res.metrics.fail_reason.c_str())};
    down[static_cast<size_t>(n - 1)] = res.metrics.downlink_sends;
    up[static_cast<size_t>(n - 1)] = res.metrics.uplink_sends;
    pps[static_cast<size_t>(n - 1)] = res.metrics.packets_per_s_down;
  }
  bool counts_ok = down[0] == 60 && up[0] == 60;
  double rate_err = 0.0;
  for (int n = 1; n <= 3; ++n) {
    counts_ok = counts_ok && down[static_cast<size_t>(n - 1)] * n == down[0] &&
                up[static_cast<size_t>(n - 1)] * n == up[0];
    rate_err = std::max(
        rate_err,
        std::abs(pps[static_cast<size_t>(n - 1)] * n - pps[0]) / pps[0]);
  }

  // Packet size follows the shipped slice length, not the number of
  // optimization steps behind it.
  netmpc::TrackingOcp staged_long(di.model, {3, 6}, di.Q, di.R, di.T, 0.99,
                                  g_cache);
  netmpc::TrackingOcp uniform(di.model, {10}, di.Q, di.R, di.T, 0.99,
                              g_cache);
  auto packet_bytes = [&](const netmpc::TrackingOcp& ocp) {
    netmpc::EpisodeResult res = lossless(ocp, 12, 1);
    long m = 0;
    for (const auto& row : res.trace.rows) m = std::max(m, row.bytes_down);
    return m;
  };
  long b_staged = packet_bytes(staged);
  long b_staged_long = packet_bytes(staged_long);
  long b_uniform = packet_bytes(uniform);
  bool payload_ok = b_staged == b_staged_long && b_uniform > b_staged;
  bool pass = counts_ok && rate_err <= 1e-12 && payload_ok;
  return {pass,
          strf("downlink sends %ld/%ld/%ld for n=1/2/3 (rate err %.1e); "
               "%ld B packets for both 3-step slices (7 and 9 plan steps) vs "
               "%ld B for a 10-step slice",
               down[0], down[1], down[2], rate_err, b_staged, b_uniform)};
}

struct CliRun {
  int exit_code = -1;
  std::string output;
};

CliRun run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(NETMPC_CLI_PATH) + " " + args + " > " +
                    log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in.good()) return "";
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Check criterion_10() {
  fs::path work = fs::temp_directory_path() / "netmpc_acceptance_rerun";
  fs::remove_all(work);
  fs::create_directories(work);

  nlohmann::json j;
  j["model"] = {{"kind", "double_integrator"},
                {"Ts", 0.1},
                {"x_box", {{"lo", {-5.0, -5.0}}, {"hi", {5.0, 5.0}}}},
                {"u_box", {{"lo", {-1.0}}, {"hi", {1.0}}}}};
  j["horizon"] = {3, 2, 2};
  j["costs"] = {{"Q", {1.0, 1.0}}, {"R", {0.1}}, {"T", {100.0, 100.0}}};
  j["lambda"] = 0.99;
  j["n"] = 2;
  j["episode"] = {{"T", 100}, {"x0", {1.0, 0.0}}, {"reference", {3.0, 0.0}}};
  j["channels"] = {{"uplink", {{"kind", "bernoulli"}, {"loss", 0.25}}},
                   {"downlink", {{"kind", "bernoulli"}, {"loss", 0.25}}},
                   {"guard_limit", 4}};
  j["seeds"] = {11, 12};
  j["output_dir"] = (work / "a").string();
  fs::path cfg = work / "di.json";
  std::ofstream(cfg) << j.dump(2);

  CliRun r1 = run_cli("run --config " + cfg.string(), work / "log1.txt");
  CliRun r2 = run_cli("run --config " + cfg.string() + " --out " +
                          (work / "b").string(),
                      work / "log2.txt");
  if (r1.exit_code != 0 || r2.exit_code != 0)
    return {false, strf("cli exits %d / %d", r1.exit_code, r2.exit_code)};
  long compared = 0;
  for (const char* f :
       {"trace_seed11.csv", "trace_seed12.csv", "uplink_bits_seed11.txt",
        "downlink_bits_seed12.txt"}) {
    std::string sa = slurp(work / "a" / f);
    if (sa.empty() || sa != slurp(work / "b" / f))
      return {false, strf("%s differs between reruns", f)};
    ++compared;
  }

  std::string cart = (fs::path(NETMPC_CONFIG_DIR) / "cartpole.json").string();
  CliRun r3 = run_cli("run --config " + cart + " --out " +
                          (work / "c1").string() + " --cache " + g_cache,
                      work / "log3.txt");
  CliRun r4 = run_cli("run --config " + cart + " --out " +
                          (work / "c2").string() + " --cache " + g_cache,
                      work / "log4.txt");
  if (r3.exit_code != 0 || r4.exit_code != 0)
    return {false, strf("nonlinear cli exits %d / %d", r3.exit_code,
                        r4.exit_code)};
  std::string tc = slurp(work / "c1" / "trace.csv");
  if (tc.empty() || tc != slurp(work / "c2" / "trace.csv"))
    return {false, "nonlinear trace differs between reruns"};
  ++compared;
  return {true, strf("2 configs rerun, %ld files byte-identical "
                     "(2 seeded linear runs + 1 nonlinear)",
                     compared)};
}

using CheckFn = Check (*)();

struct Criterion {
  const char* slug;
  CheckFn fn;
};

const Criterion kCriteria[] = {
    {"staged-uniform-equivalence", criterion_1},
    {"lossy-feasibility", criterion_2},
    {"certified-prediction", criterion_3},
    {"lossy-tracking", criterion_4},
    {"tail-set-oracle", criterion_5},
    {"terminal-set-invariance", criterion_6},
    {"solve-time-scaling", criterion_7},
    {"rate-vs-period", criterion_8},
    {"bandwidth-accounting", criterion_9},
    {"rerun-determinism", criterion_10},
};

int default_jobs() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 4 : static_cast<int>(std::min(hw, 16u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the networked MPC laboratory"};
  int criterion = 0;
  g_jobs = default_jobs();
  app.add_option("--criterion", criterion,
                 "run one criterion by number (default: all)")
      ->check(CLI::Range(0, 10));
  app.add_option("--jobs", g_jobs, "worker threads for episode batches");
  app.add_option("--cache-dir", g_cache, "terminal set cache directory");
  CLI11_PARSE(app, argc, argv);
  if (g_cache.empty())
    g_cache = (fs::temp_directory_path() / "netmpc_acceptance_cache").string();
  fs::create_directories(g_cache);

  bool all_pass = true;
  for (int i = 1; i <= 10; ++i) {
    if (criterion != 0 && criterion != i) continue;
    Check c;
    try {
      c = kCriteria[i - 1].fn();
    } catch (const std::exception& e) {
      c = {false, strf("unhandled exception: %s", e.what())};
    }
    std::printf("criterion %d [%s]: %s (%s)\n", i, kCriteria[i - 1].slug,
                c.pass ? "PASS" : "FAIL", c.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}
