#pragma once

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "netmpc/lti_model.hpp"
#include "netmpc/multi_horizon.hpp"
#include "netmpc/qp.hpp"
#include "netmpc/riccati.hpp"
#include "netmpc/tracking_sets.hpp"

namespace netmpc {

// Decision vector ordering: [x_0 .. x_N, u_0 .. u_{N-1}, theta].
struct OcpLayout {
  int nx = 0;
  int nu = 0;
  int ntheta = 0;
  int N = 0;
  int x_off(int k) const { return k * nx; }
  int u_off(int k) const { return (N + 1) * nx + k * nu; }
  int theta_off() const { return (N + 1) * nx + N * nu; }
  int nvar() const { return (N + 1) * nx + N * nu + ntheta; }
};

struct OcpSolution {
  QpStatus status = QpStatus::Failed;
  Eigen::MatrixXd x;  // (N+1) rows, one predicted state per row
  Eigen::MatrixXd u;  // N rows, one input per decision step
  Eigen::VectorXd theta;
  Eigen::VectorXd xbar;  // steady state the plan converges to
  Eigen::VectorXd ubar;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double solve_seconds = 0.0;
  int iterations = 0;
  Eigen::VectorXd z;  // raw decision vector, reusable as a warm start
};

// Tracking optimal control problem over a coarsened input grid: the first
// h1 decision steps advance one sample each, later steps hold their input
// for as many samples as their granularity. The artificial steady target
// (xbar, ubar) is a decision variable; the offset term pulls it toward r.
class TrackingOcp {
public:
  TrackingOcp(LtiModel model, const std::vector<int>& horizon,
              const Eigen::MatrixXd& q_cost, const Eigen::MatrixXd& r_cost,
              const Eigen::MatrixXd& t_cost, double lambda = 0.99,
              const std::string& cache_dir = "");

  const LtiModel& model() const { return model_; }
  const HorizonLayout& horizon() const { return layout_; }
  const TerminalPair& terminal() const { return term_; }
  const SteadyStateBasis& target_basis() const { return basis_; }
  const AdmissibleSet& coupling_set() const { return oinf_; }
  const TailFeasibleSets& tail_sets() const { return tail_; }
  const OcpLayout& vars() const { return vars_; }
  const Eigen::MatrixXd& q_cost() const { return q_; }
  const Eigen::MatrixXd& r_cost() const { return r_; }
  const Eigen::MatrixXd& t_cost() const { return t_; }

  bool state_admissible(const Eigen::VectorXd& x0) const;

  // Fully instantiated QP for initial state x0 and reference r.
  QpProblem instantiate(const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& r) const;

  // Pre-checks x0, runs the backend (timed), validates and unpacks. An x0
  // outside the state set short-circuits to Infeasible without a QP solve.
  OcpSolution solve(const QpBackend& backend, const Eigen::VectorXd& x0,
                    const Eigen::VectorXd& r,
                    const std::optional<Eigen::VectorXd>& warm =
                        std::nullopt) const;

  OcpSolution extract(const Eigen::VectorXd& x0, const Eigen::VectorXd& r,
                      const QpSolution& qps) const;

private:
  void assemble();

  LtiModel model_;
  HorizonLayout layout_;
  Eigen::MatrixXd q_, r_, t_;
  TerminalPair term_;
  SteadyStateBasis basis_;
  TailFeasibleSets tail_;
  AdmissibleSet oinf_;
  std::map<int, StageSystem> stages_;
  OcpLayout vars_;

  Eigen::MatrixXd hqp_;   // constant Hessian
  Eigen::MatrixXd aeq_;   // x_0 pin rows then dynamics rows
  Eigen::MatrixXd g_;     // inequality rows, constant
  Eigen::VectorXd h_;
};

// Worst violation of any state, input, or coupling row over the plan.
double max_constraint_violation(const TrackingOcp& ocp, const OcpSolution& s);

}  // namespace netmpc
