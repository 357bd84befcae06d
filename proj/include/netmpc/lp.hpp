#pragma once

#include <Eigen/Dense>
#include <optional>

namespace netmpc {

enum class LpStatus { Optimal, Infeasible, Unbounded, Error };

// min c'z  s.t.  G z <= h,  A z = b,  z free.
// Either constraint block may be empty (0 rows, matching column count).
struct LpProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

struct LpResult {
  LpStatus status = LpStatus::Error;
  Eigen::VectorXd z;
  double objective = 0.0;
};

// Dense two-phase tableau simplex. Free variables are split z = z+ - z-.
// Dantzig pricing with a Bland's-rule fallback after a stall, so degenerate
// and cycling-prone problems terminate.
LpResult solve_lp(const LpProblem& lp);

// Feasibility of {G z <= h, A z = b} via phase 1 alone.
bool lp_feasible(const LpProblem& lp);

}  // namespace netmpc
