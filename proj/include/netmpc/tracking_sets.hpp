#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netmpc/lti_model.hpp"
#include "netmpc/multi_horizon.hpp"
#include "netmpc/polytope.hpp"

namespace netmpc {

// Autonomous extended dynamics on w = (x, theta): the state runs under the
// feedback u = K(xbar - x) + ubar toward the steady pair (xbar, ubar) =
// M theta, and theta is constant.
Eigen::MatrixXd extended_system(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& K,
                                const SteadyStateBasis& basis);

// Pointwise constraint set W on (x, theta): x in Xset and the feedback input
// K(Mx theta - x) + Mu theta in U. Throws EmptySetError when empty.
Polytope build_w(const Polytope& Xset, const Polytope& Uset,
                 const Eigen::MatrixXd& K, const SteadyStateBasis& basis);

struct AdmissibleSet {
  Polytope set;
  int kstar = -1;       // determination index of the fixed-point iteration
  double lambda = 1.0;  // tightening applied to the invariant directions
};

// Maximal constraint-admissible invariant set of w+ = Ae w inside W.
// Rows invariant under Ae are tightened by lambda, and for every other row a
// lambda-tightened copy evaluated at the limit matrix lim Ae^k is appended;
// this makes the iteration finitely determined despite the unit eigenvalues
// of the theta block. Iterates Omega_{k+1} = Omega_k n preimage(W_l, Ae^{k+1})
// until an LP round certifies no change.
AdmissibleSet max_admissible_set(const Eigen::MatrixXd& Ae, const Polytope& W,
                                 double lambda = 0.99, int k_max = 500);

// Backward-recursed feasible sets of the coarse tail problem. sets[j] is the
// set of states at step h1 + j from which the remaining coarse steps can be
// completed inside X and U; sets.front() is X0_2 itself and sets.back() = X.
struct TailFeasibleSets {
  std::vector<Polytope> sets;
  const Polytope& x02() const { return sets.front(); }
};

TailFeasibleSets feasible_set_x02(const LtiModel& model,
                                  const HorizonLayout& layout);

// Terminal set for the multi-horizon tracking OCP: the admissible invariant
// set built from W with the state constraint tightened from X to X0_2.
AdmissibleSet build_oinf_mh(const LtiModel& model, const TailFeasibleSets& tail,
                            const Eigen::MatrixXd& K,
                            const SteadyStateBasis& basis,
                            double lambda = 0.99);

// Everything the OCP needs from the offline set construction.
struct TerminalSets {
  AdmissibleSet oinf;
  TailFeasibleSets tail;
};

// Content hash for disk caching: model matrices and constraints, horizon,
// gain, basis, lambda.
std::uint64_t sets_cache_key(const LtiModel& model,
                             const HorizonLayout& layout,
                             const Eigen::MatrixXd& K,
                             const SteadyStateBasis& basis, double lambda);

// JSON round-trip of the offline sets with a metadata header. load returns
// nothing on a missing file or a key mismatch; store writes atomically.
std::optional<TerminalSets> load_terminal_sets(const std::string& path,
                                               std::uint64_t key);
void store_terminal_sets(const std::string& path, std::uint64_t key,
                         const TerminalSets& s);

}  // namespace netmpc
