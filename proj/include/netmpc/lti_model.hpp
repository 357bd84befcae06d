#pragma once

#include <Eigen/Dense>

#include "netmpc/polytope.hpp"

namespace netmpc {

// Discrete-time x+ = A x + B u with box-or-polytope constraints x in X,
// u in U. Ts is the base sampling period the matrices were discretized at.
struct LtiModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Polytope X;
  Polytope U;
  double Ts = 1.0;

  int nx() const { return static_cast<int>(A.rows()); }
  int nu() const { return static_cast<int>(B.cols()); }

  // Dimension checks, nonempty constraint sets with usable interior, and a
  // PBH stabilizability test (every mode with |lambda| >= 1 is controllable).
  void validate() const;
};

// Exact zero-order-hold discretization of (Ac, Bc) at period Ts via the
// matrix exponential of the augmented system.
void zoh_discretize(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& Bc,
                    double Ts, Eigen::MatrixXd* A, Eigen::MatrixXd* B);

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

// Orthonormal basis of the steady-state subspace {(x, u): (A - I)x + Bu = 0},
// partitioned into state and input blocks. theta coordinates parametrize
// every steady pair as (x, u) = (Mx theta, Mu theta).
struct SteadyStateBasis {
  Eigen::MatrixXd Mx;  // nx x ntheta
  Eigen::MatrixXd Mu;  // nu x ntheta
  int ntheta = 0;

  Eigen::MatrixXd M() const {
    Eigen::MatrixXd m(Mx.rows() + Mu.rows(), ntheta);
    m << Mx, Mu;
    return m;
  }
};

SteadyStateBasis steady_state_basis(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B);

}  // namespace netmpc
