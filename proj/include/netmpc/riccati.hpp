#pragma once

#include <Eigen/Dense>

namespace netmpc {

// Stabilizing solution of P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q by the
// structure-preserving doubling iteration.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

// P solving M'PM - P + S = 0 for Schur-stable M (Kronecker linear solve).
Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& M,
                                  const Eigen::MatrixXd& S);

// Terminal ingredients for the tracking OCP: K is the infinite-horizon LQR
// gain (convention u = -K x, so the closed loop is A - B K), and P solves the
// closed-loop Lyapunov equation (A-BK)'P(A-BK) - P + Q + K'RK = 0.
struct TerminalPair {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
};

TerminalPair terminal_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

}  // namespace netmpc
