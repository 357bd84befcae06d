#include "netmpc/riccati.hpp"

#include <cmath>

#include "netmpc/errors.hpp"

namespace netmpc {

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXd Ak = A;
  Eigen::MatrixXd Gk = B * R.llt().solve(B.transpose());
  Eigen::MatrixXd Hk = Q;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(I + Gk * Hk);
    Eigen::MatrixXd W = lu.solve(Ak);          // (I + G H)^-1 A
    Eigen::MatrixXd V = lu.solve(Gk);          // (I + G H)^-1 G
    Eigen::MatrixXd Hn = Hk + Ak.transpose() * Hk * W;
    Eigen::MatrixXd Gn = Gk + Ak * V * Ak.transpose();
    Eigen::MatrixXd An = Ak * W;
    double delta = (Hn - Hk).norm();
    Hk = Hn;
    Gk = Gn;
    Ak = An;
    if (delta <= 1e-14 * std::max(1.0, Hk.norm())) {
      // Symmetrize away the iteration's drift.
      return 0.5 * (Hk + Hk.transpose());
    }
  }
  throw SolverError("dare: doubling iteration did not converge");
}

Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& M,
                                  const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || S.rows() != n || S.cols() != n)
    throw ConfigError("lyapunov: dimension mismatch");
  Eigen::VectorXcd ev = M.eigenvalues();
  for (int i = 0; i < n; ++i)
    if (std::abs(ev(i)) >= 1.0 - 1e-12)
      throw SolverError("lyapunov: M is not Schur stable");
  const int n2 = n * n;
  Eigen::MatrixXd Mt = M.transpose();
  Eigen::MatrixXd kron(n2, n2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      kron.block(i * n, j * n, n, n) = Mt(i, j) * Mt;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n2, n2) - kron;
  Eigen::VectorXd vecS(n2);
  for (int j = 0; j < n; ++j) vecS.segment(j * n, n) = S.col(j);
  Eigen::VectorXd vecP = lhs.partialPivLu().solve(vecS);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j) P.col(j) = vecP.segment(j * n, n);
  return 0.5 * (P + P.transpose());
}

TerminalPair terminal_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  TerminalPair out;
  Eigen::MatrixXd Pd = solve_dare(A, B, Q, R);
  out.K = (R + B.transpose() * Pd * B)
              .llt()
              .solve(B.transpose() * Pd * A);
  Eigen::MatrixXd Acl = A - B * out.K;
  out.P = discrete_lyapunov(Acl, Q + out.K.transpose() * R * out.K);
  return out;
}

}  // namespace netmpc
