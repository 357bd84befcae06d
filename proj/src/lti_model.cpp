#include "netmpc/lti_model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

#include "netmpc/errors.hpp"

namespace netmpc {

void LtiModel::validate() const {
  if (A.rows() != A.cols()) throw ConfigError("model: A must be square");
  if (B.rows() != A.rows()) throw ConfigError("model: B row count mismatch");
  if (B.cols() < 1) throw ConfigError("model: no inputs");
  if (X.dim() != nx()) throw ConfigError("model: X dimension mismatch");
  if (U.dim() != nu()) throw ConfigError("model: U dimension mismatch");
  if (Ts <= 0.0) throw ConfigError("model: Ts must be positive");
  if (X.chebyshev_center().degenerate)
    throw ConfigError("model: X is empty or has no interior");
  if (U.chebyshev_center().degenerate)
    throw ConfigError("model: U is empty or has no interior");
  if (!is_stabilizable(A, B))
    throw ConfigError("model: (A, B) is not stabilizable");
}

void zoh_discretize(const Eigen::MatrixXd& Ac, const Eigen::MatrixXd& Bc,
                    double Ts, Eigen::MatrixXd* A, Eigen::MatrixXd* B) {
  const int n = static_cast<int>(Ac.rows());
  const int m = static_cast<int>(Bc.cols());
  if (Ac.cols() != n || Bc.rows() != n)
    throw ConfigError("zoh: dimension mismatch");
  if (Ts <= 0.0) throw ConfigError("zoh: Ts must be positive");
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = Ac * Ts;
  aug.topRightCorner(n, m) = Bc * Ts;
  Eigen::MatrixXd e = aug.exp();
  *A = e.topLeftCorner(n, n);
  *B = e.topRightCorner(n, m);
}

bool is_stabilizable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  Eigen::ComplexEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw SolverError("stabilizability: eig failed");
  const double scale = std::max(1.0, A.norm());
  for (int i = 0; i < n; ++i) {
    std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam) < 1.0 - 1e-9) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh << A.cast<std::complex<double>>() -
               lam * Eigen::MatrixXcd::Identity(n, n),
        B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()(n - 1) <= 1e-10 * scale) return false;
  }
  return true;
}

SteadyStateBasis steady_state_basis(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  Eigen::MatrixXd pencil(n, n + m);
  pencil << A - Eigen::MatrixXd::Identity(n, n), B;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(pencil, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double cut = std::max(1e-10 * smax, 1e-14);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) {
      ++rank;
      // A singular value sitting inside the decision band means the rank, and
      // with it the steady-state dimension, is numerically ambiguous.
      if (sv(i) < 10.0 * cut) {
        std::ostringstream os;
        os << "steady_state_basis: ambiguous rank, singular values:";
        for (int k = 0; k < sv.size(); ++k) os << ' ' << sv(k);
        throw SolverError(os.str());
      }
    }
  }
  SteadyStateBasis out;
  out.ntheta = n + m - rank;
  Eigen::MatrixXd M = svd.matrixV().rightCols(out.ntheta);
  out.Mx = M.topRows(n);
  out.Mu = M.bottomRows(m);
  return out;
}

}  // namespace netmpc
