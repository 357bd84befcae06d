#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace netmpc {

enum class QpStatus { Optimal, Infeasible, Failed };

// min 0.5 z'Hz + g'z  s.t.  Aeq z = beq,  G z <= h.  H symmetric PSD.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;

  int nvar() const { return static_cast<int>(H.rows()); }
  // Plain-text sparse triplet dump (row col value per nonzero, sections for
  // each block) for offline inspection.
  void dump(const std::string& path) const;
};

struct QpSolution {
  QpStatus status = QpStatus::Failed;
  Eigen::VectorXd z;
  double objective = 0.0;  // 0.5 z'Hz + g'z
  int iterations = 0;
};

// Stable solver contract; the closed loop and tests depend only on this.
class QpBackend {
public:
  virtual ~QpBackend() = default;
  virtual QpSolution solve(const QpProblem& qp,
                           const std::optional<Eigen::VectorXd>& warm =
                               std::nullopt) const = 0;
};

// Dense Mehrotra predictor-corrector interior-point method. Equality-only
// problems are solved by a direct KKT factorization. Non-convergence is
// classified with an LP feasibility certificate, so Infeasible is never a
// guess.
class DenseIpmBackend : public QpBackend {
public:
  explicit DenseIpmBackend(double tol = 1e-10, int max_iter = 100)
      : tol_(tol), max_iter_(max_iter) {}
  QpSolution solve(const QpProblem& qp,
                   const std::optional<Eigen::VectorXd>& warm =
                       std::nullopt) const override;

private:
  double tol_;
  int max_iter_;
};

}  // namespace netmpc
