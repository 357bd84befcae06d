#include "netmpc/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "netmpc/errors.hpp"
#include "netmpc/lp.hpp"

namespace netmpc {

namespace {

void dump_matrix(std::ofstream& out, const char* name,
                 const Eigen::MatrixXd& m) {
  out << "# " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i, j, m(i, j));
        out << buf;
      }
    }
  }
}

void dump_vector(std::ofstream& out, const char* name,
                 const Eigen::VectorXd& v) {
  out << "# " << name << " " << v.size() << "\n";
  for (int i = 0; i < v.size(); ++i) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%d %.17g\n", i, v(i));
    out << buf;
  }
}

// Largest alpha in (0, 1] with v + alpha*dv >= (1 - eta) * v, eta < 1.
double step_length(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                   double eta) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -eta * v(i) / dv(i));
  }
  return alpha;
}

// Absolute KKT bound under which a stalled iterate still counts as solved.
constexpr double kRescueKkt = 1e-7;

// Distinguishes genuinely infeasible constraints from an IPM breakdown.
QpStatus classify_failure(const QpProblem& qp) {
  LpProblem lp;
  lp.G = qp.G;
  lp.h = qp.h;
  lp.A = qp.Aeq;
  lp.b = qp.beq;
  lp.c = Eigen::VectorXd::Zero(qp.nvar());
  LpResult r = solve_lp(lp);
  if (r.status == LpStatus::Infeasible) return QpStatus::Infeasible;
  return QpStatus::Failed;
}

QpSolution solve_equality_only(const QpProblem& qp) {
  const int n = qp.nvar();
  const int p = static_cast<int>(qp.Aeq.rows());
  Eigen::MatrixXd kkt(n + p, n + p);
  kkt.setZero();
  kkt.topLeftCorner(n, n) = qp.H;
  kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
  if (p > 0) {
    kkt.topRightCorner(n, p) = qp.Aeq.transpose();
    kkt.bottomLeftCorner(p, n) = qp.Aeq;
  }
  Eigen::VectorXd rhs(n + p);
  rhs.head(n) = -qp.g;
  rhs.tail(p) = qp.beq;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  QpSolution sol;
  if (!lu.isInvertible()) {
    lu.setThreshold(1e-10);
    Eigen::VectorXd zy = lu.solve(rhs);
    if (!zy.allFinite() || (kkt * zy - rhs).cwiseAbs().maxCoeff() >
                               1e-6 * (1.0 + rhs.cwiseAbs().maxCoeff())) {
      sol.status = classify_failure(qp);
      return sol;
    }
    sol.z = zy.head(n);
  } else {
    sol.z = lu.solve(rhs).head(n);
  }
  if (p > 0 && (qp.Aeq * sol.z - qp.beq).cwiseAbs().maxCoeff() >
                   1e-6 * (1.0 + qp.beq.cwiseAbs().maxCoeff())) {
    sol.status = classify_failure(qp);
    return sol;
  }
  sol.status = QpStatus::Optimal;
  sol.objective = 0.5 * sol.z.dot(qp.H * sol.z) + qp.g.dot(sol.z);
  sol.iterations = 1;
  return sol;
}

// One Mehrotra run from the given primal start. Failed is left unclassified
// so the caller can retry from another start before judging the problem.
QpSolution run_mehrotra(const QpProblem& qp, const Eigen::VectorXd& z0,
                        double tol, int max_iter) {
  const int n = qp.nvar();
  const int p = static_cast<int>(qp.Aeq.rows());
  const int q = static_cast<int>(qp.G.rows());

  Eigen::VectorXd z = z0;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd s(q), lam(q);
  {
    Eigen::VectorXd slack = qp.h - qp.G * z;
    for (int i = 0; i < q; ++i) s(i) = std::max(1.0, slack(i));
    lam.setOnes();
  }

  const double data_scale =
      1.0 + std::max({qp.g.size() ? qp.g.cwiseAbs().maxCoeff() : 0.0,
                      qp.h.size() ? qp.h.cwiseAbs().maxCoeff() : 0.0,
                      p ? qp.beq.cwiseAbs().maxCoeff() : 0.0});
  const double eps = tol_ * data_scale;
  // Static regularization sized by the objective, not by the barrier
  // weights: those legitimately explode as constraints go active and must
  // not leak into the step bias.
  const double base_delta =
      1e-11 * (1.0 + qp.H.diagonal().cwiseAbs().maxCoeff());

  QpSolution sol;
  Eigen::VectorXd best_z;
  double best_resid = std::numeric_limits<double>::infinity();
  double best_mu = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter_; ++iter) {
    Eigen::VectorXd rd = qp.H * z + qp.g + qp.G.transpose() * lam;
    if (p > 0) rd += qp.Aeq.transpose() * y;
    Eigen::VectorXd rp =
        p > 0 ? Eigen::VectorXd(qp.Aeq * z - qp.beq) : Eigen::VectorXd(0);
    Eigen::VectorXd ri = qp.G * z + s - qp.h;
    double mu = s.dot(lam) / q;

    double resid = std::max(rd.cwiseAbs().maxCoeff(),
                            ri.cwiseAbs().maxCoeff());
    if (p > 0) resid = std::max(resid, rp.cwiseAbs().maxCoeff());
    if (resid <= eps && mu <= std::max(tol_, eps)) {
      sol.status = QpStatus::Optimal;
      sol.z = z;
      sol.objective = 0.5 * z.dot(qp.H * z) + qp.g.dot(z);
      sol.iterations = iter;
      return sol;
    }
    if (std::max(resid, mu) < std::max(best_resid, best_mu)) {
      best_resid = resid;
      best_mu = mu;
      best_z = z;
    }
    // Stop once the iterate stops improving: either complementarity has
    // collapsed past what the residuals achieved, or the iterate blew up.
    if (mu < 1e-16 * data_scale && resid > eps) break;
    if (resid > 1e14 * data_scale) break;

    Eigen::VectorXd d = lam.cwiseQuotient(s);
    Eigen::MatrixXd m = qp.H + qp.G.transpose() * d.asDiagonal() * qp.G;
    double delta = base_delta;
    Eigen::LLT<Eigen::MatrixXd> mf;
    bool factored = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd mr = m;
      mr.diagonal().array() += delta;
      mf.compute(mr);
      if (mf.info() == Eigen::Success) {
        factored = true;
        break;
      }
      delta *= 100.0;
    }
    if (!factored) break;

    Eigen::LLT<Eigen::MatrixXd> scf;
    Eigen::MatrixXd minv_at;
    if (p > 0) {
      minv_at = mf.solve(qp.Aeq.transpose());
      Eigen::MatrixXd sc = qp.Aeq * minv_at;
      sc.diagonal().array() +=
          1e-13 * sc.diagonal().cwiseAbs().maxCoeff() + 1e-300;
      scf.compute(sc);
      if (scf.info() != Eigen::Success) break;
    }

    // Applies the factored, shifted KKT operator: m*dz + Aeq'*dy = r1,
    // Aeq*dz = r2.
    auto kkt_apply = [&](const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                         Eigen::VectorXd* dz, Eigen::VectorXd* dy) {
      if (p > 0) {
        Eigen::VectorXd t = mf.solve(r1);
        *dy = scf.solve(qp.Aeq * t - r2);
        *dz = t - minv_at * (*dy);
      } else {
        *dz = mf.solve(r1);
      }
    };

    // Refinement solves against the unshifted matrix with the shifted
    // factorization as preconditioner, so neither the shift nor the late
    // conditioning of m leaks into the step.
    auto kkt_solve = [&](const Eigen::VectorXd& r1, const Eigen::VectorXd& r2,
                         Eigen::VectorXd* dz, Eigen::VectorXd* dy) {
      kkt_apply(r1, r2, dz, dy);
      double rhs_scale =
          1.0 + std::max(r1.cwiseAbs().maxCoeff(),
                         r2.size() > 0 ? r2.cwiseAbs().maxCoeff() : 0.0);
      double prev_err = std::numeric_limits<double>::infinity();
      for (int pass = 0; pass < 3; ++pass) {
        Eigen::VectorXd e1 = r1 - m * (*dz);
        if (p > 0) e1 -= qp.Aeq.transpose() * (*dy);
        Eigen::VectorXd e2 =
            p > 0 ? Eigen::VectorXd(r2 - qp.Aeq * (*dz)) : Eigen::VectorXd(0);
        double err = e1.cwiseAbs().maxCoeff();
        if (e2.size() > 0) err = std::max(err, e2.cwiseAbs().maxCoeff());
        if (err <= 1e-14 * rhs_scale || err >= prev_err) break;
        prev_err = err;
        Eigen::VectorXd cz, cy;
        kkt_apply(e1, e2, &cz, &cy);
        if (!cz.allFinite() || (p > 0 && !cy.allFinite())) break;
        *dz += cz;
        if (p > 0) *dy += cy;
      }
    };

    // rc is the complementarity target; solved twice with one factorization.
    auto solve_newton = [&](const Eigen::VectorXd& rc, Eigen::VectorXd* dz,
                            Eigen::VectorXd* dy, Eigen::VectorXd* ds,
                            Eigen::VectorXd* dl) {
      Eigen::VectorXd rz =
          -rd + qp.G.transpose() * (rc.cwiseQuotient(s) - d.cwiseProduct(ri));
      kkt_solve(rz, p > 0 ? Eigen::VectorXd(-rp) : Eigen::VectorXd(0), dz, dy);
      *ds = -ri - qp.G * (*dz);
      *dl = -(rc + lam.cwiseProduct(*ds)).cwiseQuotient(s);
    };

    Eigen::VectorXd dz, dy, ds, dl;
    solve_newton(s.cwiseProduct(lam), &dz, &dy, &ds, &dl);
    double ap = step_length(s, ds, 1.0);
    double ad = step_length(lam, dl, 1.0);
    double mu_aff = (s + ap * ds).dot(lam + ad * dl) / q;
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    if (!std::isfinite(sigma)) sigma = 0.0;
    sigma = std::min(std::max(sigma, 0.0), 1.0);

    Eigen::VectorXd rc = s.cwiseProduct(lam) + ds.cwiseProduct(dl);
    rc.array() -= sigma * mu;
    solve_newton(rc, &dz, &dy, &ds, &dl);
    ap = step_length(s, ds, 0.99);
    ad = step_length(lam, dl, 0.99);

    z += ap * dz;
    s += ap * ds;
    lam += ad * dl;
    if (p > 0) y += ad * dy;
    if (!z.allFinite() || !s.allFinite() || !lam.allFinite()) break;
    sol.iterations = iter + 1;
  }

  // A near-optimal iterate stranded by numerical breakdown beats a failure
  // report; the absolute bound keeps the rescue well inside every consumer's
  // feasibility margin.
  if (best_z.size() > 0 && best_resid <= std::max(eps, kRescueKkt) &&
      best_mu <= std::max({tol_, eps, kRescueKkt})) {
    sol.status = QpStatus::Optimal;
    sol.z = best_z;
    sol.objective = 0.5 * best_z.dot(qp.H * best_z) + qp.g.dot(best_z);
    return sol;
  }
  sol.status = classify_failure(qp);
  sol.z = Eigen::VectorXd();
  return sol;
}

}  // namespace netmpc
