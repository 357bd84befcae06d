#include "netmpc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "netmpc/errors.hpp"

namespace netmpc {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPhase1Tol = 1e-7;

// Classic dense tableau with an explicit objective row. Row operations keep
// the right-hand side nonnegative, so the basis stays primal feasible.
struct Tableau {
  Eigen::MatrixXd t;        // m x (ncols + 1), last column is the RHS
  Eigen::VectorXd obj;      // ncols + 1, last entry is -objective
  std::vector<int> basis;   // basic column per row
  int ncols = 0;

  void pivot(int row, int col) {
    t.row(row) /= t(row, col);
    for (int i = 0; i < t.rows(); ++i) {
      if (i == row) continue;
      double f = t(i, col);
      if (std::abs(f) > 0.0) t.row(i) -= f * t.row(row);
    }
    double f = obj(col);
    if (std::abs(f) > 0.0) obj -= f * t.row(row).transpose();
    basis[static_cast<size_t>(row)] = col;
  }

  double objective() const { return -obj(ncols); }
};

// Runs simplex iterations on the current objective row. `allowed(j)` gates
// entering columns. Returns false when the problem is unbounded below.
bool run_simplex(Tableau& tb, const std::vector<bool>& allowed, long max_iter) {
  long iter = 0;
  long stall = 0;
  double last_obj = tb.objective();
  bool bland = false;
  const int m = static_cast<int>(tb.t.rows());
  while (true) {
    if (++iter > max_iter) throw SolverError("simplex: iteration limit");

    int enter = -1;
    if (!bland) {
      double best = -kCostTol;
      for (int j = 0; j < tb.ncols; ++j) {
        if (!allowed[static_cast<size_t>(j)]) continue;
        if (tb.obj(j) < best) {
          best = tb.obj(j);
          enter = j;
        }
      }
    } else {
      for (int j = 0; j < tb.ncols; ++j) {
        if (!allowed[static_cast<size_t>(j)]) continue;
        if (tb.obj(j) < -kCostTol) {
          enter = j;
          break;
        }
      }
    }
    if (enter < 0) return true;

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double a = tb.t(i, enter);
      if (a <= kPivotTol) continue;
      double ratio = tb.t(i, tb.ncols) / a;
      if (ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 &&
           (leave < 0 || tb.basis[static_cast<size_t>(i)] <
                             tb.basis[static_cast<size_t>(leave)]))) {
        best_ratio = ratio;
        leave = i;
      }
    }
    if (leave < 0) return false;

    tb.pivot(leave, enter);

    double cur = tb.objective();
    if (last_obj - cur < 1e-12) {
      if (++stall > 50) bland = true;
    } else {
      stall = 0;
      last_obj = cur;
    }
  }
}

}  // namespace

LpResult solve_lp(const LpProblem& lp) {
  const int n = static_cast<int>(lp.c.size());
  const int q = static_cast<int>(lp.G.rows());
  const int p = static_cast<int>(lp.A.rows());
  if (q > 0 && lp.G.cols() != n) throw ConfigError("lp: G column mismatch");
  if (p > 0 && lp.A.cols() != n) throw ConfigError("lp: A column mismatch");

  LpResult res;
  if (q == 0 && p == 0) {
    res.status = lp.c.isZero(0.0) ? LpStatus::Optimal : LpStatus::Unbounded;
    res.z = Eigen::VectorXd::Zero(n);
    return res;
  }

  const int m = q + p;
  // Columns: z+ (n), z- (n), slacks (q), artificials (added per row as
  // needed).
  const int nslack = q;
  int nart = 0;
  std::vector<int> art_col_of_row(static_cast<size_t>(m), -1);

  // First pass: sign-normalize rows so RHS >= 0 and decide which rows need an
  // artificial (equalities always; inequalities whose slack got negated).
  Eigen::MatrixXd rows(m, n);
  Eigen::VectorXd rhs(m);
  Eigen::VectorXd slack_sign = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < q; ++i) {
    double s = lp.h(i) < 0 ? -1.0 : 1.0;
    rows.row(i) = s * lp.G.row(i);
    rhs(i) = s * lp.h(i);
    slack_sign(i) = s;
    if (s < 0) art_col_of_row[static_cast<size_t>(i)] = nart++;
  }
  for (int j = 0; j < p; ++j) {
    double s = lp.b(j) < 0 ? -1.0 : 1.0;
    rows.row(q + j) = s * lp.A.row(j);
    rhs(q + j) = s * lp.b(j);
    art_col_of_row[static_cast<size_t>(q + j)] = nart++;
  }

  Tableau tb;
  tb.ncols = 2 * n + nslack + nart;
  tb.t = Eigen::MatrixXd::Zero(m, tb.ncols + 1);
  tb.basis.assign(static_cast<size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    tb.t.block(i, 0, 1, n) = rows.row(i);
    tb.t.block(i, n, 1, n) = -rows.row(i);
    if (i < q) tb.t(i, 2 * n + i) = slack_sign(i);
    int ac = art_col_of_row[static_cast<size_t>(i)];
    if (ac >= 0) {
      tb.t(i, 2 * n + nslack + ac) = 1.0;
      tb.basis[static_cast<size_t>(i)] = 2 * n + nslack + ac;
    } else {
      tb.basis[static_cast<size_t>(i)] = 2 * n + i;
    }
    tb.t(i, tb.ncols) = rhs(i);
  }

  const long max_iter = 2000 + 200L * (m + n);
  std::vector<bool> allowed(static_cast<size_t>(tb.ncols), true);

  // Phase 1: minimize the sum of artificials.
  if (nart > 0) {
    tb.obj = Eigen::VectorXd::Zero(tb.ncols + 1);
    for (int a = 0; a < nart; ++a) tb.obj(2 * n + nslack + a) = 1.0;
    for (int i = 0; i < m; ++i) {
      int bc = tb.basis[static_cast<size_t>(i)];
      if (bc >= 2 * n + nslack) tb.obj -= tb.t.row(i).transpose();
    }
    if (!run_simplex(tb, allowed, max_iter))
      throw SolverError("simplex: phase 1 unbounded");
    if (tb.objective() > kPhase1Tol) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // Pivot basic artificials (at value 0) out, or drop dependent rows.
    std::vector<int> drop;
    for (int i = 0; i < m; ++i) {
      if (tb.basis[static_cast<size_t>(i)] < 2 * n + nslack) continue;
      int piv = -1;
      for (int j = 0; j < 2 * n + nslack; ++j) {
        if (std::abs(tb.t(i, j)) > kPivotTol) {
          piv = j;
          break;
        }
      }
      if (piv >= 0)
        tb.pivot(i, piv);
      else
        drop.push_back(i);
    }
    if (!drop.empty()) {
      Eigen::MatrixXd t2(m - static_cast<int>(drop.size()), tb.ncols + 1);
      std::vector<int> b2;
      int k = 0;
      for (int i = 0; i < m; ++i) {
        if (std::find(drop.begin(), drop.end(), i) != drop.end()) continue;
        t2.row(k++) = tb.t.row(i);
        b2.push_back(tb.basis[static_cast<size_t>(i)]);
      }
      tb.t = t2;
      tb.basis = b2;
    }
    for (int a = 0; a < nart; ++a)
      allowed[static_cast<size_t>(2 * n + nslack + a)] = false;
  }

  // Phase 2: original costs on the split variables.
  tb.obj = Eigen::VectorXd::Zero(tb.ncols + 1);
  tb.obj.segment(0, n) = lp.c;
  tb.obj.segment(n, n) = -lp.c;
  for (size_t i = 0; i < tb.basis.size(); ++i) {
    int bc = tb.basis[i];
    double cb = tb.obj(bc);
    if (cb != 0.0) tb.obj -= cb * tb.t.row(static_cast<int>(i)).transpose();
  }
  if (!run_simplex(tb, allowed, max_iter)) {
    res.status = LpStatus::Unbounded;
    return res;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(tb.ncols);
  for (size_t i = 0; i < tb.basis.size(); ++i)
    w(tb.basis[i]) = tb.t(static_cast<int>(i), tb.ncols);
  res.z = w.segment(0, n) - w.segment(n, n);
  res.objective = lp.c.dot(res.z);
  res.status = LpStatus::Optimal;
  return res;
}

bool lp_feasible(const LpProblem& lp) {
  LpProblem f = lp;
  f.c = Eigen::VectorXd::Zero(lp.G.cols() > 0 ? lp.G.cols() : lp.A.cols());
  LpResult r = solve_lp(f);
  if (r.status == LpStatus::Error) throw SolverError("lp_feasible: solver error");
  return r.status == LpStatus::Optimal;
}

}  // namespace netmpc
