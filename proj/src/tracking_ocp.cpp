#include "netmpc/tracking_ocp.hpp"

#include <Eigen/Cholesky>
#include <chrono>
#include <filesystem>
#include <stdexcept>

#include "netmpc/errors.hpp"

namespace netmpc {

namespace {

void require_spd(const Eigen::MatrixXd& m, int dim, const char* name) {
  if (m.rows() != dim || m.cols() != dim)
    throw ConfigError(std::string(name) + ": wrong dimension");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ConfigError(std::string(name) + ": not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw ConfigError(std::string(name) + ": not positive definite");
}

constexpr double kX0Tol = 1e-8;
constexpr double kDynTol = 1e-6;

}  // namespace

TrackingOcp::TrackingOcp(LtiModel model, const std::vector<int>& horizon,
                         const Eigen::MatrixXd& q_cost,
                         const Eigen::MatrixXd& r_cost,
                         const Eigen::MatrixXd& t_cost, double lambda,
                         const std::string& cache_dir)
    : model_(std::move(model)), q_(q_cost), r_(r_cost), t_(t_cost) {
  model_.validate();
  layout_ = horizon_layout(horizon);
  require_spd(q_, model_.nx(), "Q");
  require_spd(r_, model_.nu(), "R");
  require_spd(t_, model_.nx(), "T");

  stages_ = stage_table(model_.A, model_.B, q_, r_, layout_);
  term_ = terminal_pair(model_.A, model_.B, q_, r_);
  basis_ = steady_state_basis(model_.A, model_.B);

  std::filesystem::path path;
  bool cached = false;
  if (!cache_dir.empty()) {
    uint64_t key = sets_cache_key(model_, layout_, term_.K, basis_, lambda);
    char name[32];
    std::snprintf(name, sizeof(name), "%016llx.json",
                  static_cast<unsigned long long>(key));
    path = std::filesystem::path(cache_dir) / name;
    if (auto hit = load_terminal_sets(path.string(), key)) {
      oinf_ = std::move(hit->oinf);
      tail_ = std::move(hit->tail);
      cached = true;
    }
  }
  if (!cached) {
    tail_ = feasible_set_x02(model_, layout_);
    oinf_ = build_oinf_mh(model_, tail_, term_.K, basis_, lambda);
    if (!path.empty()) {
      uint64_t key = sets_cache_key(model_, layout_, term_.K, basis_, lambda);
      store_terminal_sets(path.string(), key, TerminalSets{oinf_, tail_});
    }
  }

  vars_ = OcpLayout{model_.nx(), model_.nu(), basis_.ntheta,
                    layout_.N};
  assemble();
}

void TrackingOcp::assemble() {
  const int nx = vars_.nx, nu = vars_.nu, nth = vars_.ntheta, N = vars_.N;
  const int nz = vars_.nvar();
  const Eigen::MatrixXd& mx = basis_.Mx;
  const Eigen::MatrixXd& mu = basis_.Mu;

  // Cost as z'Cz + linear(r); hqp_ = 2C so the backend convention
  // 0.5 z'Hz + g'z reproduces it.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nz, nz);
  const int th = vars_.theta_off();
  auto add_tracking_block = [&](int off, int dim, const Eigen::MatrixXd& w,
                                const Eigen::MatrixXd& map) {
    c.block(off, off, dim, dim) += w;
    c.block(off, th, dim, nth) -= w * map;
    c.block(th, off, nth, dim) -= map.transpose() * w;
    c.block(th, th, nth, nth) += map.transpose() * w * map;
  };
  for (int k = 0; k < N; ++k) {
    const StageSystem& st = stages_.at(layout_.stage_of_step[k]);
    add_tracking_block(vars_.x_off(k), nx, st.Q, mx);
    add_tracking_block(vars_.u_off(k), nu, st.R, mu);
  }
  add_tracking_block(vars_.x_off(N), nx, term_.P, mx);
  c.block(th, th, nth, nth) += mx.transpose() * t_ * mx;
  hqp_ = 2.0 * c;

  // Equalities: x_0 pin (rhs filled per solve), then one dynamics block per
  // decision step using that step's coarse matrices.
  aeq_ = Eigen::MatrixXd::Zero(nx + N * nx, nz);
  aeq_.block(0, vars_.x_off(0), nx, nx).setIdentity();
  for (int k = 0; k < N; ++k) {
    const StageSystem& st = stages_.at(layout_.stage_of_step[k]);
    int row = nx + k * nx;
    aeq_.block(row, vars_.x_off(k), nx, nx) = -st.A;
    aeq_.block(row, vars_.u_off(k), nx, nu) = -st.B;
    aeq_.block(row, vars_.x_off(k + 1), nx, nx).setIdentity();
  }

  // Inequalities: states k = 1..N, inputs k = 0..N-1, then the coupling
  // rows tying (x_{h1}, theta) to the admissible set. x_0 is handled by a
  // membership pre-check instead of constant rows.
  const Eigen::MatrixXd& xa = model_.X.A();
  const Eigen::VectorXd& xb = model_.X.b();
  const Eigen::MatrixXd& ua = model_.U.A();
  const Eigen::VectorXd& ub = model_.U.b();
  const Eigen::MatrixXd& oa = oinf_.set.A();
  const Eigen::VectorXd& ob = oinf_.set.b();
  const int mX = static_cast<int>(xa.rows());
  const int mU = static_cast<int>(ua.rows());
  const int mO = static_cast<int>(oa.rows());
  g_ = Eigen::MatrixXd::Zero(N * mX + N * mU + mO, nz);
  h_ = Eigen::VectorXd::Zero(g_.rows());
  int row = 0;
  for (int k = 1; k <= N; ++k) {
    g_.block(row, vars_.x_off(k), mX, nx) = xa;
    h_.segment(row, mX) = xb;
    row += mX;
  }
  for (int k = 0; k < N; ++k) {
    g_.block(row, vars_.u_off(k), mU, nu) = ua;
    h_.segment(row, mU) = ub;
    row += mU;
  }
  g_.block(row, vars_.x_off(layout_.h1), mO, nx) = oa.leftCols(nx);
  g_.block(row, th, mO, nth) = oa.rightCols(nth);
  h_.segment(row, mO) = ob;
}

bool TrackingOcp::state_admissible(const Eigen::VectorXd& x0) const {
  return model_.X.max_violation(x0) <= kX0Tol;
}

QpProblem TrackingOcp::instantiate(const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& r) const {
  if (x0.size() != vars_.nx || r.size() != vars_.nx)
    throw std::invalid_argument("ocp: x0/r dimension mismatch");
  QpProblem qp;
  qp.H = hqp_;
  qp.g = Eigen::VectorXd::Zero(vars_.nvar());
  qp.g.segment(vars_.theta_off(), vars_.ntheta) =
      -2.0 * basis_.Mx.transpose() * t_ * r;
  qp.Aeq = aeq_;
  qp.beq = Eigen::VectorXd::Zero(aeq_.rows());
  qp.beq.head(vars_.nx) = x0;
  qp.G = g_;
  qp.h = h_;
  return qp;
}

OcpSolution TrackingOcp::solve(const QpBackend& backend,
                               const Eigen::VectorXd& x0,
                               const Eigen::VectorXd& r,
                               const std::optional<Eigen::VectorXd>& warm)
    const {
  if (!state_admissible(x0)) {
    OcpSolution out;
    out.status = QpStatus::Infeasible;
    return out;
  }
  QpProblem qp = instantiate(x0, r);
  auto t0 = std::chrono::steady_clock::now();
  QpSolution qps = backend.solve(qp, warm);
  auto t1 = std::chrono::steady_clock::now();
  OcpSolution out = extract(x0, r, qps);
  out.solve_seconds = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

OcpSolution TrackingOcp::extract(const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& r,
                                 const QpSolution& qps) const {
  OcpSolution out;
  out.status = qps.status;
  out.iterations = qps.iterations;
  if (qps.status != QpStatus::Optimal) return out;

  const int nx = vars_.nx, nu = vars_.nu, N = vars_.N;
  out.z = qps.z;
  out.x.resize(N + 1, nx);
  out.u.resize(N, nu);
  for (int k = 0; k <= N; ++k)
    out.x.row(k) = qps.z.segment(vars_.x_off(k), nx).transpose();
  for (int k = 0; k < N; ++k)
    out.u.row(k) = qps.z.segment(vars_.u_off(k), nu).transpose();
  out.theta = qps.z.segment(vars_.theta_off(), vars_.ntheta);
  out.xbar = basis_.Mx * out.theta;
  out.ubar = basis_.Mu * out.theta;

  for (int k = 0; k < N; ++k) {
    const StageSystem& st = stages_.at(layout_.stage_of_step[k]);
    Eigen::VectorXd resid = out.x.row(k + 1).transpose() -
                            st.A * out.x.row(k).transpose() -
                            st.B * out.u.row(k).transpose();
    if (resid.cwiseAbs().maxCoeff() > kDynTol)
      throw SolverError("ocp extract: dynamics residual above tolerance");
  }
  if ((out.x.row(0).transpose() - x0).cwiseAbs().maxCoeff() > kDynTol)
    throw SolverError("ocp extract: initial state mismatch");

  double v = 0.0;
  for (int k = 0; k < N; ++k) {
    const StageSystem& st = stages_.at(layout_.stage_of_step[k]);
    Eigen::VectorXd ex = out.x.row(k).transpose() - out.xbar;
    Eigen::VectorXd eu = out.u.row(k).transpose() - out.ubar;
    v += ex.dot(st.Q * ex) + eu.dot(st.R * eu);
  }
  Eigen::VectorXd en = out.x.row(N).transpose() - out.xbar;
  Eigen::VectorXd eo = out.xbar - r;
  v += en.dot(term_.P * en) + eo.dot(t_ * eo);
  out.objective = v;
  return out;
}

double max_constraint_violation(const TrackingOcp& ocp,
                                const OcpSolution& s) {
  if (s.status != QpStatus::Optimal) return std::numeric_limits<double>::max();
  double worst = 0.0;
  const int N = ocp.vars().N;
  for (int k = 0; k <= N; ++k)
    worst = std::max(worst,
                     ocp.model().X.max_violation(s.x.row(k).transpose()));
  for (int k = 0; k < N; ++k)
    worst = std::max(worst,
                     ocp.model().U.max_violation(s.u.row(k).transpose()));
  Eigen::VectorXd w(ocp.vars().nx + ocp.vars().ntheta);
  w << s.x.row(ocp.horizon().h1).transpose(), s.theta;
  worst = std::max(worst, ocp.coupling_set().set.max_violation(w));
  return worst;
}

}  // namespace netmpc
