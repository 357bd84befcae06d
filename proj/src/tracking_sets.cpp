#include "netmpc/tracking_sets.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "netmpc/errors.hpp"

namespace netmpc {

Eigen::MatrixXd extended_system(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& K,
                                const SteadyStateBasis& basis) {
  const int nx = static_cast<int>(A.rows());
  const int nt = basis.ntheta;
  Eigen::MatrixXd Ae = Eigen::MatrixXd::Zero(nx + nt, nx + nt);
  Ae.topLeftCorner(nx, nx) = A - B * K;
  Ae.topRightCorner(nx, nt) = B * K * basis.Mx + B * basis.Mu;
  Ae.bottomRightCorner(nt, nt) = Eigen::MatrixXd::Identity(nt, nt);
  return Ae;
}

Polytope build_w(const Polytope& Xset, const Polytope& Uset,
                 const Eigen::MatrixXd& K, const SteadyStateBasis& basis) {
  const int nx = Xset.dim();
  const int nt = basis.ntheta;
  const int rx = Xset.rows();
  const int ru = Uset.rows();
  Eigen::MatrixXd A(rx + ru, nx + nt);
  Eigen::VectorXd b(rx + ru);
  A.topLeftCorner(rx, nx) = Xset.A();
  A.topRightCorner(rx, nt).setZero();
  b.head(rx) = Xset.b();
  A.bottomLeftCorner(ru, nx) = -Uset.A() * K;
  A.bottomRightCorner(ru, nt) = Uset.A() * (K * basis.Mx + basis.Mu);
  b.tail(ru) = Uset.b();
  Polytope W(A, b);
  if (W.is_empty()) throw EmptySetError("build_w: W is empty");
  return W;
}

namespace {

// Limit of Ae^k by repeated squaring; exists because the x block is Schur
// stable and the theta block is the identity.
Eigen::MatrixXd matrix_power_limit(const Eigen::MatrixXd& Ae) {
  Eigen::MatrixXd S = Ae;
  for (int it = 0; it < 100; ++it) {
    Eigen::MatrixXd S2 = S * S;
    double delta = (S2 - S).lpNorm<Eigen::Infinity>();
    S = S2;
    if (delta <= 1e-13 * std::max(1.0, S.lpNorm<Eigen::Infinity>())) return S;
    if (!S.allFinite())
      throw SolverError("max_admissible_set: Ae powers diverge");
  }
  throw SolverError("max_admissible_set: Ae power limit did not converge");
}

}  // namespace

AdmissibleSet max_admissible_set(const Eigen::MatrixXd& Ae, const Polytope& W,
                                 double lambda, int k_max) {
  if (lambda <= 0.0 || lambda > 1.0)
    throw ConfigError("max_admissible_set: lambda must be in (0, 1]");
  const int d = W.dim();
  if (Ae.rows() != d || Ae.cols() != d)
    throw ConfigError("max_admissible_set: Ae/W dimension mismatch");

  Eigen::MatrixXd Ainf = matrix_power_limit(Ae);

  // W_lambda: invariant rows tightened in place, and a tightened copy of each
  // transient row evaluated at the power limit appended.
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> offs;
  for (int i = 0; i < W.rows(); ++i) {
    Eigen::RowVectorXd a = W.A().row(i);
    double b = W.b()(i);
    if ((a * Ae - a).norm() <= 1e-12) {
      rows.push_back(a);
      offs.push_back(lambda * b);
      continue;
    }
    rows.push_back(a);
    offs.push_back(b);
    Eigen::RowVectorXd alim = a * Ainf;
    if (alim.norm() > 1e-12) {
      rows.push_back(alim);
      offs.push_back(lambda * b);
    } else if (lambda * b < -kFeasTol) {
      throw EmptySetError("max_admissible_set: limit constraint infeasible");
    }
  }
  Eigen::MatrixXd WA(rows.size(), d);
  Eigen::VectorXd Wb(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    WA.row(static_cast<int>(i)) = rows[i];
    Wb(static_cast<int>(i)) = offs[i];
  }
  Polytope Wl(WA, Wb);
  if (Wl.is_empty())
    throw EmptySetError("max_admissible_set: tightened W is empty");

  Polytope omega = Wl;
  omega.remove_redundancy();
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k <= k_max; ++k) {
    power = power * Ae;  // Ae^{k+1}
    // Support test: every row of W_lambda pulled back through Ae^{k+1} must
    // already be implied by omega.
    Eigen::MatrixXd pulled = Wl.A() * power;
    bool settled = true;
    for (int i = 0; i < Wl.rows(); ++i) {
      double rn = pulled.row(i).norm();
      if (rn <= 1e-12) continue;
      bool unb = false;
      double s = omega.support(pulled.row(i).transpose(), &unb);
      if (unb || s > Wl.b()(i) + kFeasTol) {
        settled = false;
        break;
      }
    }
    if (settled) {
      AdmissibleSet out;
      out.set = omega;
      out.kstar = k;
      out.lambda = lambda;
      return out;
    }
    omega = omega.intersect(Polytope(pulled, Wl.b()));
    omega.remove_redundancy();
    if (omega.is_empty())
      throw EmptySetError("max_admissible_set: iteration emptied the set");
  }
  throw SolverError("max_admissible_set: not determined within k_max");
}

TailFeasibleSets feasible_set_x02(const LtiModel& model,
                                  const HorizonLayout& layout) {
  const int nx = model.nx();
  const int nu = model.nu();
  TailFeasibleSets out;
  Polytope S = model.X;
  out.sets.push_back(S);
  // Walk the coarse steps backward; each step intersects X with the set of
  // states that some admissible held input maps into the successor set.
  for (int k = layout.N - 1; k >= layout.h1; --k) {
    const int gran = layout.stage_of_step[static_cast<size_t>(k)];
    Eigen::MatrixXd Ai, Bi;
    coarse_matrices(model.A, model.B, gran, &Ai, &Bi);
    const int rs = S.rows();
    const int ru = model.U.rows();
    Eigen::MatrixXd L(rs + ru, nx + nu);
    Eigen::VectorXd l(rs + ru);
    L.topLeftCorner(rs, nx) = S.A() * Ai;
    L.topRightCorner(rs, nu) = S.A() * Bi;
    l.head(rs) = S.b();
    L.bottomLeftCorner(ru, nx).setZero();
    L.bottomRightCorner(ru, nu) = model.U.A();
    l.tail(ru) = model.U.b();
    std::vector<int> keep(static_cast<size_t>(nx));
    for (int i = 0; i < nx; ++i) keep[static_cast<size_t>(i)] = i;
    Polytope pre = eliminate(Polytope(L, l), keep);
    S = model.X.intersect(pre);
    S.remove_redundancy();
    if (S.is_empty())
      throw EmptySetError("feasible_set_x02: tail set is empty");
    out.sets.push_back(S);
  }
  std::reverse(out.sets.begin(), out.sets.end());
  return out;
}

AdmissibleSet build_oinf_mh(const LtiModel& model, const TailFeasibleSets& tail,
                            const Eigen::MatrixXd& K,
                            const SteadyStateBasis& basis, double lambda) {
  Polytope Wmh = build_w(tail.x02(), model.U, K, basis);
  Eigen::MatrixXd Ae = extended_system(model.A, model.B, K, basis);
  return max_admissible_set(Ae, Wmh, lambda);
}

namespace {

void hash_bytes(std::uint64_t* h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    *h ^= p[i];
    *h *= 1099511628211ULL;
  }
}

void hash_matrix(std::uint64_t* h, const Eigen::MatrixXd& m) {
  std::int64_t r = m.rows(), c = m.cols();
  hash_bytes(h, &r, sizeof(r));
  hash_bytes(h, &c, sizeof(c));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double v = m(i, j);
      hash_bytes(h, &v, sizeof(v));
    }
}

}  // namespace

std::uint64_t sets_cache_key(const LtiModel& model, const HorizonLayout& layout,
                             const Eigen::MatrixXd& K,
                             const SteadyStateBasis& basis, double lambda) {
  std::uint64_t h = 1469598103934665603ULL;
  hash_matrix(&h, model.A);
  hash_matrix(&h, model.B);
  hash_matrix(&h, model.X.A());
  hash_matrix(&h, model.X.b());
  hash_matrix(&h, model.U.A());
  hash_matrix(&h, model.U.b());
  hash_matrix(&h, K);
  hash_matrix(&h, basis.M());
  for (int hi : layout.H) {
    std::int64_t v = hi;
    hash_bytes(&h, &v, sizeof(v));
  }
  hash_bytes(&h, &lambda, sizeof(lambda));
  return h;
}

std::optional<TerminalSets> load_terminal_sets(const std::string& path,
                                               std::uint64_t key) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, key);
    if (j.at("meta").at("hash").get<std::string>() != buf) return std::nullopt;
    TerminalSets s;
    s.oinf.kstar = j.at("meta").at("kstar").get<int>();
    s.oinf.lambda = j.at("meta").at("lambda").get<double>();
    s.oinf.set = Polytope::from_json(j.at("set"));
    for (const auto& t : j.at("tail"))
      s.tail.sets.push_back(Polytope::from_json(t));
    if (s.tail.sets.empty()) return std::nullopt;
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void store_terminal_sets(const std::string& path, std::uint64_t key,
                         const TerminalSets& s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, key);
  nlohmann::json j;
  j["meta"] = {{"hash", buf},
               {"kstar", s.oinf.kstar},
               {"lambda", s.oinf.lambda}};
  j["set"] = s.oinf.set.to_json();
  j["tail"] = nlohmann::json::array();
  for (const Polytope& t : s.tail.sets) j["tail"].push_back(t.to_json());
  std::filesystem::path target(path);
  if (target.has_parent_path())
    std::filesystem::create_directories(target.parent_path());
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw SolverError("store_terminal_sets: cannot write " + path);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace netmpc
