#include "netmpc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "netmpc/errors.hpp"
#include "netmpc/lp.hpp"

namespace netmpc {

Polytope::Polytope(Eigen::MatrixXd A, Eigen::VectorXd b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size()) throw ConfigError("polytope: A/b row mismatch");
  normalize();
}

Polytope Polytope::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const int d = static_cast<int>(lo.size());
  if (hi.size() != d) throw ConfigError("polytope box: bound size mismatch");
  if (((hi - lo).array() < 0).any())
    throw ConfigError("polytope box: upper bound below lower bound");
  Eigen::MatrixXd A(2 * d, d);
  Eigen::VectorXd b(2 * d);
  A.topRows(d) = Eigen::MatrixXd::Identity(d, d);
  A.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
  b.head(d) = hi;
  b.tail(d) = -lo;
  return Polytope(A, b);
}

Polytope Polytope::canonical_empty(int dim) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, dim);
  A(0, 0) = 1.0;
  A(1, 0) = -1.0;
  Eigen::VectorXd b(2);
  b << -1.0, -1.0;
  Polytope p;
  p.A_ = A;
  p.b_ = b;
  return p;
}

void Polytope::normalize(double tol) {
  std::vector<int> live;
  for (int i = 0; i < rows(); ++i) {
    double n = A_.row(i).norm();
    if (n <= tol) {
      if (b_(i) < -tol) {
        *this = canonical_empty(dim());
        return;
      }
      continue;
    }
    A_.row(i) /= n;
    b_(i) /= n;
    live.push_back(i);
  }
  if (static_cast<int>(live.size()) == rows()) return;
  Eigen::MatrixXd A2(live.size(), dim());
  Eigen::VectorXd b2(live.size());
  for (size_t k = 0; k < live.size(); ++k) {
    A2.row(static_cast<int>(k)) = A_.row(live[k]);
    b2(static_cast<int>(k)) = b_(live[k]);
  }
  A_ = A2;
  b_ = b2;
}

bool Polytope::contains(const Eigen::VectorXd& z, double tol) const {
  return max_violation(z) <= tol;
}

double Polytope::max_violation(const Eigen::VectorXd& z) const {
  if (rows() == 0) return 0.0;
  return (A_ * z - b_).maxCoeff();
}

Polytope Polytope::intersect(const Polytope& other) const {
  if (other.dim() != dim())
    throw ConfigError("polytope intersect: dimension mismatch");
  Eigen::MatrixXd A(rows() + other.rows(), dim());
  Eigen::VectorXd b(rows() + other.rows());
  A << A_, other.A_;
  b << b_, other.b_;
  return Polytope(A, b);
}

Polytope Polytope::affine_preimage(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& c) const {
  if (M.rows() != dim() || c.size() != dim())
    throw ConfigError("polytope preimage: map dimension mismatch");
  return Polytope(A_ * M, b_ - A_ * c);
}

bool Polytope::is_empty() const {
  if (rows() == 0) return false;
  LpProblem lp;
  lp.G = A_;
  lp.h = b_;
  lp.c = Eigen::VectorXd::Zero(dim());
  return !lp_feasible(lp);
}

ChebyshevResult Polytope::chebyshev_center() const {
  // Rows are unit-normalized, so {z : A z + r 1 <= b, r max} is the largest
  // inscribed ball.
  ChebyshevResult out;
  const int d = dim();
  LpProblem lp;
  lp.G.resize(rows(), d + 1);
  lp.G << A_, Eigen::VectorXd::Ones(rows());
  lp.h = b_;
  lp.c = Eigen::VectorXd::Zero(d + 1);
  lp.c(d) = -1.0;
  LpResult r = solve_lp(lp);
  if (r.status == LpStatus::Unbounded)
    throw SolverError("chebyshev_center: set is unbounded");
  if (r.status != LpStatus::Optimal) {
    out.center = Eigen::VectorXd::Zero(d);
    out.degenerate = true;
    return out;
  }
  out.center = r.z.head(d);
  out.radius = r.z(d);
  out.degenerate = out.radius <= kFeasTol;
  return out;
}

namespace {

// Strictly interior point of {A z <= b} with unit rows, found by growing a
// working subset: the subset Chebyshev center is tested against every row and
// the least-slack row joins the subset until the candidate clears all of them.
// Far cheaper than one Chebyshev LP over all rows when most rows are
// redundant. Fails (returns false) when the set has no interior.
bool interior_point(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    Eigen::VectorXd* z0) {
  const int m = static_cast<int>(A.rows());
  const int d = static_cast<int>(A.cols());
  std::vector<int> work;
  std::vector<char> in_work(static_cast<size_t>(m), 0);
  for (int i = 0; i < m && static_cast<int>(work.size()) < 2 * d + 2; ++i) {
    work.push_back(i);
    in_work[static_cast<size_t>(i)] = 1;
  }
  for (int round = 0; round <= m; ++round) {
    const int w = static_cast<int>(work.size());
    LpProblem lp;
    lp.G.resize(w + 1, d + 1);
    lp.h.resize(w + 1);
    for (int k = 0; k < w; ++k) {
      lp.G.row(k).head(d) = A.row(work[static_cast<size_t>(k)]);
      lp.G(k, d) = 1.0;
      lp.h(k) = b(work[static_cast<size_t>(k)]);
    }
    // Radius cap keeps the subset problem bounded before enough rows arrive.
    lp.G.row(w).setZero();
    lp.G(w, d) = 1.0;
    lp.h(w) = 1e6;
    lp.c = Eigen::VectorXd::Zero(d + 1);
    lp.c(d) = -1.0;
    LpResult r = solve_lp(lp);
    if (r.status != LpStatus::Optimal || r.z(d) <= kFeasTol) return false;
    Eigen::VectorXd cand = r.z.head(d);
    Eigen::VectorXd slack = b - A * cand;
    int worst = 0;
    for (int i = 1; i < m; ++i)
      if (slack(i) < slack(worst)) worst = i;
    if (slack(worst) > 1e-9) {
      *z0 = cand;
      return true;
    }
    if (in_work[static_cast<size_t>(worst)]) return false;
    in_work[static_cast<size_t>(worst)] = 1;
    work.push_back(worst);
  }
  return false;
}

}  // namespace

void Polytope::remove_redundancy() {
  normalize();
  // Parallel rows first: identical normals keep only the tightest offset.
  std::vector<int> keep;
  for (int i = 0; i < rows(); ++i) {
    bool dup = false;
    for (int k : keep) {
      if ((A_.row(i) - A_.row(k)).norm() <= 1e-12) {
        if (b_(i) < b_(k)) b_(k) = b_(i);
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd A(m, dim());
  Eigen::VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    A.row(k) = A_.row(keep[static_cast<size_t>(k)]);
    b(k) = b_(keep[static_cast<size_t>(k)]);
  }
  if (m <= 1) {
    A_ = A;
    b_ = b;
    return;
  }

  // 0 = undecided, 1 = kept, 2 = implied by the kept rows.
  std::vector<char> state(static_cast<size_t>(m), 0);
  Eigen::VectorXd z0;
  if (interior_point(A, b, &z0)) {
    // Each undecided row is certified against the kept rows only; the kept
    // region contains the full set, so its support bound transfers. When the
    // optimizer escapes row i instead, the first row cut by the segment from
    // z0 is a facet and joins the kept set.
    std::vector<int> kept;
    for (int i = 0; i < m; ++i) {
      if (state[static_cast<size_t>(i)] != 0) continue;
      for (int guard = 0; guard <= m; ++guard) {
        const int nk = static_cast<int>(kept.size());
        LpProblem lp;
        lp.G.resize(nk + 1, dim());
        lp.h.resize(nk + 1);
        for (int k = 0; k < nk; ++k) {
          lp.G.row(k) = A.row(kept[static_cast<size_t>(k)]);
          lp.h(k) = b(kept[static_cast<size_t>(k)]);
        }
        // The relaxed copy of row i keeps the LP bounded.
        lp.G.row(nk) = A.row(i);
        lp.h(nk) = b(i) + 1.0;
        lp.c = -A.row(i).transpose();
        LpResult res = solve_lp(lp);
        if (res.status != LpStatus::Optimal) {
          state[static_cast<size_t>(i)] = 1;
          kept.push_back(i);
          break;
        }
        if (-res.objective <= b(i) + kFeasTol) {
          state[static_cast<size_t>(i)] = 2;
          break;
        }
        Eigen::VectorXd dir = res.z - z0;
        int hit = -1;
        double thit = std::numeric_limits<double>::infinity();
        for (int k = 0; k < m; ++k) {
          if (state[static_cast<size_t>(k)] == 2) continue;
          double den = A.row(k).dot(dir);
          if (den <= 1e-12) continue;
          double t = (b(k) - A.row(k).dot(z0)) / den;
          if (t < thit) {
            thit = t;
            hit = k;
          }
        }
        // hit == i or a numerically kept row again: keep i and move on.
        if (hit < 0 || hit == i || state[static_cast<size_t>(hit)] == 1) {
          state[static_cast<size_t>(i)] = 1;
          kept.push_back(i);
          break;
        }
        state[static_cast<size_t>(hit)] = 1;
        kept.push_back(hit);
      }
      if (state[static_cast<size_t>(i)] == 0) {
        state[static_cast<size_t>(i)] = 1;
        kept.push_back(i);
      }
    }
  } else {
    // Flat or empty set: certify each row against all other live rows.
    for (int i = 0; i < m; ++i) {
      int nlive = 0;
      for (int k = 0; k < m; ++k)
        if (state[static_cast<size_t>(k)] != 2) ++nlive;
      if (nlive <= 1) break;
      LpProblem lp;
      lp.G.resize(nlive, dim());
      lp.h.resize(nlive);
      int r = 0;
      for (int k = 0; k < m; ++k) {
        if (state[static_cast<size_t>(k)] == 2) continue;
        lp.G.row(r) = A.row(k);
        lp.h(r) = (k == i) ? b(k) + 1.0 : b(k);
        ++r;
      }
      lp.c = -A.row(i).transpose();
      LpResult res = solve_lp(lp);
      if (res.status == LpStatus::Optimal && -res.objective <= b(i) + kFeasTol)
        state[static_cast<size_t>(i)] = 2;
      else if (res.status == LpStatus::Infeasible)
        // Empty set: every row is vacuously implied; keep a canonical marker.
        break;
    }
  }

  int nlive = 0;
  for (int k = 0; k < m; ++k)
    if (state[static_cast<size_t>(k)] != 2) ++nlive;
  Eigen::MatrixXd A2(nlive, dim());
  Eigen::VectorXd b2(nlive);
  int r = 0;
  for (int k = 0; k < m; ++k) {
    if (state[static_cast<size_t>(k)] == 2) continue;
    A2.row(r) = A.row(k);
    b2(r) = b(k);
    ++r;
  }
  A_ = A2;
  b_ = b2;
}

double Polytope::support(const Eigen::VectorXd& a, bool* unbounded) const {
  LpProblem lp;
  lp.G = A_;
  lp.h = b_;
  lp.c = -a;
  LpResult r = solve_lp(lp);
  if (unbounded) *unbounded = (r.status == LpStatus::Unbounded);
  if (r.status == LpStatus::Unbounded)
    return std::numeric_limits<double>::infinity();
  if (r.status == LpStatus::Infeasible)
    return -std::numeric_limits<double>::infinity();
  if (r.status != LpStatus::Optimal) throw SolverError("support: LP failed");
  return -r.objective;
}

nlohmann::json Polytope::to_json() const {
  nlohmann::json j;
  j["A"] = nlohmann::json::array();
  for (int i = 0; i < rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < dim(); ++k) row.push_back(A_(i, k));
    j["A"].push_back(row);
  }
  j["b"] = nlohmann::json::array();
  for (int i = 0; i < rows(); ++i) j["b"].push_back(b_(i));
  return j;
}

Polytope Polytope::from_json(const nlohmann::json& j) {
  const auto& ja = j.at("A");
  const auto& jb = j.at("b");
  const int r = static_cast<int>(ja.size());
  if (static_cast<int>(jb.size()) != r)
    throw ConfigError("polytope json: A/b row mismatch");
  if (r == 0) throw ConfigError("polytope json: no rows");
  const int d = static_cast<int>(ja.at(0).size());
  Eigen::MatrixXd A(r, d);
  Eigen::VectorXd b(r);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(ja.at(i).size()) != d)
      throw ConfigError("polytope json: ragged A");
    for (int k = 0; k < d; ++k) A(i, k) = ja.at(i).at(k).get<double>();
    b(i) = jb.at(i).get<double>();
  }
  // Stored rows are already unit-normalized; renormalizing would divide by a
  // norm one ulp off 1 and perturb the reloaded set, so fill fields directly.
  Polytope p;
  p.A_ = std::move(A);
  p.b_ = std::move(b);
  return p;
}

Polytope eliminate(const Polytope& p, const std::vector<int>& keep) {
  const int d = p.dim();
  std::vector<char> keep_mask(static_cast<size_t>(d), 0);
  for (int k : keep) {
    if (k < 0 || k >= d) throw ConfigError("eliminate: keep index out of range");
    if (keep_mask[static_cast<size_t>(k)])
      throw ConfigError("eliminate: duplicate keep index");
    keep_mask[static_cast<size_t>(k)] = 1;
  }

  Eigen::MatrixXd A = p.A();
  Eigen::VectorXd b = p.b();
  std::vector<int> cols(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) cols[static_cast<size_t>(i)] = i;

  auto prune = [&](Eigen::MatrixXd& Aw, Eigen::VectorXd& bw) {
    Polytope q(Aw, bw);
    q.remove_redundancy();
    Aw = q.A();
    bw = q.b();
  };

  while (true) {
    // Pick the remaining variable with the smallest pos*neg fan-out.
    int best_col = -1;
    long best_cost = -1;
    for (size_t c = 0; c < cols.size(); ++c) {
      if (keep_mask[static_cast<size_t>(cols[c])]) continue;
      long pos = 0, neg = 0;
      for (int i = 0; i < A.rows(); ++i) {
        if (A(i, static_cast<int>(c)) > kFeasTol) ++pos;
        else if (A(i, static_cast<int>(c)) < -kFeasTol) ++neg;
      }
      long cost = pos * neg;
      if (best_col < 0 || cost < best_cost) {
        best_col = static_cast<int>(c);
        best_cost = cost;
      }
    }
    if (best_col < 0) break;

    const int v = best_col;
    std::vector<int> pos, neg, zer;
    for (int i = 0; i < A.rows(); ++i) {
      if (A(i, v) > kFeasTol) pos.push_back(i);
      else if (A(i, v) < -kFeasTol) neg.push_back(i);
      else zer.push_back(i);
    }
    const int nd = static_cast<int>(A.cols()) - 1;
    Eigen::MatrixXd A2(static_cast<int>(zer.size() + pos.size() * neg.size()),
                       nd);
    Eigen::VectorXd b2(A2.rows());
    auto drop_col = [&](int row) {
      Eigen::RowVectorXd out(nd);
      int c = 0;
      for (int k = 0; k < A.cols(); ++k)
        if (k != v) out(c++) = A(row, k);
      return out;
    };
    int r = 0;
    for (int i : zer) {
      A2.row(r) = drop_col(i);
      b2(r) = b(i);
      ++r;
    }
    for (int i : pos) {
      Eigen::RowVectorXd ri = drop_col(i) / A(i, v);
      double bi = b(i) / A(i, v);
      for (int j : neg) {
        A2.row(r) = ri + drop_col(j) / -A(j, v);
        b2(r) = bi + b(j) / -A(j, v);
        ++r;
      }
    }
    cols.erase(cols.begin() + v);
    if (A2.rows() == 0) {
      // No constraints left on the kept variables: full space.
      A = Eigen::MatrixXd::Zero(0, nd);
      b = Eigen::VectorXd::Zero(0);
      break;
    }
    prune(A2, b2);
    A = A2;
    b = b2;
  }

  // Permute the surviving columns into the caller's keep order.
  Eigen::MatrixXd Af(A.rows(), static_cast<int>(keep.size()));
  for (size_t k = 0; k < keep.size(); ++k) {
    auto it = std::find(cols.begin(), cols.end(), keep[k]);
    Af.col(static_cast<int>(k)) =
        A.col(static_cast<int>(it - cols.begin()));
  }
  if (Af.rows() == 0)
    return Polytope(Eigen::MatrixXd::Zero(0, static_cast<int>(keep.size())),
                    Eigen::VectorXd::Zero(0));
  return Polytope(Af, b);
}

bool poly_includes(const Polytope& outer, const Polytope& inner, double tol) {
  return inclusion_gap(outer, inner) <= tol;
}

double inclusion_gap(const Polytope& outer, const Polytope& inner) {
  double gap = 0.0;
  for (int i = 0; i < outer.rows(); ++i) {
    bool unb = false;
    double s = inner.support(outer.A().row(i).transpose(), &unb);
    if (unb) return std::numeric_limits<double>::infinity();
    gap = std::max(gap, s - outer.b()(i));
  }
  return gap;
}

bool poly_equal(const Polytope& a, const Polytope& b, double tol) {
  return poly_includes(a, b, tol) && poly_includes(b, a, tol);
}

std::vector<Eigen::VectorXd> sample_hit_and_run(const Polytope& p, int count,
                                                std::uint64_t seed) {
  ChebyshevResult c = p.chebyshev_center();
  if (c.degenerate)
    throw SolverError("hit_and_run: set has no usable interior");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  const int d = p.dim();
  Eigen::VectorXd z = c.center;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<size_t>(count));
  const int burn = 64;
  const int thin = 4;
  int made = 0;
  while (static_cast<int>(out.size()) < count) {
    Eigen::VectorXd dir(d);
    for (int i = 0; i < d; ++i) {
      // Box-Muller keeps the draw sequence under our control.
      double u1 = std::max(uniform(), 1e-300);
      double u2 = uniform();
      dir(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    double n = dir.norm();
    if (n < 1e-12) continue;
    dir /= n;
    double tlo = -std::numeric_limits<double>::infinity();
    double thi = std::numeric_limits<double>::infinity();
    Eigen::VectorXd ad = p.A() * dir;
    Eigen::VectorXd slack = p.b() - p.A() * z;
    for (int i = 0; i < p.rows(); ++i) {
      if (ad(i) > 1e-14) thi = std::min(thi, slack(i) / ad(i));
      else if (ad(i) < -1e-14) tlo = std::max(tlo, slack(i) / ad(i));
    }
    if (!(thi > tlo) || !std::isfinite(thi) || !std::isfinite(tlo))
      throw SolverError("hit_and_run: unbounded chord");
    z += (tlo + (thi - tlo) * uniform()) * dir;
    ++made;
    if (made > burn && made % thin == 0) out.push_back(z);
  }
  return out;
}

}  // namespace netmpc
