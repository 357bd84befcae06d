#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace netmpc {

// Global feasibility tolerance used by membership and inclusion queries on
// row-normalized polytopes.
constexpr double kFeasTol = 1e-8;

struct ChebyshevResult {
  Eigen::VectorXd center;
  double radius = 0.0;
  bool degenerate = false;  // radius below tolerance (empty or flat set)
};

// Convex polyhedron in halfspace form {z : A z <= b}. All mutating ops keep
// rows unit-normalized; zero-normal rows are resolved at normalize() time.
class Polytope {
public:
  Polytope() = default;
  Polytope(Eigen::MatrixXd A, Eigen::VectorXd b);

  static Polytope box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  // Two contradictory unit rows; used when a construction collapses to the
  // empty set but a valid representation must survive.
  static Polytope canonical_empty(int dim);

  int dim() const { return static_cast<int>(A_.cols()); }
  int rows() const { return static_cast<int>(A_.rows()); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }

  // Scales every row to unit normal. Zero-normal rows with b >= -tol are
  // vacuous and dropped; one with b < -tol makes the set empty, and the whole
  // polytope is replaced by canonical_empty.
  void normalize(double tol = kFeasTol);

  bool contains(const Eigen::VectorXd& z, double tol = kFeasTol) const;
  double max_violation(const Eigen::VectorXd& z) const;

  Polytope intersect(const Polytope& other) const;

  // {z : M z + c in *this}.
  Polytope affine_preimage(const Eigen::MatrixXd& M,
                           const Eigen::VectorXd& c) const;

  bool is_empty() const;
  ChebyshevResult chebyshev_center() const;

  // Drops rows implied by the others (LP certificate per row). Exact
  // duplicates are removed first.
  void remove_redundancy();

  // max a'z over the set. `unbounded` reports an unbounded direction.
  double support(const Eigen::VectorXd& a, bool* unbounded = nullptr) const;

  nlohmann::json to_json() const;
  static Polytope from_json(const nlohmann::json& j);

private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

// Fourier-Motzkin projection onto the coordinates in `keep` (original order
// preserved). Redundancy is pruned after each eliminated variable.
Polytope eliminate(const Polytope& p, const std::vector<int>& keep);

// Every point of `inner` satisfies every row of `outer` within tol.
bool poly_includes(const Polytope& outer, const Polytope& inner,
                   double tol = kFeasTol);
bool poly_equal(const Polytope& a, const Polytope& b, double tol = kFeasTol);
// Largest one-sided support gap max(0, max_i (support(inner, a_i) - b_i)).
double inclusion_gap(const Polytope& outer, const Polytope& inner);

// Uniform-ish interior samples by hit-and-run from the Chebyshev center.
// Deterministic for a fixed seed. Requires a nondegenerate interior.
std::vector<Eigen::VectorXd> sample_hit_and_run(const Polytope& p, int count,
                                                std::uint64_t seed);

}  // namespace netmpc
