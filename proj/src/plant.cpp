#include "netmpc/plant.hpp"

#include "netmpc/errors.hpp"

namespace netmpc {

Plant Plant::linear(Eigen::MatrixXd A, Eigen::MatrixXd B,
                    double divergence_bound) {
  Plant p;
  p.kind_ = Kind::Linear;
  p.nx_ = static_cast<int>(A.rows());
  p.nu_ = static_cast<int>(B.cols());
  if (A.cols() != p.nx_ || B.rows() != p.nx_)
    throw ConfigError("plant: dimension mismatch");
  p.A_ = std::move(A);
  p.B_ = std::move(B);
  p.divergence_bound_ = divergence_bound;
  return p;
}

Plant Plant::cartpole(CartPoleParams params, double Ts, int substeps,
                      double divergence_bound) {
  if (Ts <= 0.0) throw ConfigError("plant: Ts must be positive");
  if (substeps < 1) throw ConfigError("plant: substeps must be >= 1");
  Plant p;
  p.kind_ = Kind::CartPole;
  p.cp_ = params;
  p.Ts_ = Ts;
  p.substeps_ = substeps;
  p.nx_ = 4;
  p.nu_ = 1;
  p.divergence_bound_ = divergence_bound;
  return p;
}

Eigen::VectorXd Plant::step(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u) const {
  if (x.size() != nx_ || u.size() != nu_)
    throw ConfigError("plant step: dimension mismatch");
  if (kind_ == Kind::Linear) return A_ * x + B_ * u;
  return cartpole_rk4(cp_, x, u(0), Ts_, substeps_);
}

bool Plant::diverged(const Eigen::VectorXd& x) const {
  return !x.allFinite() || x.lpNorm<Eigen::Infinity>() > divergence_bound_;
}

}  // namespace netmpc
