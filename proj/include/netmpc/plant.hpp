#pragma once

#include <Eigen/Dense>

#include "netmpc/cartpole.hpp"

namespace netmpc {

// Simulated truth plant. The linear kind advances with exactly the control
// model's matrices; the cart-pole kind integrates the nonlinear ODE so the
// controller's linear model is deliberately mismatched.
class Plant {
public:
  enum class Kind { Linear, CartPole };

  static Plant linear(Eigen::MatrixXd A, Eigen::MatrixXd B,
                      double divergence_bound = 1e6);
  static Plant cartpole(CartPoleParams params, double Ts, int substeps,
                        double divergence_bound = 1e6);

  Kind kind() const { return kind_; }
  int nx() const { return nx_; }
  int nu() const { return nu_; }

  Eigen::VectorXd step(const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) const;
  bool diverged(const Eigen::VectorXd& x) const;

private:
  Kind kind_ = Kind::Linear;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  CartPoleParams cp_;
  double Ts_ = 1.0;
  int substeps_ = 4;
  int nx_ = 0;
  int nu_ = 0;
  double divergence_bound_ = 1e6;
};

}  // namespace netmpc
