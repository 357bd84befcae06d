#pragma once

#include <Eigen/Dense>

namespace netmpc {

// Frictionless cart-pole, pole hinged on the cart, angle measured from
// upright. State is (position, angle, velocity, angular velocity); the input
// is the horizontal force on the cart. pole_half_length is the distance from
// hinge to the pole's center of mass.
struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double gravity = 9.81;
};

Eigen::Vector4d cartpole_ode(const CartPoleParams& p,
                             const Eigen::Vector4d& x, double u);

// Classic RK4 over `dt` split into `substeps` equal pieces.
Eigen::Vector4d cartpole_rk4(const CartPoleParams& p, const Eigen::Vector4d& x,
                             double u, double dt, int substeps);

// Continuous-time small-signal model about the upright equilibrium.
void cartpole_linearize(const CartPoleParams& p, Eigen::MatrixXd* Ac,
                        Eigen::MatrixXd* Bc);

}  // namespace netmpc
