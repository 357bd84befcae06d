#pragma once

#include <Eigen/Dense>

#include "netmpc/cartpole.hpp"
#include "netmpc/lti_model.hpp"
#include "netmpc/polytope.hpp"

namespace fixtures {

// Double integrator sampled at Ts, matching configs/double_integrator.json.
struct DiSetup {
  netmpc::LtiModel model;
  Eigen::MatrixXd Q, R, T;
};

inline DiSetup double_integrator(double Ts = 0.1) {
  DiSetup s;
  s.model.A.setZero(2, 2);
  s.model.A << 1.0, Ts, 0.0, 1.0;
  s.model.B.setZero(2, 1);
  s.model.B << 0.5 * Ts * Ts, Ts;
  s.model.X = netmpc::Polytope::box(Eigen::Vector2d(-5.0, -5.0),
                                    Eigen::Vector2d(5.0, 5.0));
  s.model.U = netmpc::Polytope::box(Eigen::VectorXd::Constant(1, -1.0),
                                    Eigen::VectorXd::Constant(1, 1.0));
  s.model.Ts = Ts;
  s.Q = Eigen::Vector2d(1.0, 1.0).asDiagonal();
  s.R = Eigen::MatrixXd::Constant(1, 1, 0.1);
  s.T = Eigen::Vector2d(100.0, 100.0).asDiagonal();
  return s;
}

// Linearized cart-pole matching configs/cartpole.json.
struct CartSetup {
  netmpc::LtiModel model;
  netmpc::CartPoleParams params;
  Eigen::MatrixXd Q, R, T;
};

inline CartSetup cartpole_linear(double Ts = 0.1) {
  CartSetup s;
  Eigen::MatrixXd Ac, Bc;
  netmpc::cartpole_linearize(s.params, &Ac, &Bc);
  netmpc::zoh_discretize(Ac, Bc, Ts, &s.model.A, &s.model.B);
  Eigen::Vector4d lo(-2.0, -0.35, -2.5, -1.2);
  Eigen::Vector4d hi(2.0, 0.35, 2.5, 1.2);
  s.model.X = netmpc::Polytope::box(lo, hi);
  s.model.U = netmpc::Polytope::box(Eigen::VectorXd::Constant(1, -10.0),
                                    Eigen::VectorXd::Constant(1, 10.0));
  s.model.Ts = Ts;
  s.Q = Eigen::Vector4d(10.0, 50.0, 1.0, 1.0).asDiagonal();
  s.R = Eigen::MatrixXd::Constant(1, 1, 0.5);
  s.T = Eigen::Vector4d(200.0, 200.0, 200.0, 200.0).asDiagonal();
  return s;
}

// Scalar system with room to spare, handy for hand-checkable set math.
inline netmpc::LtiModel scalar_model(double a, double b, double xmax,
                                     double umax) {
  netmpc::LtiModel m;
  m.A = Eigen::MatrixXd::Constant(1, 1, a);
  m.B = Eigen::MatrixXd::Constant(1, 1, b);
  m.X = netmpc::Polytope::box(Eigen::VectorXd::Constant(1, -xmax),
                              Eigen::VectorXd::Constant(1, xmax));
  m.U = netmpc::Polytope::box(Eigen::VectorXd::Constant(1, -umax),
                              Eigen::VectorXd::Constant(1, umax));
  m.Ts = 1.0;
  return m;
}

}  // namespace fixtures
