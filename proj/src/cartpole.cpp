#include "netmpc/cartpole.hpp"

#include <cmath>

#include "netmpc/errors.hpp"

namespace netmpc {

Eigen::Vector4d cartpole_ode(const CartPoleParams& p, const Eigen::Vector4d& x,
                             double u) {
  const double mt = p.cart_mass + p.pole_mass;
  const double l = p.pole_half_length;
  const double s = std::sin(x(1));
  const double c = std::cos(x(1));
  const double wd = x(3);
  const double temp = (u + p.pole_mass * l * wd * wd * s) / mt;
  const double alpha = (p.gravity * s - c * temp) /
                       (l * (4.0 / 3.0 - p.pole_mass * c * c / mt));
  const double acc = temp - p.pole_mass * l * alpha * c / mt;
  Eigen::Vector4d dx;
  dx << x(2), x(3), acc, alpha;
  return dx;
}

Eigen::Vector4d cartpole_rk4(const CartPoleParams& p, const Eigen::Vector4d& x,
                             double u, double dt, int substeps) {
  if (substeps < 1) throw ConfigError("cartpole: substeps must be >= 1");
  const double h = dt / substeps;
  Eigen::Vector4d z = x;
  for (int i = 0; i < substeps; ++i) {
    Eigen::Vector4d k1 = cartpole_ode(p, z, u);
    Eigen::Vector4d k2 = cartpole_ode(p, z + 0.5 * h * k1, u);
    Eigen::Vector4d k3 = cartpole_ode(p, z + 0.5 * h * k2, u);
    Eigen::Vector4d k4 = cartpole_ode(p, z + h * k3, u);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return z;
}

void cartpole_linearize(const CartPoleParams& p, Eigen::MatrixXd* Ac,
                        Eigen::MatrixXd* Bc) {
  const double mt = p.cart_mass + p.pole_mass;
  const double l = p.pole_half_length;
  const double D = l * (4.0 / 3.0 - p.pole_mass / mt);
  const double dalpha_dphi = p.gravity / D;
  const double dalpha_du = -1.0 / (mt * D);
  const double dacc_dphi = -p.pole_mass * l * dalpha_dphi / mt;
  const double dacc_du = 1.0 / mt - p.pole_mass * l * dalpha_du / mt;
  *Ac = Eigen::MatrixXd::Zero(4, 4);
  (*Ac)(0, 2) = 1.0;
  (*Ac)(1, 3) = 1.0;
  (*Ac)(2, 1) = dacc_dphi;
  (*Ac)(3, 1) = dalpha_dphi;
  *Bc = Eigen::MatrixXd::Zero(4, 1);
  (*Bc)(2, 0) = dacc_du;
  (*Bc)(3, 0) = dalpha_du;
}

}  // namespace netmpc
