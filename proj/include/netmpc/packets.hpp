#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace netmpc {

// Plan shipped to the smart actuator. u_slice holds the first h1 inputs of
// the optimal plan, one row per sample offset from `origin` (the slot the
// packet is scheduled to arrive). After the slice runs out the actuator
// switches to the feedback law around (xbar, ubar).
struct ControllerPacket {
  Eigen::MatrixXd u_slice;  // h1 x nu
  Eigen::VectorXd xbar;
  Eigen::VectorXd ubar;
  long q = -1;      // last slot whose measurement reached the cloud
  long origin = 0;  // arrival slot; row j of u_slice applies at origin + j
};

// Measurement sent back to the cloud. s is the arrival slot of the plan the
// actuator is currently running, which lets the estimator replay the exact
// inputs applied since then.
struct PlantPacket {
  Eigen::VectorXd x;
  long s = 0;
};

// On-wire size accounting: 8 bytes per scalar, 8 per integer field, plus a
// fixed header covering addressing, sequence numbers, and checksums.
constexpr long kPacketHeaderBytes = 60;

inline long controller_packet_bytes(int h1, int nu, int nx) {
  long scalars = static_cast<long>(h1) * nu + nx + nu;
  return kPacketHeaderBytes + 8L * scalars + 8L;  // + q
}

inline long plant_packet_bytes(int nx) {
  return kPacketHeaderBytes + 8L * nx + 8L;  // + s
}

}  // namespace netmpc
