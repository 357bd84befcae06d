#include "netmpc/multi_horizon.hpp"

#include "netmpc/errors.hpp"

namespace netmpc {

HorizonLayout horizon_layout(const std::vector<int>& H) {
  if (H.empty()) throw ConfigError("horizon: empty");
  if (H[0] < 1) throw ConfigError("horizon: h1 must be at least 1");
  HorizonLayout out;
  out.H = H;
  for (size_t i = 0; i < H.size(); ++i) {
    if (H[i] < 0) throw ConfigError("horizon: negative entry");
    const int gran = static_cast<int>(i) + 1;
    for (int k = 0; k < H[i]; ++k) out.stage_of_step.push_back(gran);
    out.N += H[i];
    out.physical_len += gran * H[i];
  }
  out.h1 = H[0];
  return out;
}

void coarse_matrices(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int i,
                     Eigen::MatrixXd* Ai, Eigen::MatrixXd* Bi) {
  if (i < 1) throw ConfigError("coarse_matrices: granularity must be >= 1");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd bsum = Eigen::MatrixXd::Zero(B.rows(), B.cols());
  for (int j = 0; j < i; ++j) {
    bsum += acc * B;
    acc = A * acc;
  }
  *Ai = acc;
  *Bi = bsum;
}

void stage_costs(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int i,
                 Eigen::MatrixXd* Qi, Eigen::MatrixXd* Ri) {
  if (i < 1) throw ConfigError("stage_costs: granularity must be >= 1");
  *Qi = static_cast<double>(i) * Q;
  *Ri = static_cast<double>(i) * R;
}

std::map<int, StageSystem> stage_table(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R,
                                       const HorizonLayout& layout) {
  std::map<int, StageSystem> out;
  for (int gran : layout.stage_of_step) {
    if (out.count(gran)) continue;
    StageSystem s;
    coarse_matrices(A, B, gran, &s.A, &s.B);
    stage_costs(Q, R, gran, &s.Q, &s.R);
    out.emplace(gran, std::move(s));
  }
  return out;
}

}  // namespace netmpc
