#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace netmpc {

// Horizon vector H = [h_1, ..., h_S]: h_i steps whose input is held for i
// base periods. h_1 >= 1; later entries may be zero (that granularity is
// skipped). A uniform horizon is H = [N].
struct HorizonLayout {
  std::vector<int> H;
  std::vector<int> stage_of_step;  // granularity per optimization step
  int N = 0;                       // number of optimization steps
  int physical_len = 0;            // base periods covered
  int h1 = 0;

  bool uniform() const { return H.size() == 1; }
};

HorizonLayout horizon_layout(const std::vector<int>& H);

// A_i = A^i, B_i = (sum_{j<i} A^j) B: the base system composed i times under
// a held input.
void coarse_matrices(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int i,
                     Eigen::MatrixXd* Ai, Eigen::MatrixXd* Bi);

// Stage weights for granularity i are i*Q and i*R, so a held step pays for
// the base periods it spans.
void stage_costs(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, int i,
                 Eigen::MatrixXd* Qi, Eigen::MatrixXd* Ri);

struct StageSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

// One StageSystem per distinct granularity in the layout.
std::map<int, StageSystem> stage_table(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R,
                                       const HorizonLayout& layout);

}  // namespace netmpc
