#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "netmpc/closed_loop.hpp"
#include "netmpc/lti_model.hpp"
#include "netmpc/plant.hpp"

namespace netmpc {

// Parsed and validated experiment description. The controller model and the
// truth plant both derive from the `model` section: linear kinds run the
// model matrices as ground truth, the cart-pole kind pairs the linearized
// model with the nonlinear integrator.
struct ExperimentConfig {
  std::string name;  // config file stem, used in summary tables
  std::string model_kind;
  bool continuous_time = false;  // sampling time is a free parameter

  LtiModel model;
  Plant plant;
  int substeps = 4;

  std::vector<int> horizon;
  Eigen::MatrixXd q_cost, r_cost, t_cost;
  double lambda = 0.99;

  int n = 1;
  long episode_len = 0;
  Eigen::VectorXd x0;
  ReferenceSchedule ref;

  ChannelSpec uplink, downlink;
  bool correlated = false;
  int guard_limit = 0;
  double divergence_bound = 1e6;
  double consistency_tol = 1e-9;

  std::vector<uint64_t> seeds;
  std::string output_dir = "out";

  // Sweep axes (possibly empty): cartesian product over the values.
  struct SweepAxis {
    std::string axis;  // "n", "horizon" or "loss"
    nlohmann::json values;
  };
  std::vector<SweepAxis> sweep;

  uint64_t hash = 0;  // over the canonical effective config
  // Physical-plant fingerprint; comparisons require equal fingerprints.
  nlohmann::json plant_identity;
};

ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::string& name);
ExperimentConfig load_config(const std::string& path);

EpisodeOptions episode_options(const ExperimentConfig& cfg, uint64_t seed);

uint64_t fnv1a64(const std::string& bytes);

}  // namespace netmpc
