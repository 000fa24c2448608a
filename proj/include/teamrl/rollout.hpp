#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "teamrl/common.hpp"

namespace teamrl {

// Fixed-horizon transition store for one PPO update cycle. Row t*N+i of
// obs/log_probs/actions belongs to robot i at step t; rewards, values and
// done flags are per team step. Values come from the frozen bootstrap
// critic at collection time; final_value bootstraps windows that run past
// the buffer end.
struct RolloutBuffer {
  int steps = 0;
  int team_size = 0;
  int obs_dim = 0;  // suffix included

  Eigen::MatrixXf obs;
  std::vector<int> actions;
  Eigen::VectorXf log_probs;
  Eigen::VectorXf rewards;
  Eigen::VectorXf values;
  std::vector<uint8_t> done;
  std::vector<int> team_index;
  float final_value = 0.0f;

  void allocate(int n_steps, int n_robots, int obs_width) {
    steps = n_steps;
    team_size = n_robots;
    obs_dim = obs_width;
    obs.setZero(n_steps * n_robots, obs_width);
    actions.assign(static_cast<size_t>(n_steps * n_robots), 0);
    log_probs.setZero(n_steps * n_robots);
    rewards.setZero(n_steps);
    values.setZero(n_steps);
    done.assign(static_cast<size_t>(n_steps), 0);
    team_index.assign(static_cast<size_t>(n_steps), 0);
  }
};

struct AdvantageResult {
  Eigen::VectorXd returns;         // n-step bootstrapped G_t
  Eigen::VectorXd advantages;      // normalized to zero mean / unit variance
  Eigen::VectorXd advantages_raw;  // G_t - V(s_t)
};

// n-step returns truncated at done (a done step contributes its reward and
// nothing beyond it -- no bootstrap across episode boundaries).
AdvantageResult compute_advantages(const RolloutBuffer& buffer, int n_step,
                                   bool normalize = true);

}  // namespace teamrl
