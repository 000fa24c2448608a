#pragma once

#include "teamrl/env.hpp"

namespace teamrl {

struct HsnConfig {
  Rect arena{-1.6, 1.6, -1.0, 1.0};
  double step_size = 0.19;          // ~21 cm/s for just under a second
  double min_start_distance = 0.30;
  double safety_distance = 0.17;
  int horizon = 60;
  int max_place_attempts = 10000;
};

// Piecewise pair reward on the gap D = |p_i - p_j| - (c_i + c_j):
// overlapping pairs pay 0.9|D| - 0.05, separated pairs pay 1.1|D| + 0.05.
double hsn_pair_reward(const Eigen::Vector2d& p_i, const Eigen::Vector2d& p_j, double c_i,
                       double c_j);

// Shared team reward: sum of pair rewards over i < j.
double hsn_team_reward(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                       const Eigen::VectorXd& radii);

// Scales violating pairs' displacements by a common factor (largest feasible
// in [0, 1], 20-step binary search per pair, up to 10 sweeps to fixpoint)
// so that post-step arena-clamped distances stay >= safety_distance.
// Remaining offenders are frozen in place.
Eigen::Matrix<double, Eigen::Dynamic, 2> safety_filter(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& proposed, const Rect& arena,
    double safety_distance);

// Sensor coverage: spread out to touch neighbors' sensing disks without
// overlap, keeping the network connected.
class HsnEnv : public Env {
 public:
  HsnEnv(TeamSpec team, SuffixMode suffix, HsnConfig config = {});

  EnvKind kind() const override { return EnvKind::kHsn; }
  const TeamSpec& team() const override { return team_; }
  int team_size() const override { return team_.size(); }
  int base_obs_dim() const override { return 2; }
  int obs_dim() const override { return 2 + suffix_dim_; }
  int horizon() const override { return config_.horizon; }
  int current_step() const override { return step_; }

  Eigen::MatrixXd reset(RngStream& rng) override;
  StepResult step(const std::vector<int>& actions) override;

  Eigen::VectorXd observe(int robot) const;

  const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions() const { return positions_; }
  const Eigen::VectorXd& radii() const { return radii_; }
  const HsnConfig& config() const { return config_; }

 private:
  Eigen::MatrixXd observations() const;

  TeamSpec team_;
  SuffixMode suffix_;
  int suffix_dim_;
  HsnConfig config_;
  Eigen::MatrixXd suffix_rows_;
  Eigen::VectorXd radii_;

  Eigen::Matrix<double, Eigen::Dynamic, 2> positions_;
  int step_ = 0;
  bool done_ = true;
};

}  // namespace teamrl
