#pragma once

#include <array>
#include <optional>

#include "teamrl/env.hpp"

namespace teamrl {

// Material indices used throughout: 0 = lumber, 1 = concrete.
inline constexpr int kLumber = 0;
inline constexpr int kConcrete = 1;

struct HmtConfig {
  Rect arena{-1.0, 1.0, -1.0, 1.0};
  Rect lumber_depot{-1.0, -0.6, 0.2, 1.0};
  Rect concrete_depot{-1.0, -0.6, -1.0, -0.2};
  Rect construction_site{0.6, 1.0, -0.4, 0.4};
  double step_size = 0.05;
  int horizon = 500;
  // Fixed (lumber, concrete) quota instead of the random integer draw.
  std::optional<std::array<double, 2>> quota_override;
};

// Pickup / dropoff record kept per episode; lets the cumulative reward be
// reconstructed independently of the env's own accounting.
struct HmtEvent {
  enum class Kind { kPickup, kDropoff };
  Kind kind;
  int step = 0;
  int robot = 0;
  int material = 0;
  double amount = 0.0;           // loaded (pickup) or delivered (dropoff)
  double quota = 0.0;            // quota for this material
  double delivered_before = 0.0; // team total before this dropoff
};

// Material transport: load at the matching depot, deliver to the
// construction site, fill both quotas with minimal over-provision.
class HmtEnv : public Env {
 public:
  HmtEnv(TeamSpec team, SuffixMode suffix, HmtConfig config = {});

  EnvKind kind() const override { return EnvKind::kHmt; }
  const TeamSpec& team() const override { return team_; }
  int team_size() const override { return team_.size(); }
  int base_obs_dim() const override { return 13; }
  int obs_dim() const override { return 13 + suffix_dim_; }
  int horizon() const override { return config_.horizon; }
  int current_step() const override { return step_; }

  Eigen::MatrixXd reset(RngStream& rng) override;
  StepResult step(const std::vector<int>& actions) override;

  Eigen::VectorXd observe(int robot) const;

  const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions() const { return positions_; }
  const Eigen::Matrix<double, Eigen::Dynamic, 2>& carried() const { return carried_; }
  const Eigen::Vector2d& quota() const { return quota_; }
  const Eigen::Vector2d& delivered() const { return delivered_; }
  bool quota_filled() const;
  double total_picked_up() const { return total_picked_up_; }

  const std::vector<HmtEvent>& events() const { return events_; }
  int penalized_robot_steps() const { return penalized_robot_steps_; }
  double episode_reward() const { return episode_reward_; }

  const HmtConfig& config() const { return config_; }

  static constexpr double kPickupReward = 0.25;
  static constexpr double kDropoffReward = 0.75;
  static constexpr double kSurplusPenalty = 0.10;
  static constexpr double kTimePenalty = 0.005;

 private:
  Eigen::MatrixXd observations() const;
  void place_robots(RngStream& rng);

  TeamSpec team_;
  SuffixMode suffix_;
  int suffix_dim_;
  HmtConfig config_;
  Eigen::MatrixXd suffix_rows_;  // N x suffix_dim, fixed per team

  Eigen::Matrix<double, Eigen::Dynamic, 2> positions_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> velocities_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> carried_;
  Eigen::Vector2d quota_{0.0, 0.0};
  Eigen::Vector2d delivered_{0.0, 0.0};
  int step_ = 0;
  bool done_ = true;

  std::vector<HmtEvent> events_;
  int penalized_robot_steps_ = 0;
  double episode_reward_ = 0.0;
  double total_picked_up_ = 0.0;
};

}  // namespace teamrl
