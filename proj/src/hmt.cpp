#include "teamrl/hmt.hpp"

#include <algorithm>
#include <cmath>

#include "teamrl/nets.hpp"

namespace teamrl {

namespace {

void validate_team(const TeamSpec& team) {
  if (team.size() < 1 || team.size() > 32)
    throw EnvError(strfmt("hmt: team size %d outside [1, 32]", team.size()));
  for (int i = 0; i < team.size(); ++i) {
    const auto& cap = team.robots[static_cast<size_t>(i)].capability;
    if (cap.size() != 2)
      throw EnvError(strfmt("hmt: robot %d needs a (lumber, concrete) capacity pair", i));
    if (cap.minCoeff() < 0.0 || cap.maxCoeff() > 1.0)
      throw EnvError(strfmt("hmt: robot %d capacities must lie in [0, 1]", i));
  }
}

}  // namespace

HmtEnv::HmtEnv(TeamSpec team, SuffixMode suffix, HmtConfig config)
    : team_(std::move(team)), suffix_(suffix), config_(config) {
  validate_team(team_);
  if (suffix_ == SuffixMode::kCapability) {
    suffix_rows_ = team_.capability_matrix();
    suffix_dim_ = 2;
  } else {
    suffix_rows_ = team_.id_matrix(kIdPoolSize);
    suffix_dim_ = kIdPoolSize;
  }
  const int n = team_.size();
  positions_.setZero(n, 2);
  velocities_.setZero(n, 2);
  carried_.setZero(n, 2);
}

void HmtEnv::place_robots(RngStream& rng) {
  const Rect& site = config_.construction_site;
  for (int i = 0; i < team_.size(); ++i) {
    positions_(i, 0) = rng.uniform(site.x_min, site.x_max);
    positions_(i, 1) = rng.uniform(site.y_min, site.y_max);
  }
}

Eigen::MatrixXd HmtEnv::reset(RngStream& rng) {
  const int n = team_.size();
  if (config_.quota_override.has_value()) {
    quota_ << (*config_.quota_override)[0], (*config_.quota_override)[1];
  } else {
    const auto lo = static_cast<int64_t>(std::ceil(0.5 * n));
    const auto hi = static_cast<int64_t>(std::floor(2.0 * n));
    quota_(kLumber) = static_cast<double>(rng.uniform_int(lo, hi));
    quota_(kConcrete) = static_cast<double>(rng.uniform_int(lo, hi));
  }
  place_robots(rng);
  velocities_.setZero();
  carried_.setZero();
  delivered_.setZero();
  step_ = 0;
  done_ = false;
  events_.clear();
  penalized_robot_steps_ = 0;
  episode_reward_ = 0.0;
  total_picked_up_ = 0.0;
  return observations();
}

bool HmtEnv::quota_filled() const {
  return delivered_(kLumber) >= quota_(kLumber) && delivered_(kConcrete) >= quota_(kConcrete);
}

StepResult HmtEnv::step(const std::vector<int>& actions) {
  const int n = team_.size();
  check_actions(actions, n);
  if (done_) throw EnvError("hmt: step() after episode end; call reset()");

  step_ += 1;
  double reward = 0.0;
  StepInfo info;

  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d delta{0.0, 0.0};
    switch (actions[static_cast<size_t>(i)]) {
      case kLeft: delta.x() = -config_.step_size; break;
      case kRight: delta.x() = config_.step_size; break;
      case kUp: delta.y() = config_.step_size; break;
      case kDown: delta.y() = -config_.step_size; break;
      case kStop: break;
    }
    const Eigen::Vector2d before = positions_.row(i);
    Eigen::Vector2d after = before + delta;
    after.x() = std::clamp(after.x(), config_.arena.x_min, config_.arena.x_max);
    after.y() = std::clamp(after.y(), config_.arena.y_min, config_.arena.y_max);
    positions_.row(i) = after;
    velocities_.row(i) = after - before;
  }

  // pickups, then dropoffs cannot both fire for one robot: zones are disjoint
  for (int i = 0; i < n; ++i) {
    const double x = positions_(i, 0);
    const double y = positions_(i, 1);
    const bool empty = carried_(i, kLumber) == 0.0 && carried_(i, kConcrete) == 0.0;

    int depot_material = -1;
    if (config_.lumber_depot.contains(x, y)) depot_material = kLumber;
    else if (config_.concrete_depot.contains(x, y)) depot_material = kConcrete;

    if (depot_material >= 0 && empty && delivered_(depot_material) < quota_(depot_material)) {
      const double capacity = team_.robots[static_cast<size_t>(i)].capability(depot_material);
      if (capacity > 0.0) {
        carried_(i, depot_material) = capacity;
        total_picked_up_ += capacity;
        reward += kPickupReward;
        info.pickups += 1;
        events_.push_back({HmtEvent::Kind::kPickup, step_, i, depot_material, capacity,
                           quota_(depot_material), delivered_(depot_material)});
      }
      continue;
    }

    if (config_.construction_site.contains(x, y) && !empty) {
      const int material = carried_(i, kLumber) > 0.0 ? kLumber : kConcrete;
      const double amount = carried_(i, material);
      const double before = delivered_(material);
      if (before < quota_(material)) reward += kDropoffReward;
      const double surplus =
          std::max(0.0, before + amount - quota_(material)) - std::max(0.0, before - quota_(material));
      reward -= kSurplusPenalty * surplus;
      info.surplus += surplus;
      info.dropoffs += 1;
      events_.push_back(
          {HmtEvent::Kind::kDropoff, step_, i, material, amount, quota_(material), before});
      delivered_(material) += amount;
      carried_(i, material) = 0.0;
    }
  }

  if (!quota_filled()) {
    reward -= kTimePenalty * n;
    penalized_robot_steps_ += n;
  }

  info.quota_filled = quota_filled();
  done_ = info.quota_filled || step_ >= config_.horizon;
  episode_reward_ += reward;

  StepResult result;
  result.observations = observations();
  result.reward = reward;
  result.done = done_;
  result.info = info;
  return result;
}

Eigen::VectorXd HmtEnv::observe(int robot) const {
  if (robot < 0 || robot >= team_.size())
    throw EnvError(strfmt("hmt: robot index %d out of range", robot));
  Eigen::VectorXd obs(obs_dim());
  const Eigen::Vector2d pos = positions_.row(robot);
  obs.segment<2>(0) = pos;
  obs.segment<2>(2) = velocities_.row(robot);
  obs.segment<2>(4) = carried_.row(robot);
  obs(6) = (pos - config_.lumber_depot.center()).norm();
  obs(7) = (pos - config_.concrete_depot.center()).norm();
  obs(8) = (pos - config_.construction_site.center()).norm();
  obs.segment<2>(9) = quota_;
  obs.segment<2>(11) = delivered_;
  obs.segment(13, suffix_dim_) = suffix_rows_.row(robot);
  return obs;
}

Eigen::MatrixXd HmtEnv::observations() const {
  Eigen::MatrixXd out(team_.size(), obs_dim());
  for (int i = 0; i < team_.size(); ++i) out.row(i) = observe(i);
  return out;
}

}  // namespace teamrl
