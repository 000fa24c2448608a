#include "teamrl/hsn.hpp"

#include <algorithm>
#include <cmath>

#include "teamrl/metrics.hpp"
#include "teamrl/nets.hpp"

namespace teamrl {

namespace {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 2>;

void validate_team(const TeamSpec& team) {
  if (team.size() < 1 || team.size() > 32)
    throw EnvError(strfmt("hsn: team size %d outside [1, 32]", team.size()));
  for (int i = 0; i < team.size(); ++i) {
    const auto& cap = team.robots[static_cast<size_t>(i)].capability;
    if (cap.size() != 1)
      throw EnvError(strfmt("hsn: robot %d needs a scalar sensing radius", i));
    if (cap(0) <= 0.0 || cap(0) > 1.0)
      throw EnvError(strfmt("hsn: robot %d sensing radius %.4f outside (0, 1]", i, cap(0)));
  }
}

Eigen::Vector2d clamp_to(const Rect& arena, const Eigen::Vector2d& p) {
  return {std::clamp(p.x(), arena.x_min, arena.x_max),
          std::clamp(p.y(), arena.y_min, arena.y_max)};
}

}  // namespace

double hsn_pair_reward(const Eigen::Vector2d& p_i, const Eigen::Vector2d& p_j, double c_i,
                       double c_j) {
  const double gap = (p_i - p_j).norm() - (c_i + c_j);
  if (gap < 0.0) return -0.9 * std::abs(gap) + 0.05;
  return -1.1 * std::abs(gap) - 0.05;
}

double hsn_team_reward(const Positions& positions, const Eigen::VectorXd& radii) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i)
    for (Eigen::Index j = i + 1; j < positions.rows(); ++j)
      total += hsn_pair_reward(positions.row(i), positions.row(j), radii(i), radii(j));
  return total;
}

Positions safety_filter(const Positions& positions, const Positions& proposed, const Rect& arena,
                        double safety_distance) {
  const Eigen::Index n = positions.rows();
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);

  const auto final_pos = [&](Eigen::Index i, double extra = 1.0) -> Eigen::Vector2d {
    return clamp_to(arena, positions.row(i).transpose() +
                               extra * scale(i) * proposed.row(i).transpose());
  };
  const auto pair_ok = [&](Eigen::Index i, Eigen::Index j, double alpha) {
    return (final_pos(i, alpha) - final_pos(j, alpha)).norm() >= safety_distance;
  };

  for (int sweep = 0; sweep < 10; ++sweep) {
    bool adjusted = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (pair_ok(i, j, 1.0)) continue;
        // alpha = 0 recovers the current (separated) positions
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 20; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (pair_ok(i, j, mid))
            lo = mid;
          else
            hi = mid;
        }
        scale(i) *= lo;
        scale(j) *= lo;
        adjusted = true;
      }
    }
    if (!adjusted) break;
  }

  // freeze any pair the sweeps could not separate
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    bool violation = false;
    for (Eigen::Index i = 0; i < n && !violation; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (!pair_ok(i, j, 1.0)) {
          scale(i) = 0.0;
          scale(j) = 0.0;
          violation = true;
          break;
        }
    if (!violation) break;
  }

  return scale.asDiagonal() * proposed;
}

HsnEnv::HsnEnv(TeamSpec team, SuffixMode suffix, HsnConfig config)
    : team_(std::move(team)), suffix_(suffix), config_(config) {
  validate_team(team_);
  radii_ = team_.capability_matrix().col(0);
  if (suffix_ == SuffixMode::kCapability) {
    suffix_rows_ = team_.capability_matrix();
    suffix_dim_ = 1;
  } else {
    suffix_rows_ = team_.id_matrix(kIdPoolSize);
    suffix_dim_ = kIdPoolSize;
  }
  positions_.setZero(team_.size(), 2);
}

Eigen::MatrixXd HsnEnv::reset(RngStream& rng) {
  const int n = team_.size();
  bool placed = false;
  for (int attempt = 0; attempt < config_.max_place_attempts && !placed; ++attempt) {
    for (int i = 0; i < n; ++i) {
      positions_(i, 0) = rng.uniform(config_.arena.x_min, config_.arena.x_max);
      positions_(i, 1) = rng.uniform(config_.arena.y_min, config_.arena.y_max);
    }
    placed = n == 1 || min_pairwise_distance(positions_) >= config_.min_start_distance;
  }
  if (!placed)
    throw EnvError(strfmt(
        "hsn: could not place %d robots at least %.2f m apart within %d attempts", n,
        config_.min_start_distance, config_.max_place_attempts));
  step_ = 0;
  done_ = false;
  return observations();
}

StepResult HsnEnv::step(const std::vector<int>& actions) {
  const int n = team_.size();
  check_actions(actions, n);
  if (done_) throw EnvError("hsn: step() after episode end; call reset()");

  Positions proposed(n, 2);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d delta{0.0, 0.0};
    switch (actions[static_cast<size_t>(i)]) {
      case kLeft: delta.x() = -config_.step_size; break;
      case kRight: delta.x() = config_.step_size; break;
      case kUp: delta.y() = config_.step_size; break;
      case kDown: delta.y() = -config_.step_size; break;
      case kStop: break;
    }
    proposed.row(i) = delta;
  }

  const Positions adjusted =
      safety_filter(positions_, proposed, config_.arena, config_.safety_distance);
  for (int i = 0; i < n; ++i)
    positions_.row(i) = clamp_to(config_.arena, positions_.row(i).transpose() +
                                                    adjusted.row(i).transpose());

  step_ += 1;
  done_ = step_ >= config_.horizon;

  StepResult result;
  result.observations = observations();
  result.reward = hsn_team_reward(positions_, radii_);
  result.done = done_;
  result.info.min_pair_distance = n > 1 ? min_pairwise_distance(positions_) : 0.0;
  result.info.overlap_area = pairwise_overlap(positions_, radii_);
  result.info.fully_connected = connectivity_check(positions_, radii_);
  return result;
}

Eigen::VectorXd HsnEnv::observe(int robot) const {
  if (robot < 0 || robot >= team_.size())
    throw EnvError(strfmt("hsn: robot index %d out of range", robot));
  Eigen::VectorXd obs(obs_dim());
  obs.segment<2>(0) = positions_.row(robot);
  obs.segment(2, suffix_dim_) = suffix_rows_.row(robot);
  return obs;
}

Eigen::MatrixXd HsnEnv::observations() const {
  Eigen::MatrixXd out(team_.size(), obs_dim());
  for (int i = 0; i < team_.size(); ++i) out.row(i) = observe(i);
  return out;
}

}  // namespace teamrl
