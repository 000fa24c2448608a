#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "teamrl/common.hpp"
#include "teamrl/rng.hpp"

namespace teamrl {

// Discrete robot actions shared by both tasks.
enum Action : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3, kStop = 4 };
inline constexpr int kActionCount = 5;

struct RobotSpec {
  Eigen::VectorXd capability;    // zero entry = capability absent
  std::optional<int> id_index;   // index into the 20-robot training pool
};

struct TeamSpec {
  std::string name;
  std::vector<RobotSpec> robots;

  int size() const { return static_cast<int>(robots.size()); }

  Eigen::MatrixXd capability_matrix() const {
    const int n = size();
    const int c = n > 0 ? static_cast<int>(robots[0].capability.size()) : 0;
    Eigen::MatrixXd out(n, c);
    for (int i = 0; i < n; ++i) {
      if (robots[static_cast<size_t>(i)].capability.size() != c)
        throw EnvError(strfmt("team '%s': robots carry capability vectors of mixed dimension",
                              name.c_str()));
      out.row(i) = robots[static_cast<size_t>(i)].capability;
    }
    return out;
  }

  bool all_have_ids() const {
    for (const auto& r : robots)
      if (!r.id_index.has_value()) return false;
    return true;
  }

  // N x pool one-hot rows; requires every robot to carry a training ID.
  Eigen::MatrixXd id_matrix(int pool_size) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), pool_size);
    for (int i = 0; i < size(); ++i) {
      const auto& id = robots[static_cast<size_t>(i)].id_index;
      if (!id.has_value())
        throw UnsupportedVariantError(
            strfmt("team '%s': robot %d has no training ID; ID-based policies cannot act on it",
                   name.c_str(), i));
      if (*id < 0 || *id >= pool_size)
        throw EnvError(strfmt("team '%s': robot %d has ID %d outside pool [0, %d)", name.c_str(),
                              i, *id, pool_size));
      out(i, *id) = 1.0;
    }
    return out;
  }
};

// Which suffix the environment appends to each robot's observation.
enum class SuffixMode { kCapability, kId };

enum class EnvKind { kHmt, kHsn };

inline const char* env_kind_name(EnvKind k) { return k == EnvKind::kHmt ? "hmt" : "hsn"; }

inline EnvKind env_kind_from_name(const std::string& name) {
  if (name == "hmt") return EnvKind::kHmt;
  if (name == "hsn") return EnvKind::kHsn;
  throw ConfigError(strfmt("unknown environment '%s' (expected hmt or hsn)", name.c_str()));
}

struct Rect {
  double x_min, x_max, y_min, y_max;
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  Eigen::Vector2d center() const {
    return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
  }
};

// Per-step metric snapshot; fields outside the running task stay at defaults.
struct StepInfo {
  bool quota_filled = false;
  int pickups = 0;
  int dropoffs = 0;
  double surplus = 0.0;
  double min_pair_distance = 0.0;
  double overlap_area = 0.0;
  bool fully_connected = false;
};

struct StepResult {
  Eigen::MatrixXd observations;  // N x obs_dim, suffix included
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual EnvKind kind() const = 0;
  virtual const TeamSpec& team() const = 0;
  virtual int team_size() const = 0;
  virtual int base_obs_dim() const = 0;
  virtual int obs_dim() const = 0;  // base + suffix
  virtual int horizon() const = 0;
  virtual int current_step() const = 0;
  virtual Eigen::MatrixXd reset(RngStream& rng) = 0;
  virtual StepResult step(const std::vector<int>& actions) = 0;
};

inline void check_actions(const std::vector<int>& actions, int team_size) {
  if (static_cast<int>(actions.size()) != team_size)
    throw EnvError(strfmt("expected %d actions, got %zu", team_size, actions.size()));
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i] < 0 || actions[i] >= kActionCount)
      throw EnvError(strfmt("robot %zu: invalid action index %d", i, actions[i]));
}

}  // namespace teamrl
