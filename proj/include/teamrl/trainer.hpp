#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "teamrl/adam.hpp"
#include "teamrl/factory.hpp"
#include "teamrl/nets.hpp"
#include "teamrl/rollout.hpp"

namespace teamrl {

struct TrainConfig {
  double lr = 0.0005;
  double entropy_coef = 0.01;
  int epochs = 4;
  double clip = 0.2;
  int n_step = 5;
  int buffer_length = 64;
  int64_t critic_refresh_interval = 200;  // env steps between frozen-critic syncs
  int64_t total_env_steps = 0;            // 0 -> per-environment default
  int resample_every_episodes = 10;
  int64_t checkpoint_interval = 0;  // env steps; 0 -> final checkpoint only
  bool normalize_advantages = true;
  uint64_t seed = 0;

  void validate() const;
};

struct TrainLogRecord {
  int64_t update = 0;
  int64_t env_steps = 0;
  std::string team;
  double mean_return = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

struct EpisodeStat {
  double episode_return = 0.0;
  int steps = 0;
  bool quota_filled = false;  // HMT only
  std::string team;
};

struct TrainLog {
  std::vector<TrainLogRecord> records;
  std::vector<EpisodeStat> episodes;

  void write_csv(std::ostream& os) const;
  bool same_records(const TrainLog& other) const;
};

struct PpoLosses {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// One full PPO improvement: `epochs` full-batch passes over the buffer with
// the clipped surrogate, per-robot terms flattened into one batch, Adam on
// both networks. Throws on non-finite losses.
PpoLosses ppo_update(const PolicyNet<float>& policy, const CriticNet<float>& critic,
                     ParamStore<float>& actor_params, ParamStore<float>& critic_params,
                     AdamState<float>& actor_opt, AdamState<float>& critic_opt,
                     const RolloutBuffer& buffer, const AdvantageResult& adv,
                     const TrainConfig& config);

// Centralized-training / decentralized-execution PPO with parameter sharing
// and round-robin team resampling.
class Trainer {
 public:
  Trainer(EnvKind kind, Variant variant, std::vector<TeamSpec> teams, TrainConfig config,
          EnvSettings env_settings = {});

  // Runs to total_env_steps. checkpoint_hook fires at every checkpoint
  // interval boundary and once at the end.
  TrainLog train(const std::function<void(int64_t, const Trainer&)>& checkpoint_hook = {});

  // Collects one buffer with soft action selection, refreshing the frozen
  // critic on its interval. Exposed for tests.
  RolloutBuffer collect_rollout();

  const ParamStore<float>& actor_params() const { return actor_params_; }
  const ParamStore<float>& critic_params() const { return critic_params_; }
  const PolicyNet<float>& policy() const { return policy_; }
  EnvKind env_kind() const { return kind_; }
  Variant variant() const { return variant_; }
  int base_obs_dim() const { return base_obs_dim_; }
  int n_train() const { return n_train_; }
  int64_t env_steps() const { return env_steps_; }
  const std::vector<EpisodeStat>& episode_stats() const { return episode_stats_; }

 private:
  void maybe_refresh_frozen_critic();
  void on_episode_end(double episode_return, int steps, bool quota_filled);
  float frozen_value(const Eigen::MatrixXf& obs) const;
  Eigen::MatrixXf policy_logits_now(const Eigen::MatrixXf& obs) const;

  EnvKind kind_;
  Variant variant_;
  std::vector<TeamSpec> teams_;
  TrainConfig config_;
  EnvSettings env_settings_;
  SuffixMode suffix_;
  int base_obs_dim_ = 0;
  int cap_dim_ = 0;
  int n_train_ = 0;

  ParamStore<float> actor_params_;
  ParamStore<float> critic_params_;
  ParamStore<float> frozen_critic_params_;
  PolicyNet<float> policy_;
  CriticNet<float> critic_;
  AdamState<float> actor_opt_;
  AdamState<float> critic_opt_;

  RngStream action_rng_;
  RngStream env_rng_;

  std::unique_ptr<Env> env_;
  Eigen::MatrixXf current_obs_;
  int team_idx_ = 0;
  int64_t episodes_completed_ = 0;
  int64_t env_steps_ = 0;
  double episode_return_ = 0.0;
  int episode_steps_ = 0;

  std::vector<double> window_episode_returns_;
  double last_mean_return_ = 0.0;
  std::vector<EpisodeStat> episode_stats_;
};

}  // namespace teamrl
