#include "teamrl/trainer.hpp"

#include <cmath>

namespace teamrl {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (entropy_coef < 0.0) throw ConfigError("train.entropy_coef must be >= 0");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("train.clip must lie in (0, 1)");
  if (n_step < 1) throw ConfigError("train.n_step must be >= 1");
  if (buffer_length < 1) throw ConfigError("train.buffer_length must be >= 1");
  if (critic_refresh_interval < 1)
    throw ConfigError("train.critic_refresh_interval must be >= 1");
  if (total_env_steps < 0) throw ConfigError("train.total_env_steps must be >= 0");
  if (resample_every_episodes < 1)
    throw ConfigError("train.resample_every_episodes must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
}

void TrainLog::write_csv(std::ostream& os) const {
  os << "update,env_steps,team,mean_return,policy_loss,value_loss,entropy\n";
  for (const TrainLogRecord& r : records)
    os << strfmt("%lld,%lld,%s,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(r.update),
                 static_cast<long long>(r.env_steps), r.team.c_str(), r.mean_return,
                 r.policy_loss, r.value_loss, r.entropy);
}

bool TrainLog::same_records(const TrainLog& other) const {
  if (records.size() != other.records.size()) return false;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = other.records[i];
    if (a.update != b.update || a.env_steps != b.env_steps || a.team != b.team ||
        a.mean_return != b.mean_return || a.policy_loss != b.policy_loss ||
        a.value_loss != b.value_loss || a.entropy != b.entropy)
      return false;
  }
  return true;
}

namespace {

Eigen::MatrixXf blockdiag_ones(int blocks, int n) {
  Eigen::MatrixXf a = Eigen::MatrixXf::Zero(blocks * n, blocks * n);
  for (int b = 0; b < blocks; ++b) a.block(b * n, b * n, n, n).setOnes();
  return a;
}

// Splits suffixed observation rows into the batch fields the variant reads.
GraphBatch<float> make_graph_batch(const Eigen::MatrixXf& obs, const PolicyNet<float>& policy,
                                   int blocks) {
  GraphBatch<float> batch;
  const int base = policy.obs_dim;
  const int sfx = policy.suffix_dim();
  if (obs.cols() != base + sfx)
    throw ShapeError(strfmt("observation width %ld does not match policy layout %d+%d",
                            static_cast<long>(obs.cols()), base, sfx));
  batch.node_features = obs.leftCols(base);
  if (variant_uses_ids(policy.variant))
    batch.ids = obs.rightCols(sfx);
  else
    batch.capabilities = obs.rightCols(sfx);
  if (variant_is_gnn(policy.variant) && blocks > 1)
    batch.adjacency = blockdiag_ones(blocks, static_cast<int>(obs.rows()) / blocks);
  return batch;
}

// One row per step: the robots' suffixed observations concatenated in team order.
Eigen::MatrixXf critic_input_matrix(const RolloutBuffer& buffer) {
  const int t_max = buffer.steps;
  const int n = buffer.team_size;
  const int d = buffer.obs_dim;
  Eigen::MatrixXf in(t_max, n * d);
  for (int t = 0; t < t_max; ++t)
    for (int i = 0; i < n; ++i) in.block(t, i * d, 1, d) = buffer.obs.row(t * n + i);
  return in;
}

Eigen::VectorXf flatten_team_obs(const Eigen::MatrixXf& obs) {
  Eigen::VectorXf v(obs.rows() * obs.cols());
  for (Eigen::Index i = 0; i < obs.rows(); ++i)
    v.segment(i * obs.cols(), obs.cols()) = obs.row(i);
  return v;
}

}  // namespace

PpoLosses ppo_update(const PolicyNet<float>& policy, const CriticNet<float>& critic,
                     ParamStore<float>& actor_params, ParamStore<float>& critic_params,
                     AdamState<float>& actor_opt, AdamState<float>& critic_opt,
                     const RolloutBuffer& buffer, const AdvantageResult& adv,
                     const TrainConfig& config) {
  const int t_max = buffer.steps;
  const int n = buffer.team_size;
  const int rows = t_max * n;

  Eigen::MatrixXf action_mask = Eigen::MatrixXf::Zero(rows, kNumActions);
  for (int r = 0; r < rows; ++r) action_mask(r, buffer.actions[static_cast<size_t>(r)]) = 1.0f;
  Eigen::MatrixXf old_logp(rows, 1);
  Eigen::MatrixXf adv_rows(rows, 1);
  for (int t = 0; t < t_max; ++t)
    for (int i = 0; i < n; ++i) {
      old_logp(t * n + i, 0) = buffer.log_probs(t * n + i);
      adv_rows(t * n + i, 0) = static_cast<float>(adv.advantages(t));
    }
  const Eigen::MatrixXf critic_in = critic_input_matrix(buffer);
  const Eigen::MatrixXf returns = adv.returns.cast<float>();

  const float clip_lo = 1.0f - static_cast<float>(config.clip);
  const float clip_hi = 1.0f + static_cast<float>(config.clip);

  PpoLosses mean_losses;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Tape<float> tape;
    auto pa = BoundParams<float>::bind(tape, actor_params);
    auto pc = BoundParams<float>::bind(tape, critic_params);

    GraphBatch<float> batch = make_graph_batch(buffer.obs, policy, t_max);
    Tensor<float> logits = policy.logits(tape, pa, batch);
    Tensor<float> probs = softmax(logits);
    Tensor<float> logp = log(probs);
    Tensor<float> taken =
        matmul(mul(logp, tape.leaf(action_mask)), tape.constant(kNumActions, 1, 1.0f));
    Tensor<float> ratio = exp(sub(taken, tape.leaf(old_logp)));
    Tensor<float> adv_leaf = tape.leaf(adv_rows);
    Tensor<float> surrogate =
        minimum(mul(ratio, adv_leaf), mul(clamp(ratio, clip_lo, clip_hi), adv_leaf));
    Tensor<float> entropy = scale(sum(mul(probs, logp)), -1.0f / static_cast<float>(rows));
    Tensor<float> policy_loss = sub(scale(mean(surrogate), -1.0f),
                                    scale(entropy, static_cast<float>(config.entropy_coef)));

    Tensor<float> v = critic.value(tape, pc, tape.leaf(critic_in));
    Tensor<float> err = sub(v, tape.leaf(returns));
    Tensor<float> value_loss = mean(mul(err, err));
    Tensor<float> total = add(policy_loss, value_loss);

    const float total_value = total.value()(0, 0);
    if (!std::isfinite(total_value))
      throw Error(strfmt("ppo_update: non-finite loss at epoch %d (policy %.6g, value %.6g)",
                         epoch, static_cast<double>(policy_loss.value()(0, 0)),
                         static_cast<double>(value_loss.value()(0, 0))));
    tape.backward(total);

    std::vector<Mat<float>> actor_grads;
    actor_grads.reserve(pa.leaves.size());
    for (const auto& leaf : pa.leaves) actor_grads.push_back(tape.grad_or_zero(leaf));
    std::vector<Mat<float>> critic_grads;
    critic_grads.reserve(pc.leaves.size());
    for (const auto& leaf : pc.leaves) critic_grads.push_back(tape.grad_or_zero(leaf));
    adam_step(actor_params, actor_grads, actor_opt, static_cast<float>(config.lr));
    adam_step(critic_params, critic_grads, critic_opt, static_cast<float>(config.lr));

    mean_losses.policy_loss += static_cast<double>(policy_loss.value()(0, 0)) / config.epochs;
    mean_losses.value_loss += static_cast<double>(value_loss.value()(0, 0)) / config.epochs;
    mean_losses.entropy += static_cast<double>(entropy.value()(0, 0)) / config.epochs;
  }
  return mean_losses;
}

Trainer::Trainer(EnvKind kind, Variant variant, std::vector<TeamSpec> teams, TrainConfig config,
                 EnvSettings env_settings)
    : kind_(kind),
      variant_(variant),
      teams_(std::move(teams)),
      config_(config),
      env_settings_(env_settings),
      action_rng_(0),
      env_rng_(0) {
  config_.validate();
  if (teams_.empty()) throw ConfigError("training team list is empty");
  n_train_ = teams_[0].size();
  for (const TeamSpec& t : teams_)
    if (t.size() != n_train_)
      throw ConfigError(strfmt("training teams must share one size; '%s' has %d robots",
                               t.name.c_str(), t.size()));
  suffix_ = variant_uses_ids(variant_) ? SuffixMode::kId : SuffixMode::kCapability;
  cap_dim_ = capability_dim(kind_);

  RngStream root = RngStream::root(config_.seed);
  RngStream init_rng = root.split("init");
  action_rng_ = root.split("action");
  env_rng_ = root.split("env");

  env_ = make_env(kind_, teams_[0], suffix_, env_settings_);
  base_obs_dim_ = env_->base_obs_dim();

  policy_ = PolicyNet<float>::create(actor_params_, variant_, base_obs_dim_, cap_dim_, init_rng);
  critic_ =
      CriticNet<float>::create(critic_params_, variant_, base_obs_dim_, cap_dim_, n_train_, init_rng);
  frozen_critic_params_ = critic_params_;
  actor_opt_ = AdamState<float>::init(actor_params_);
  critic_opt_ = AdamState<float>::init(critic_params_);

  current_obs_ = env_->reset(env_rng_).cast<float>();
}

Eigen::MatrixXf Trainer::policy_logits_now(const Eigen::MatrixXf& obs) const {
  Tape<float> tape;
  auto pa = BoundParams<float>::bind(tape, actor_params_);
  GraphBatch<float> batch = make_graph_batch(obs, policy_, 1);
  return policy_.logits(tape, pa, batch).value();
}

float Trainer::frozen_value(const Eigen::MatrixXf& obs) const {
  Tape<float> tape;
  auto pc = BoundParams<float>::bind(tape, frozen_critic_params_);
  const Eigen::VectorXf flat = flatten_team_obs(obs);
  Tensor<float> input = tape.leaf(flat.transpose());
  return critic_.value(tape, pc, input).value()(0, 0);
}

void Trainer::maybe_refresh_frozen_critic() {
  if (env_steps_ % config_.critic_refresh_interval == 0)
    frozen_critic_params_ = critic_params_;
}

void Trainer::on_episode_end(double episode_return, int steps, bool quota_filled) {
  episode_stats_.push_back({episode_return, steps, quota_filled, teams_[static_cast<size_t>(team_idx_)].name});
  window_episode_returns_.push_back(episode_return);
  episodes_completed_ += 1;
  if (episodes_completed_ % config_.resample_every_episodes == 0) {
    team_idx_ = static_cast<int>((team_idx_ + 1) % teams_.size());
    env_ = make_env(kind_, teams_[static_cast<size_t>(team_idx_)], suffix_, env_settings_);
  }
  current_obs_ = env_->reset(env_rng_).cast<float>();
  episode_return_ = 0.0;
  episode_steps_ = 0;
}

RolloutBuffer Trainer::collect_rollout() {
  const int n = n_train_;
  RolloutBuffer buf;
  buf.allocate(config_.buffer_length, n, env_->obs_dim());

  for (int t = 0; t < config_.buffer_length; ++t) {
    maybe_refresh_frozen_critic();
    buf.obs.middleRows(t * n, n) = current_obs_;
    buf.team_index[static_cast<size_t>(t)] = team_idx_;

    const Eigen::MatrixXf logits = policy_logits_now(current_obs_);
    const ActionSample<float> sample = soft_action_select(logits, action_rng_);
    buf.values(t) = frozen_value(current_obs_);
    for (int i = 0; i < n; ++i) {
      buf.actions[static_cast<size_t>(t * n + i)] = sample.actions[static_cast<size_t>(i)];
      buf.log_probs(t * n + i) = sample.log_probs[static_cast<size_t>(i)];
    }

    StepResult result = env_->step(sample.actions);
    buf.rewards(t) = static_cast<float>(result.reward);
    buf.done[static_cast<size_t>(t)] = result.done ? 1 : 0;
    env_steps_ += 1;
    episode_return_ += result.reward;
    episode_steps_ += 1;

    if (result.done)
      on_episode_end(episode_return_, episode_steps_, result.info.quota_filled);
    else
      current_obs_ = result.observations.cast<float>();
  }
  buf.final_value = frozen_value(current_obs_);
  return buf;
}

TrainLog Trainer::train(const std::function<void(int64_t, const Trainer&)>& checkpoint_hook) {
  const int64_t total =
      config_.total_env_steps > 0 ? config_.total_env_steps : default_total_env_steps(kind_);
  TrainLog log;
  int64_t update = 0;

  while (env_steps_ < total) {
    window_episode_returns_.clear();
    const RolloutBuffer buf = collect_rollout();
    const AdvantageResult adv =
        compute_advantages(buf, config_.n_step, config_.normalize_advantages);
    const PpoLosses losses = ppo_update(policy_, critic_, actor_params_, critic_params_,
                                        actor_opt_, critic_opt_, buf, adv, config_);
    update += 1;

    if (!window_episode_returns_.empty()) {
      double s = 0.0;
      for (const double r : window_episode_returns_) s += r;
      last_mean_return_ = s / static_cast<double>(window_episode_returns_.size());
    }
    log.records.push_back({update, env_steps_, teams_[static_cast<size_t>(team_idx_)].name,
                           last_mean_return_, losses.policy_loss, losses.value_loss,
                           losses.entropy});

    if (checkpoint_hook && config_.checkpoint_interval > 0 &&
        env_steps_ / config_.checkpoint_interval !=
            (env_steps_ - config_.buffer_length) / config_.checkpoint_interval)
      checkpoint_hook(env_steps_, *this);
  }
  log.episodes = episode_stats_;
  return log;
}

}  // namespace teamrl
