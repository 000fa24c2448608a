#include "teamrl/selftest.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "teamrl/evalrun.hpp"
#include "teamrl/gradcheck.hpp"
#include "teamrl/metrics.hpp"
#include "teamrl/teams.hpp"
#include "teamrl/trainer.hpp"

namespace teamrl::selftest {

namespace {

constexpr int kCheckNodes = 3;
constexpr int kCheckObsDim = 6;
constexpr int kCheckCapDim = 2;

template <typename S>
Mat<S> random_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng, double lo, double hi) {
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.uniform(lo, hi));
  return m;
}

GraphBatch<double> random_batch(RngStream& rng) {
  GraphBatch<double> batch;
  batch.node_features = random_matrix<double>(kCheckNodes, kCheckObsDim, rng, -1.0, 1.0);
  batch.capabilities = random_matrix<double>(kCheckNodes, kCheckCapDim, rng, 0.0, 1.0);
  batch.ids = Mat<double>::Zero(kCheckNodes, kIdPoolSize);
  for (int i = 0; i < kCheckNodes; ++i)
    batch.ids(i, static_cast<int>(rng.uniform_int(0, kIdPoolSize - 1))) = 1.0;
  return batch;
}

}  // namespace

double policy_gradcheck_error(Variant variant, uint64_t seed) {
  RngStream rng = RngStream::root(seed).split("gradcheck");
  ParamStore<double> params;
  const PolicyNet<double> net =
      PolicyNet<double>::create(params, variant, kCheckObsDim, kCheckCapDim, rng);
  const GraphBatch<double> batch = random_batch(rng);
  std::vector<int> targets;
  for (int i = 0; i < kCheckNodes; ++i)
    targets.push_back(static_cast<int>(rng.uniform_int(0, kNumActions - 1)));
  Mat<double> mask = Mat<double>::Zero(kCheckNodes, kNumActions);
  for (int i = 0; i < kCheckNodes; ++i) mask(i, targets[static_cast<size_t>(i)]) = 1.0;

  const LossBuilder<double> loss = [&](Tape<double>& tape, const BoundParams<double>& p) {
    Tensor<double> logits = net.logits(tape, p, batch);
    Tensor<double> logp = log(softmax(logits));
    // mean cross-entropy over the 3 nodes
    return scale(sum(mul(logp, tape.leaf(mask))), -1.0 / kCheckNodes);
  };
  return finite_diff_check<double>(loss, params, 1e-5);
}

double critic_gradcheck_error(uint64_t seed) {
  RngStream rng = RngStream::root(seed).split("gradcheck_critic");
  ParamStore<double> params;
  const CriticNet<double> net = CriticNet<double>::create(params, Variant::kCaCcGnn, kCheckObsDim,
                                                          kCheckCapDim, kCheckNodes, rng);
  const Mat<double> input = random_matrix<double>(
      1, kCheckNodes * (kCheckObsDim + kCheckCapDim), rng, -1.0, 1.0);
  const LossBuilder<double> loss = [&](Tape<double>& tape, const BoundParams<double>& p) {
    return net.value(tape, p, tape.leaf(input));
  };
  return finite_diff_check<double>(loss, params, 1e-5);
}

double oracle_hsn_reward(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const Eigen::VectorXd& radii) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i)
    for (Eigen::Index j = i + 1; j < positions.rows(); ++j) {
      const double dx = positions(i, 0) - positions(j, 0);
      const double dy = positions(i, 1) - positions(j, 1);
      const double gap = std::sqrt(dx * dx + dy * dy) - (radii(i) + radii(j));
      total += gap < 0.0 ? (0.05 - 0.9 * std::fabs(gap)) : (-0.05 - 1.1 * std::fabs(gap));
    }
  return total;
}

double oracle_overlap_mc(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const Eigen::VectorXd& radii, int samples_per_pair, RngStream& rng) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.rows(); ++i)
    for (Eigen::Index j = i + 1; j < positions.rows(); ++j) {
      const double lo_x = std::max(positions(i, 0) - radii(i), positions(j, 0) - radii(j));
      const double hi_x = std::min(positions(i, 0) + radii(i), positions(j, 0) + radii(j));
      const double lo_y = std::max(positions(i, 1) - radii(i), positions(j, 1) - radii(j));
      const double hi_y = std::min(positions(i, 1) + radii(i), positions(j, 1) + radii(j));
      if (lo_x >= hi_x || lo_y >= hi_y) continue;
      int64_t hits = 0;
      for (int s = 0; s < samples_per_pair; ++s) {
        const double x = rng.uniform(lo_x, hi_x);
        const double y = rng.uniform(lo_y, hi_y);
        const double di = (x - positions(i, 0)) * (x - positions(i, 0)) +
                          (y - positions(i, 1)) * (y - positions(i, 1));
        const double dj = (x - positions(j, 0)) * (x - positions(j, 0)) +
                          (y - positions(j, 1)) * (y - positions(j, 1));
        if (di <= radii(i) * radii(i) && dj <= radii(j) * radii(j)) ++hits;
      }
      total += (hi_x - lo_x) * (hi_y - lo_y) * static_cast<double>(hits) /
               static_cast<double>(samples_per_pair);
    }
  return total;
}

double hmt_reconstruct_episode_reward(const std::vector<HmtEvent>& events,
                                      const Eigen::Vector2d& quota, int team_size,
                                      int episode_steps) {
  double reward = 0.0;
  for (const HmtEvent& e : events) {
    if (e.kind == HmtEvent::Kind::kPickup) {
      reward += HmtEnv::kPickupReward;
    } else {
      if (e.delivered_before < e.quota) reward += HmtEnv::kDropoffReward;
      const double surplus = std::max(0.0, e.delivered_before + e.amount - e.quota) -
                             std::max(0.0, e.delivered_before - e.quota);
      reward -= HmtEnv::kSurplusPenalty * surplus;
    }
  }
  for (int t = 1; t <= episode_steps; ++t) {
    double delivered[2] = {0.0, 0.0};
    for (const HmtEvent& e : events)
      if (e.kind == HmtEvent::Kind::kDropoff && e.step <= t) delivered[e.material] += e.amount;
    if (delivered[kLumber] < quota(kLumber) || delivered[kConcrete] < quota(kConcrete))
      reward -= HmtEnv::kTimePenalty * team_size;
  }
  return reward;
}

namespace {

SuiteResult gradient_suite(uint64_t seed) {
  SuiteResult r{"gradient_check", true, ""};
  std::ostringstream detail;
  for (const Variant v : {Variant::kIdMlp, Variant::kIdGnn, Variant::kCaMlp, Variant::kCaGnn,
                          Variant::kCaCcGnn}) {
    const double err = policy_gradcheck_error(v, seed);
    detail << variant_name(v) << "=" << strfmt("%.2e", err) << " ";
    if (!(err < 1e-4)) r.passed = false;
  }
  const double critic_err = critic_gradcheck_error(seed);
  detail << "critic=" << strfmt("%.2e", critic_err);
  if (!(critic_err < 1e-4)) r.passed = false;
  r.detail = detail.str();
  return r;
}

SuiteResult hsn_reward_suite(uint64_t seed, int states) {
  SuiteResult r{"hsn_reward_oracle", true, ""};
  RngStream rng = RngStream::root(seed).split("hsn_oracle");
  double max_err = 0.0;
  int done_states = 0;
  while (done_states < states) {
    const int n = static_cast<int>(rng.uniform_int(2, 6));
    TeamSpec team;
    team.name = "oracle";
    for (int i = 0; i < n; ++i) team.robots.push_back(make_hsn_robot(rng.uniform(0.2, 0.6)));
    HsnEnv env(team, SuffixMode::kCapability);
    RngStream reset_rng = rng.split(static_cast<uint64_t>(done_states));
    env.reset(reset_rng);
    for (int s = 0; s < 10 && done_states < states; ++s, ++done_states) {
      std::vector<int> actions;
      for (int i = 0; i < n; ++i) actions.push_back(static_cast<int>(rng.uniform_int(0, 4)));
      const StepResult result = env.step(actions);
      max_err = std::max(max_err,
                         std::fabs(result.reward - oracle_hsn_reward(env.positions(), env.radii())));
    }
  }
  // boundary: zero gap must land on the separated branch exactly
  const double boundary =
      hsn_pair_reward(Eigen::Vector2d{0, 0}, Eigen::Vector2d{1, 0}, 0.4, 0.6);
  if (boundary != -0.05) r.passed = false;
  if (!(max_err < 1e-9)) r.passed = false;
  r.detail = strfmt("max_err=%.2e boundary=%.6f", max_err, boundary);
  return r;
}

SuiteResult hmt_decomposition_suite(uint64_t seed, int episodes) {
  SuiteResult r{"hmt_reward_decomposition", true, ""};
  RngStream rng = RngStream::root(seed).split("hmt_oracle");
  double max_err = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const int n = static_cast<int>(rng.uniform_int(2, 5));
    TeamSpec team;
    team.name = "oracle";
    for (int i = 0; i < n; ++i)
      team.robots.push_back(make_hmt_robot(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)));
    HmtConfig cfg;
    cfg.horizon = 120;
    HmtEnv env(team, SuffixMode::kCapability, cfg);
    RngStream reset_rng = rng.split(static_cast<uint64_t>(e));
    env.reset(reset_rng);
    bool done = false;
    while (!done) {
      std::vector<int> actions;
      for (int i = 0; i < n; ++i) actions.push_back(static_cast<int>(rng.uniform_int(0, 4)));
      done = env.step(actions).done;
    }
    const double rebuilt = hmt_reconstruct_episode_reward(env.events(), env.quota(), n,
                                                          env.current_step());
    max_err = std::max(max_err, std::fabs(rebuilt - env.episode_reward()));
  }
  if (!(max_err < 1e-9)) r.passed = false;
  r.detail = strfmt("episodes=%d max_err=%.2e", episodes, max_err);
  return r;
}

SuiteResult overlap_suite(uint64_t seed, int configs, int samples_per_pair) {
  SuiteResult r{"overlap_monte_carlo", true, ""};
  RngStream rng = RngStream::root(seed).split("overlap");
  double worst_rel = 0.0;
  for (int c = 0; c < configs; ++c) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> pos(4, 2);
    Eigen::VectorXd radii(4);
    double exact = 0.0;
    do {
      for (int i = 0; i < 4; ++i) {
        pos(i, 0) = rng.uniform(-0.5, 0.5);
        pos(i, 1) = rng.uniform(-0.4, 0.4);
        radii(i) = rng.uniform(0.2, 0.6);
      }
      exact = pairwise_overlap(pos, radii);
    } while (exact < 0.3);  // keep the 1% relative target well above MC noise
    RngStream mc_rng = rng.split(static_cast<uint64_t>(c));
    const double estimate = oracle_overlap_mc(pos, radii, samples_per_pair, mc_rng);
    worst_rel = std::max(worst_rel, std::fabs(exact - estimate) / exact);
  }
  if (!(worst_rel < 0.01)) r.passed = false;
  // exact cases
  if (circle_overlap_area(2.0, 0.5, 0.5) != 0.0) r.passed = false;
  const double full = circle_overlap_area(0.0, 0.3, 0.3);
  if (std::fabs(full - std::numbers::pi * 0.09) > 1e-12) r.passed = false;
  r.detail = strfmt("configs=%d worst_rel=%.4f%%", configs, 100.0 * worst_rel);
  return r;
}

SuiteResult determinism_suite(uint64_t seed) {
  SuiteResult r{"determinism", true, ""};
  TrainConfig cfg;
  cfg.total_env_steps = 1280;
  cfg.seed = seed;
  const auto teams = make_training_teams(EnvKind::kHsn);
  Trainer a(EnvKind::kHsn, Variant::kCaCcGnn, teams, cfg);
  Trainer b(EnvKind::kHsn, Variant::kCaCcGnn, teams, cfg);
  const TrainLog log_a = a.train();
  const TrainLog log_b = b.train();
  if (!log_a.same_records(log_b)) r.passed = false;
  for (int i = 0; i < a.actor_params().size() && r.passed; ++i)
    if (!(a.actor_params().value(i).array() == b.actor_params().value(i).array()).all())
      r.passed = false;

  RngStream s1 = RngStream::root(seed).split("eval_teams");
  RngStream s2 = RngStream::root(seed).split("eval_teams");
  const auto t1 = sample_composition_teams(training_pool(EnvKind::kHsn), 4, 100, s1);
  const auto t2 = sample_composition_teams(training_pool(EnvKind::kHsn), 4, 100, s2);
  for (size_t i = 0; i < t1.size() && r.passed; ++i)
    for (int k = 0; k < 4; ++k)
      if (!(t1[i].robots[static_cast<size_t>(k)].capability.array() ==
            t2[i].robots[static_cast<size_t>(k)].capability.array())
               .all())
        r.passed = false;
  r.detail = strfmt("updates=%zu", log_a.records.size());
  return r;
}

}  // namespace

std::vector<SuiteResult> run_selftest_suites(uint64_t seed) {
  std::vector<SuiteResult> results;
  results.push_back(gradient_suite(seed));
  results.push_back(hsn_reward_suite(seed, 200));
  results.push_back(hmt_decomposition_suite(seed, 20));
  results.push_back(overlap_suite(seed, 10, 1000000));
  results.push_back(determinism_suite(seed));
  return results;
}

}  // namespace teamrl::selftest
