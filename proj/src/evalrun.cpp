#include "teamrl/evalrun.hpp"

#include <cmath>

#include "teamrl/metrics.hpp"

namespace teamrl {

const char* eval_axis_name(EvalAxis axis) {
  switch (axis) {
    case EvalAxis::kTrainingSet: return "train";
    case EvalAxis::kNewComposition: return "composition";
    case EvalAxis::kNewRobots: return "new-robots";
  }
  return "?";
}

EvalAxis eval_axis_from_name(const std::string& name) {
  if (name == "train") return EvalAxis::kTrainingSet;
  if (name == "composition") return EvalAxis::kNewComposition;
  if (name == "new-robots") return EvalAxis::kNewRobots;
  throw ConfigError(
      strfmt("unknown eval axis '%s' (expected train, composition, or new-robots)", name.c_str()));
}

std::vector<TeamSpec> sample_composition_teams(const std::vector<RobotSpec>& pool, int size,
                                               int count, RngStream& rng) {
  if (size < 1) throw ConfigError("composition teams need size >= 1");
  std::vector<TeamSpec> teams;
  teams.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) {
    TeamSpec team;
    team.name = strfmt("composition_%d", t);
    for (int i = 0; i < size; ++i) {
      const auto pick = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1));
      team.robots.push_back(pool[pick]);
    }
    teams.push_back(std::move(team));
  }
  return teams;
}

std::vector<TeamSpec> sample_new_robot_teams(EnvKind kind, int size, int count, RngStream& rng) {
  if (size < 1) throw ConfigError("new-robot teams need size >= 1");
  std::vector<TeamSpec> teams;
  teams.reserve(static_cast<size_t>(count));
  for (int t = 0; t < count; ++t) {
    TeamSpec team;
    team.name = strfmt("new_robots_%d", t);
    for (int i = 0; i < size; ++i) {
      if (kind == EnvKind::kHsn) {
        team.robots.push_back(make_hsn_robot(rng.uniform(0.2, 0.6)));
      } else {
        const double lumber = rng.uniform(0.0, 1.0);
        const double concrete = rng.uniform(0.0, 1.0);
        team.robots.push_back(make_hmt_robot(lumber, concrete));
      }
    }
    teams.push_back(std::move(team));
  }
  return teams;
}

std::vector<TeamSpec> build_hsn_bin_pool(RngStream& rng) {
  const double bin_lo[3] = {0.2, 0.33, 0.46};
  const double bin_hi[3] = {0.33, 0.46, 0.60};
  std::vector<TeamSpec> teams;
  for (int b0 = 0; b0 < 3; ++b0)
    for (int b1 = b0; b1 < 3; ++b1)
      for (int b2 = b1; b2 < 3; ++b2)
        for (int b3 = b2; b3 < 3; ++b3) {
          const int bins[4] = {b0, b1, b2, b3};
          TeamSpec team;
          team.name = strfmt("hsn_bins_%d%d%d%d", b0, b1, b2, b3);
          for (const int b : bins)
            team.robots.push_back(make_hsn_robot(rng.uniform(bin_lo[b], bin_hi[b])));
          teams.push_back(std::move(team));
        }
  return teams;
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  double s = 0.0;
  for (const double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  double v = 0.0;
  for (const double x : xs) v += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(v / static_cast<double>(xs.size()));
  return out;
}

double pct_remaining(double quota, double delivered) {
  if (quota <= 0.0) return 0.0;
  return 100.0 * std::max(0.0, quota - delivered) / quota;
}

}  // namespace

MetricsReport evaluate(const ParamStore<float>& actor_params, Variant variant, EnvKind kind,
                       const EnvSettings& settings, const std::vector<TeamSpec>& teams,
                       int episodes_per_team, const RngStream& rng) {
  if (teams.empty()) throw ConfigError("evaluate: team list is empty");
  if (episodes_per_team < 1) throw ConfigError("evaluate: episodes_per_team must be >= 1");
  if (variant_uses_ids(variant))
    for (const TeamSpec& team : teams)
      if (!team.all_have_ids())
        throw UnsupportedVariantError(
            strfmt("%s cannot act on team '%s': robots outside the training pool have no ID",
                   variant_name(variant), team.name.c_str()));

  const SuffixMode suffix =
      variant_uses_ids(variant) ? SuffixMode::kId : SuffixMode::kCapability;
  MetricsReport report;
  report.kind = kind;
  report.horizon = kind == EnvKind::kHmt ? settings.hmt.horizon : settings.hsn.horizon;

  std::vector<double> returns, steps, lumber_rem, concrete_rem, overlaps;
  std::vector<int64_t> filled_at_step(static_cast<size_t>(report.horizon) + 1, 0);
  std::vector<int64_t> connected_at_step(static_cast<size_t>(report.horizon) + 1, 0);
  int64_t episode_count = 0;

  for (size_t t = 0; t < teams.size(); ++t) {
    std::unique_ptr<Env> env = make_env(kind, teams[t], suffix, settings);
    const PolicyNet<float> policy = PolicyNet<float>::attach(
        actor_params, variant, env->base_obs_dim(), capability_dim(kind));
    RngStream team_rng = rng.split(static_cast<uint64_t>(t));

    for (int e = 0; e < episodes_per_team; ++e) {
      RngStream episode_rng = team_rng.split(static_cast<uint64_t>(e));
      Eigen::MatrixXf obs = env->reset(episode_rng).cast<float>();

      EvalEpisodeRecord rec;
      rec.team_idx = static_cast<int>(t);
      rec.episode = e;
      rec.steps = report.horizon;
      bool filled = false;
      int filled_step = report.horizon + 1;
      std::vector<uint8_t> connected(static_cast<size_t>(report.horizon) + 1, 0);

      if (kind == EnvKind::kHsn) {
        const auto* hsn = dynamic_cast<const HsnEnv*>(env.get());
        connected[0] = connectivity_check(hsn->positions(), hsn->radii()) ? 1 : 0;
      }

      bool done = false;
      while (!done) {
        Tape<float> tape;
        auto pa = BoundParams<float>::bind(tape, actor_params);
        GraphBatch<float> batch;
        batch.node_features = obs.leftCols(env->base_obs_dim());
        if (variant_uses_ids(variant))
          batch.ids = obs.rightCols(kIdPoolSize);
        else
          batch.capabilities = obs.rightCols(capability_dim(kind));
        const Eigen::MatrixXf logits = policy.logits(tape, pa, batch).value();
        const StepResult result = env->step(hard_action_select(logits));
        rec.episode_return += result.reward;
        const int s = env->current_step();
        if (kind == EnvKind::kHmt) {
          if (result.info.quota_filled && !filled) {
            filled = true;
            filled_step = s;
            rec.steps = s;
          }
        } else if (s <= report.horizon) {
          connected[static_cast<size_t>(s)] = result.info.fully_connected ? 1 : 0;
          rec.overlap = result.info.overlap_area;
          rec.connected_end = result.info.fully_connected;
        }
        done = result.done;
        if (!done) obs = result.observations.cast<float>();
      }

      if (kind == EnvKind::kHmt) {
        const auto* hmt = dynamic_cast<const HmtEnv*>(env.get());
        rec.quota_filled = filled;
        rec.pct_lumber_rem = pct_remaining(hmt->quota()(kLumber), hmt->delivered()(kLumber));
        rec.pct_concrete_rem =
            pct_remaining(hmt->quota()(kConcrete), hmt->delivered()(kConcrete));
        steps.push_back(static_cast<double>(rec.steps));
        lumber_rem.push_back(rec.pct_lumber_rem);
        concrete_rem.push_back(rec.pct_concrete_rem);
        for (int s = filled ? filled_step : report.horizon + 1; s <= report.horizon; ++s)
          filled_at_step[static_cast<size_t>(s)] += 1;
      } else {
        overlaps.push_back(rec.overlap);
        for (int s = 0; s <= report.horizon; ++s)
          connected_at_step[static_cast<size_t>(s)] += connected[static_cast<size_t>(s)];
      }
      returns.push_back(rec.episode_return);
      episode_count += 1;
      report.episodes.push_back(rec);
    }
  }

  report.avg_return = mean_std(returns);
  report.avg_steps = mean_std(steps);
  report.pct_lumber_rem = mean_std(lumber_rem);
  report.pct_concrete_rem = mean_std(concrete_rem);
  report.overlap = mean_std(overlaps);
  if (kind == EnvKind::kHmt) {
    report.pct_quota_filled_by_step.resize(filled_at_step.size());
    for (size_t s = 0; s < filled_at_step.size(); ++s)
      report.pct_quota_filled_by_step[s] =
          100.0 * static_cast<double>(filled_at_step[s]) / static_cast<double>(episode_count);
  } else {
    report.pct_connected_by_step.resize(connected_at_step.size());
    for (size_t s = 0; s < connected_at_step.size(); ++s)
      report.pct_connected_by_step[s] =
          100.0 * static_cast<double>(connected_at_step[s]) / static_cast<double>(episode_count);
  }
  return report;
}

void write_eval_csv(std::ostream& os, const MetricsReport& report) {
  os << "team_idx,episode,return,steps,quota_filled,pct_lumber_rem,pct_concrete_rem,overlap,"
        "connected_end\n";
  const bool hmt = report.kind == EnvKind::kHmt;
  for (const EvalEpisodeRecord& r : report.episodes) {
    os << r.team_idx << "," << r.episode << "," << strfmt("%.9g", r.episode_return) << ",";
    if (hmt)
      os << r.steps << "," << (r.quota_filled ? 1 : 0) << ","
         << strfmt("%.9g,%.9g", r.pct_lumber_rem, r.pct_concrete_rem) << ",,";
    else
      os << ",,,," << strfmt("%.9g", r.overlap) << "," << (r.connected_end ? 1 : 0);
    os << "\n";
  }
}

}  // namespace teamrl
