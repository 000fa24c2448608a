#pragma once

#include <ostream>

#include "teamrl/factory.hpp"
#include "teamrl/nets.hpp"
#include "teamrl/teams.hpp"

namespace teamrl {

enum class EvalAxis { kTrainingSet, kNewComposition, kNewRobots };

const char* eval_axis_name(EvalAxis axis);
EvalAxis eval_axis_from_name(const std::string& name);

struct EvalProtocol {
  EvalAxis axis = EvalAxis::kNewComposition;
  std::vector<int> team_sizes{3, 4, 5};
  int teams_per_setting = 100;
  int episodes_per_team = 10;
};

// Teams drawn iid with replacement from the 20 training robots; robots keep
// their training IDs so ID-based policies stay evaluable.
std::vector<TeamSpec> sample_composition_teams(const std::vector<RobotSpec>& pool, int size,
                                               int count, RngStream& rng);

// Fresh robots with iid capabilities (HSN radius U(0.2, 0.6); HMT capacities
// U(0, 1) each); no robot carries a training ID.
std::vector<TeamSpec> sample_new_robot_teams(EnvKind kind, int size, int count, RngStream& rng);

// Reproduces the documented training-pool construction: radii binned
// small/medium/large, all 15 four-slot combinations with replacement,
// radii uniform within their bin. Utility for building alternative pools;
// the shipped training teams stay the fixed published ones.
std::vector<TeamSpec> build_hsn_bin_pool(RngStream& rng);

struct EvalEpisodeRecord {
  int team_idx = 0;
  int episode = 0;
  double episode_return = 0.0;
  int steps = 0;               // HMT: steps to quota (horizon if never met)
  bool quota_filled = false;   // HMT
  double pct_lumber_rem = 0.0;   // HMT, [0, 100]
  double pct_concrete_rem = 0.0; // HMT, [0, 100]
  double overlap = 0.0;          // HSN, end of episode
  bool connected_end = false;    // HSN
};

struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;
};

struct MetricsReport {
  EnvKind kind = EnvKind::kHsn;
  int horizon = 0;
  std::vector<EvalEpisodeRecord> episodes;
  MeanStd avg_return;
  MeanStd avg_steps;         // HMT
  MeanStd pct_lumber_rem;    // HMT
  MeanStd pct_concrete_rem;  // HMT
  MeanStd overlap;           // HSN
  // index s = fraction (in %) of episodes filled/connected at step s
  std::vector<double> pct_quota_filled_by_step;
  std::vector<double> pct_connected_by_step;
};

// Hard action selection over teams x episodes. The episode stream for
// (team t, episode e) is split deterministically from `rng`, so reports are
// a pure function of (params, teams, seed).
MetricsReport evaluate(const ParamStore<float>& actor_params, Variant variant, EnvKind kind,
                       const EnvSettings& settings, const std::vector<TeamSpec>& teams,
                       int episodes_per_team, const RngStream& rng);

// CSV with one row per (team, episode); columns outside the environment's
// task stay empty.
void write_eval_csv(std::ostream& os, const MetricsReport& report);

}  // namespace teamrl
