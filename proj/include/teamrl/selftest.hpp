#pragma once

#include <string>
#include <vector>

#include "teamrl/hmt.hpp"
#include "teamrl/nets.hpp"
#include "teamrl/rng.hpp"

namespace teamrl::selftest {

// Finite-difference check (64-bit, step 1e-5) of a cross-entropy loss
// through the given policy variant on a random 3-node graph. Returns the
// max relative error.
double policy_gradcheck_error(Variant variant, uint64_t seed);

// Same for the centralized critic (value head as the scalar loss).
double critic_gradcheck_error(uint64_t seed);

// Independent evaluation of the published pair-reward formula; never calls
// into the environment implementation.
double oracle_hsn_reward(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const Eigen::VectorXd& radii);

// Monte-Carlo estimate of summed pairwise disk overlap: samples_per_pair
// uniform points in each overlapping pair's tight bounding box.
double oracle_overlap_mc(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                         const Eigen::VectorXd& radii, int samples_per_pair, RngStream& rng);

// Rebuilds an HMT episode's cumulative reward from its event log alone
// (pickup / dropoff events, quota, team size, episode length).
double hmt_reconstruct_episode_reward(const std::vector<HmtEvent>& events,
                                      const Eigen::Vector2d& quota, int team_size,
                                      int episode_steps);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// The oracle suites behind the `selftest` subcommand: gradient checks,
// reward oracles, overlap Monte-Carlo, and seeded determinism.
std::vector<SuiteResult> run_selftest_suites(uint64_t seed);

}  // namespace teamrl::selftest
