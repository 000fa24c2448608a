#include "teamrl/teams.hpp"

namespace teamrl {

RobotSpec make_hmt_robot(double lumber_capacity, double concrete_capacity) {
  RobotSpec r;
  r.capability = Eigen::Vector2d{lumber_capacity, concrete_capacity};
  return r;
}

RobotSpec make_hsn_robot(double sensing_radius) {
  RobotSpec r;
  r.capability = Eigen::VectorXd::Constant(1, sensing_radius);
  return r;
}

std::vector<TeamSpec> make_training_teams(EnvKind kind) {
  std::vector<TeamSpec> teams;
  if (kind == EnvKind::kHmt) {
    // published as (concrete, lumber) pairs; stored as (lumber, concrete)
    const double table[5][4][2] = {
        {{0.9, 0.1}, {0.7, 0.3}, {1.0, 0.0}, {0.0, 1.0}},
        {{0.9, 0.1}, {0.7, 0.3}, {0.0, 1.0}, {0.2, 0.8}},
        {{0.8, 0.2}, {0.3, 0.7}, {0.4, 0.6}, {0.7, 0.3}},
        {{1.0, 0.0}, {0.0, 1.0}, {0.1, 0.9}, {0.3, 0.7}},
        {{0.6, 0.4}, {0.3, 0.7}, {0.7, 0.3}, {0.0, 1.0}},
    };
    for (int t = 0; t < 5; ++t) {
      TeamSpec team;
      team.name = strfmt("hmt_train_%d", t + 1);
      for (int i = 0; i < 4; ++i) {
        RobotSpec r = make_hmt_robot(table[t][i][1], table[t][i][0]);
        r.id_index = t * 4 + i;
        team.robots.push_back(std::move(r));
      }
      teams.push_back(std::move(team));
    }
  } else {
    const double radii[5][4] = {
        {0.2191, 0.2946, 0.2608, 0.3668},
        {0.2746, 0.2746, 0.5824, 0.5756},
        {0.3178, 0.3467, 0.5317, 0.6073},
        {0.2007, 0.5722, 0.5153, 0.4622},
        {0.4487, 0.5526, 0.5826, 0.58343},
    };
    for (int t = 0; t < 5; ++t) {
      TeamSpec team;
      team.name = strfmt("hsn_train_%d", t + 1);
      for (int i = 0; i < 4; ++i) {
        RobotSpec r = make_hsn_robot(radii[t][i]);
        r.id_index = t * 4 + i;
        team.robots.push_back(std::move(r));
      }
      teams.push_back(std::move(team));
    }
  }
  return teams;
}

std::vector<RobotSpec> training_pool(EnvKind kind) {
  std::vector<RobotSpec> pool;
  for (const TeamSpec& team : make_training_teams(kind))
    for (const RobotSpec& r : team.robots) pool.push_back(r);
  return pool;
}

}  // namespace teamrl
