#pragma once

#include <vector>

#include "teamrl/env.hpp"

namespace teamrl {

// The five fixed 4-robot training teams per task. Robots are assigned
// one-hot pool IDs 0..19 in table order; composition-generalization
// sampling draws from this same pool.
std::vector<TeamSpec> make_training_teams(EnvKind kind);

// All 20 training robots flattened in ID order.
std::vector<RobotSpec> training_pool(EnvKind kind);

RobotSpec make_hmt_robot(double lumber_capacity, double concrete_capacity);
RobotSpec make_hsn_robot(double sensing_radius);

}  // namespace teamrl
