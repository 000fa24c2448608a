#pragma once

#include <string>
#include <vector>

#include "teamrl/params.hpp"

namespace teamrl {

inline constexpr const char* kCheckpointMagic = "teamrl-checkpoint v1";

// Identifies what the parameters belong to; loading refuses any mismatch so
// a checkpoint can never silently drive the wrong network or observation
// layout.
struct CheckpointMeta {
  std::string variant;
  std::string env;
  std::string obs_layout;
  int n_train = 0;
  int base_obs_dim = 0;
  int cap_dim = 0;
};

// Text format: magic line, `key value` header lines, then one line per
// parameter: name, rows, cols, and the float32 values as 8-digit hex bit
// patterns (lossless round-trip), closed by `end`.
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<const ParamStore<float>*>& stores);

CheckpointMeta peek_checkpoint_meta(const std::string& path);

// Fills pre-built stores; every parameter in the file must land in exactly
// one store with an exactly matching shape, and every store entry must be
// covered.
CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<ParamStore<float>*>& stores);

std::string obs_layout_version(const std::string& env_kind_name);

}  // namespace teamrl
