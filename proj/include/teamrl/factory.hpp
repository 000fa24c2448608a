#pragma once

#include <memory>

#include "teamrl/hmt.hpp"
#include "teamrl/hsn.hpp"

namespace teamrl {

// All environment constants in one place; every value can be overridden
// from the experiment config.
struct EnvSettings {
  HmtConfig hmt;
  HsnConfig hsn;
};

inline std::unique_ptr<Env> make_env(EnvKind kind, const TeamSpec& team, SuffixMode suffix,
                                     const EnvSettings& settings) {
  if (kind == EnvKind::kHmt)
    return std::make_unique<HmtEnv>(team, suffix, settings.hmt);
  return std::make_unique<HsnEnv>(team, suffix, settings.hsn);
}

inline int capability_dim(EnvKind kind) { return kind == EnvKind::kHmt ? 2 : 1; }

inline int64_t default_total_env_steps(EnvKind kind) {
  return kind == EnvKind::kHmt ? 40'000'000 : 20'000'000;
}

}  // namespace teamrl
