#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "teamrl/evalrun.hpp"
#include "teamrl/trainer.hpp"

namespace teamrl {

inline constexpr const char* kCodeVersion = "teamrl 0.1.0";

struct ExperimentConfig {
  std::string variant = "ca_cc_gnn";
  uint64_t seed = 0;
  std::string out_dir;
  std::string env_kind;  // "hmt" | "hsn"; must be set before running
  EnvSettings env;
  TrainConfig train;
  EvalProtocol eval;

  Variant variant_enum() const { return variant_from_name(variant); }
  EnvKind env_kind_enum() const { return env_kind_from_name(env_kind); }
  void validate() const;
};

// Layered resolution: built-in defaults (the published hyperparameters and
// the documented environment constants) <- config file <- command-line
// overrides of the form "dotted.path=value". Empty path skips the file
// layer. Unknown keys, type mismatches, and out-of-range values raise
// ConfigError naming the key.
ExperimentConfig parse_config(const std::string& config_path,
                              const std::vector<std::string>& overrides);

// Canonical resolved form (keys sorted); written to the output directory
// before every run.
std::string config_to_json(const ExperimentConfig& config);

uint64_t fnv1a64(std::string_view text);
std::string config_hash(const ExperimentConfig& config);

struct RunManifest {
  std::string config_hash;
  std::string code_version = kCodeVersion;
  uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> files;
};

std::string iso_timestamp_now();

// Write-to-temp then rename, so a manifest is either absent or complete.
void write_manifest_atomic(const std::string& path, const RunManifest& manifest);

}  // namespace teamrl
