#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "teamrl/checkpoint.hpp"
#include "teamrl/config.hpp"
#include "teamrl/selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace teamrl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string env;
  std::string out;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  bool seed_set = false;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig config = parse_config(args.config_path, args.overrides);
  if (!args.env.empty()) config.env_kind = args.env;
  if (!args.out.empty()) config.out_dir = args.out;
  if (args.seed_set) {
    config.seed = args.seed;
    config.train.seed = args.seed;
  }
  config.validate();
  return config;
}

void require_out_dir(const ExperimentConfig& config) {
  if (config.out_dir.empty())
    throw ConfigError("output directory required (--out or config key 'out')");
  fs::create_directories(config.out_dir);
}

std::string write_resolved_config(const ExperimentConfig& config) {
  const std::string path = (fs::path(config.out_dir) / "config.json").string();
  std::ofstream os(path, std::ios::binary);
  os << config_to_json(config);
  return path;
}

void save_trainer_checkpoint(const std::string& path, const Trainer& trainer) {
  CheckpointMeta meta;
  meta.variant = variant_name(trainer.variant());
  meta.env = env_kind_name(trainer.env_kind());
  meta.obs_layout = obs_layout_version(meta.env);
  meta.n_train = trainer.n_train();
  meta.base_obs_dim = trainer.base_obs_dim();
  meta.cap_dim = capability_dim(trainer.env_kind());
  save_checkpoint(path, meta, {&trainer.actor_params(), &trainer.critic_params()});
}

int run_train(const CommonArgs& args, const std::string& variant_flag) {
  ExperimentConfig config = resolve_config(args);
  if (!variant_flag.empty()) config.variant = variant_flag;
  if (config.env_kind.empty()) throw ConfigError("train: --env is required");
  config.validate();
  require_out_dir(config);

  RunManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.seed = config.seed;
  manifest.started_at = iso_timestamp_now();
  manifest.files.push_back(write_resolved_config(config));

  const EnvKind kind = config.env_kind_enum();
  Trainer trainer(kind, config.variant_enum(), make_training_teams(kind), config.train,
                  config.env);

  const auto hook = [&](int64_t steps, const Trainer& t) {
    const std::string path =
        (fs::path(config.out_dir) / strfmt("checkpoint_%lld.txt", static_cast<long long>(steps)))
            .string();
    save_trainer_checkpoint(path, t);
    manifest.files.push_back(path);
    std::cout << "checkpoint " << path << "\n";
  };
  const TrainLog log =
      trainer.train(config.train.checkpoint_interval > 0
                        ? std::function<void(int64_t, const Trainer&)>(hook)
                        : std::function<void(int64_t, const Trainer&)>());

  const std::string log_path = (fs::path(config.out_dir) / "trainlog.csv").string();
  {
    std::ofstream os(log_path, std::ios::binary);
    log.write_csv(os);
  }
  manifest.files.push_back(log_path);

  const std::string final_path = (fs::path(config.out_dir) / "checkpoint_final.txt").string();
  save_trainer_checkpoint(final_path, trainer);
  manifest.files.push_back(final_path);

  manifest.finished_at = iso_timestamp_now();
  write_manifest_atomic((fs::path(config.out_dir) / "manifest.json").string(), manifest);
  std::cout << "trained " << trainer.env_steps() << " env steps, " << log.records.size()
            << " updates, " << log.episodes.size() << " episodes\n";
  return 0;
}

json mean_std_json(const MeanStd& m) { return json{{"mean", m.mean}, {"sd", m.sd}}; }

int run_eval(const CommonArgs& args, const std::string& checkpoint_path,
             const std::string& axis_flag, const std::string& sizes_flag) {
  ExperimentConfig config = resolve_config(args);
  if (!axis_flag.empty()) config.eval.axis = eval_axis_from_name(axis_flag);
  if (!sizes_flag.empty()) {
    config.eval.team_sizes.clear();
    std::istringstream ss(sizes_flag);
    std::string item;
    while (std::getline(ss, item, ',')) config.eval.team_sizes.push_back(std::stoi(item));
  }

  const CheckpointMeta meta = peek_checkpoint_meta(checkpoint_path);
  if (config.env_kind.empty()) config.env_kind = meta.env;
  if (config.env_kind != meta.env)
    throw CheckpointError(strfmt("checkpoint was trained on '%s' but --env is '%s'",
                                 meta.env.c_str(), config.env_kind.c_str()));
  if (meta.obs_layout != obs_layout_version(meta.env))
    throw CheckpointError(strfmt("checkpoint observation layout '%s' unsupported (expected '%s')",
                                 meta.obs_layout.c_str(),
                                 obs_layout_version(meta.env).c_str()));
  config.validate();
  require_out_dir(config);

  const EnvKind kind = config.env_kind_enum();
  const Variant variant = variant_from_name(meta.variant);

  // rebuild stores with the training-time layout, then load values
  RngStream scratch = RngStream::root(0);
  ParamStore<float> actor_params;
  ParamStore<float> critic_params;
  PolicyNet<float>::create(actor_params, variant, meta.base_obs_dim, meta.cap_dim, scratch);
  CriticNet<float>::create(critic_params, variant, meta.base_obs_dim, meta.cap_dim, meta.n_train,
                           scratch);
  load_checkpoint(checkpoint_path, {&actor_params, &critic_params});

  RunManifest manifest;
  manifest.config_hash = config_hash(config);
  manifest.seed = config.seed;
  manifest.started_at = iso_timestamp_now();
  manifest.files.push_back(write_resolved_config(config));

  const RngStream team_rng = RngStream::root(config.seed).split("eval_teams");
  const RngStream episode_rng = RngStream::root(config.seed).split("eval_episodes");
  json summary;
  summary["checkpoint"] = checkpoint_path;
  summary["variant"] = meta.variant;
  summary["env"] = meta.env;
  summary["axis"] = eval_axis_name(config.eval.axis);
  summary["settings"] = json::array();

  const auto run_setting = [&](const std::string& label, int size,
                               const std::vector<TeamSpec>& teams) {
    const MetricsReport report = evaluate(actor_params, variant, kind, config.env, teams,
                                          config.eval.episodes_per_team,
                                          episode_rng.split(static_cast<uint64_t>(size)));
    const std::string csv_path =
        (fs::path(config.out_dir) / strfmt("eval_%s_size%d.csv", label.c_str(), size)).string();
    std::ofstream os(csv_path, std::ios::binary);
    write_eval_csv(os, report);
    manifest.files.push_back(csv_path);

    json setting;
    setting["axis"] = label;
    setting["team_size"] = size;
    setting["teams"] = teams.size();
    setting["episodes_per_team"] = config.eval.episodes_per_team;
    setting["avg_return"] = mean_std_json(report.avg_return);
    if (kind == EnvKind::kHmt) {
      setting["avg_steps"] = mean_std_json(report.avg_steps);
      setting["pct_lumber_remaining"] = mean_std_json(report.pct_lumber_rem);
      setting["pct_concrete_remaining"] = mean_std_json(report.pct_concrete_rem);
      setting["pct_quota_filled_by_step"] = report.pct_quota_filled_by_step;
    } else {
      setting["pairwise_overlap"] = mean_std_json(report.overlap);
      setting["pct_fully_connected_by_step"] = report.pct_connected_by_step;
    }
    summary["settings"].push_back(setting);
    std::cout << label << " size " << size << ": avg_return " << report.avg_return.mean << " +- "
              << report.avg_return.sd << "\n";
  };

  if (config.eval.axis == EvalAxis::kTrainingSet) {
    const auto teams = make_training_teams(kind);
    run_setting("train", teams[0].size(), teams);
  } else {
    for (const int size : config.eval.team_sizes) {
      RngStream size_rng = team_rng.split(static_cast<uint64_t>(size));
      const std::vector<TeamSpec> teams =
          config.eval.axis == EvalAxis::kNewComposition
              ? sample_composition_teams(training_pool(kind), size, config.eval.teams_per_setting,
                                         size_rng)
              : sample_new_robot_teams(kind, size, config.eval.teams_per_setting, size_rng);
      run_setting(eval_axis_name(config.eval.axis), size, teams);
    }
  }

  const std::string summary_path = (fs::path(config.out_dir) / "summary.json").string();
  {
    std::ofstream os(summary_path, std::ios::binary);
    os << summary.dump(2) << "\n";
  }
  manifest.files.push_back(summary_path);
  manifest.finished_at = iso_timestamp_now();
  write_manifest_atomic((fs::path(config.out_dir) / "manifest.json").string(), manifest);
  return 0;
}

int run_selftest(uint64_t seed) {
  const auto results = selftest::run_selftest_suites(seed);
  bool all_passed = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.detail << "\n";
    all_passed = all_passed && r.passed;
  }
  return all_passed ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capability-aware multi-robot policy training and evaluation"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args;
  std::string train_variant;
  std::string eval_checkpoint, eval_axis, eval_sizes;
  uint64_t selftest_seed = 0;

  CLI::App* train_cmd = app.add_subcommand("train", "train a policy on the built-in teams");
  train_cmd->add_option("--env", train_args.env, "hmt or hsn");
  train_cmd->add_option("--variant", train_variant,
                        "id_mlp | id_gnn | ca_mlp | ca_gnn | ca_cc_gnn");
  train_cmd->add_option("--config", train_args.config_path, "experiment config file (JSON)");
  train_cmd->add_option("--seed", train_args.seed, "root seed")
      ->each([&](const std::string&) { train_args.seed_set = true; });
  train_cmd->add_option("--out", train_args.out, "output directory");
  train_cmd->add_option("--set", train_args.overrides, "config override key.path=value");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--env", eval_args.env, "hmt or hsn (defaults to checkpoint's)");
  eval_cmd->add_option("--axis", eval_axis, "train | composition | new-robots");
  eval_cmd->add_option("--sizes", eval_sizes, "comma-separated team sizes, e.g. 3,4,5");
  eval_cmd->add_option("--config", eval_args.config_path, "experiment config file (JSON)");
  eval_cmd->add_option("--seed", eval_args.seed, "root seed")
      ->each([&](const std::string&) { eval_args.seed_set = true; });
  eval_cmd->add_option("--out", eval_args.out, "output directory");
  eval_cmd->add_option("--set", eval_args.overrides, "config override key.path=value");

  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run the built-in oracle suites");
  selftest_cmd->add_option("--seed", selftest_seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_args, train_variant);
    if (eval_cmd->parsed()) return run_eval(eval_args, eval_checkpoint, eval_axis, eval_sizes);
    return run_selftest(selftest_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
