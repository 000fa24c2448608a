#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <teamrl/checkpoint.hpp>
#include <teamrl/config.hpp>

using namespace teamrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("teamrl_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream os(p, std::ios::binary);
    os << content;
    return p.string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TEAMRL_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("empty config file resolves to the published defaults") {
  TempDir dir;
  const auto cfg = parse_config(dir.file("empty.json", ""), {});
  CHECK(cfg.train.lr == 0.0005);
  CHECK(cfg.train.clip == 0.2);
  CHECK(cfg.train.epochs == 4);
  CHECK(cfg.train.entropy_coef == 0.01);
  CHECK(cfg.train.buffer_length == 64);
  CHECK(cfg.train.n_step == 5);
  CHECK(cfg.eval.teams_per_setting == 100);
  CHECK(cfg.eval.episodes_per_team == 10);
  CHECK(cfg.env.hsn.safety_distance == 0.17);
  CHECK(cfg.env.hsn.min_start_distance == 0.30);
  CHECK(cfg.env.hmt.step_size == 0.05);
  CHECK_FALSE(cfg.env.hmt.quota_override.has_value());
}

TEST_CASE("no config file at all also resolves to defaults") {
  const auto cfg = parse_config("", {});
  CHECK(cfg.train.lr == 0.0005);
  CHECK(cfg.variant == "ca_cc_gnn");
}

TEST_CASE("the appendix learning rate is accepted as an override") {
  const auto cfg = parse_config("", {"train.lr=0.005"});
  CHECK(cfg.train.lr == 0.005);
}

TEST_CASE("out-of-range and unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config("", {"train.clip=-1"}), doctest::Contains("clip"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("", {"train.oops=1"}), doctest::Contains("train.oops"),
                       ConfigError);
  TempDir dir;
  const auto path = dir.file("bad.json", R"({"trian": {"lr": 1}})");
  CHECK_THROWS_WITH_AS(parse_config(path, {}), doctest::Contains("trian"), ConfigError);
  const auto bad_type = dir.file("type.json", R"({"train": {"lr": "fast"}})");
  CHECK_THROWS_WITH_AS(parse_config(bad_type, {}), doctest::Contains("train.lr"), ConfigError);
}

TEST_CASE("config layers merge file under overrides") {
  TempDir dir;
  const auto path = dir.file("layer.json", R"({"train": {"lr": 0.001, "epochs": 2}})");
  const auto cfg = parse_config(path, {"train.lr=0.002"});
  CHECK(cfg.train.lr == 0.002);   // override wins
  CHECK(cfg.train.epochs == 2);   // file wins over default
  CHECK(cfg.train.clip == 0.2);   // untouched default
}

TEST_CASE("quota override accepts a pair or null") {
  const auto cfg = parse_config("", {"env.hmt.quota_override=1,1"});
  REQUIRE(cfg.env.hmt.quota_override.has_value());
  CHECK((*cfg.env.hmt.quota_override)[0] == 1.0);
  const auto back = parse_config("", {"env.hmt.quota_override=null"});
  CHECK_FALSE(back.env.hmt.quota_override.has_value());
}

TEST_CASE("resolved config serializes canonically and hashes stably") {
  const auto a = parse_config("", {"seed=9", "variant=ca_gnn"});
  const auto b = parse_config("", {"variant=ca_gnn", "seed=9"});
  CHECK(config_to_json(a) == config_to_json(b));
  CHECK(config_hash(a) == config_hash(b));
  const auto c = parse_config("", {"seed=10"});
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("checkpoints round-trip bitwise and validate strictly") {
  TempDir dir;
  RngStream rng = RngStream::root(3).split("init");
  ParamStore<float> actor;
  ParamStore<float> critic;
  PolicyNet<float>::create(actor, Variant::kCaCcGnn, 2, 1, rng);
  CriticNet<float>::create(critic, Variant::kCaCcGnn, 2, 1, 4, rng);

  CheckpointMeta meta;
  meta.variant = "ca_cc_gnn";
  meta.env = "hsn";
  meta.obs_layout = obs_layout_version("hsn");
  meta.n_train = 4;
  meta.base_obs_dim = 2;
  meta.cap_dim = 1;
  const std::string path = (dir.path / "ckpt.txt").string();
  save_checkpoint(path, meta, {&actor, &critic});

  const CheckpointMeta peeked = peek_checkpoint_meta(path);
  CHECK(peeked.variant == "ca_cc_gnn");
  CHECK(peeked.env == "hsn");
  CHECK(peeked.n_train == 4);

  RngStream rng2 = RngStream::root(99).split("init");
  ParamStore<float> actor2;
  ParamStore<float> critic2;
  PolicyNet<float>::create(actor2, Variant::kCaCcGnn, 2, 1, rng2);
  CriticNet<float>::create(critic2, Variant::kCaCcGnn, 2, 1, 4, rng2);
  load_checkpoint(path, {&actor2, &critic2});
  for (int i = 0; i < actor.size(); ++i)
    CHECK((actor.value(i).array() == actor2.value(i).array()).all());

  // wrong architecture: same variant but different team size -> shape mismatch
  RngStream rng3 = RngStream::root(1).split("init");
  ParamStore<float> actor3;
  ParamStore<float> critic3;
  PolicyNet<float>::create(actor3, Variant::kCaCcGnn, 2, 1, rng3);
  CriticNet<float>::create(critic3, Variant::kCaCcGnn, 2, 1, 5, rng3);
  CHECK_THROWS_AS(load_checkpoint(path, {&actor3, &critic3}), CheckpointError);

  // actor alone leaves critic parameters unclaimed
  ParamStore<float> actor4;
  RngStream rng4 = RngStream::root(1).split("init");
  PolicyNet<float>::create(actor4, Variant::kCaCcGnn, 2, 1, rng4);
  CHECK_THROWS_AS(load_checkpoint(path, {&actor4}), CheckpointError);

  // truncated file
  const std::string broken = dir.file("broken.txt", "teamrl-checkpoint v1\nvariant x\n");
  CHECK_THROWS_AS(peek_checkpoint_meta(broken), CheckpointError);
}

TEST_CASE("manifests land atomically with all fields") {
  TempDir dir;
  RunManifest m;
  m.config_hash = "abc";
  m.seed = 7;
  m.started_at = iso_timestamp_now();
  m.finished_at = iso_timestamp_now();
  m.files = {"a.csv", "b.txt"};
  const std::string path = (dir.path / "manifest.json").string();
  write_manifest_atomic(path, m);
  CHECK(fs::exists(path));
  CHECK_FALSE(fs::exists(path + ".tmp"));
  std::ifstream is(path);
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(text.find("\"config_hash\": \"abc\"") != std::string::npos);
  CHECK(text.find(kCodeVersion) != std::string::npos);
}

TEST_CASE("cli exit codes: 0 ok, 1 config, 2 runtime, 3 selftest failure") {
  TempDir dir;
  // config errors
  CHECK(run_cli("train --env hmt") == 1);  // no output directory
  CHECK(run_cli(strfmt("train --env nowhere --out %s/x", dir.path.c_str())) == 1);
  CHECK(run_cli(strfmt("train --env hsn --out %s/x --set train.clip=-1", dir.path.c_str())) == 1);
  // runtime error: checkpoint does not exist
  CHECK(run_cli(strfmt("eval --checkpoint %s/missing.txt --out %s/y", dir.path.c_str(),
                       dir.path.c_str())) == 2);
}

TEST_CASE("cli train then eval round-trips a checkpoint with metadata checks") {
  TempDir dir;
  const std::string out = (dir.path / "run").string();
  const int train_rc = run_cli(strfmt(
      "train --env hsn --variant ca_gnn --seed 5 --out %s --set train.total_env_steps=128",
      out.c_str()));
  REQUIRE(train_rc == 0);
  CHECK(fs::exists(out + "/config.json"));
  CHECK(fs::exists(out + "/trainlog.csv"));
  CHECK(fs::exists(out + "/checkpoint_final.txt"));
  CHECK(fs::exists(out + "/manifest.json"));

  const std::string eval_out = (dir.path / "eval").string();
  const int eval_rc = run_cli(strfmt(
      "eval --checkpoint %s/checkpoint_final.txt --axis composition --sizes 3 --seed 5 --out %s "
      "--set eval.teams_per_setting=2 --set eval.episodes_per_team=1",
      out.c_str(), eval_out.c_str()));
  REQUIRE(eval_rc == 0);
  CHECK(fs::exists(eval_out + "/eval_composition_size3.csv"));
  CHECK(fs::exists(eval_out + "/summary.json"));

  // env mismatch is refused before any rollout
  CHECK(run_cli(strfmt("eval --checkpoint %s/checkpoint_final.txt --env hmt --out %s2",
                       out.c_str(), eval_out.c_str())) == 2);
}
