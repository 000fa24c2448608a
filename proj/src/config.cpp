#include "teamrl/config.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace teamrl {

using nlohmann::json;

namespace {

json rect_to_json(const Rect& r) { return json::array({r.x_min, r.x_max, r.y_min, r.y_max}); }

Rect rect_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 4)
    throw ConfigError(strfmt("%s: expected [x_min, x_max, y_min, y_max]", key.c_str()));
  Rect r{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!(r.x_min < r.x_max) || !(r.y_min < r.y_max))
    throw ConfigError(strfmt("%s: degenerate rectangle", key.c_str()));
  return r;
}

json default_tree() {
  const ExperimentConfig d;
  json j;
  j["variant"] = d.variant;
  j["seed"] = d.seed;
  j["out"] = d.out_dir;
  j["env"]["kind"] = d.env_kind;
  j["env"]["hmt"]["arena"] = rect_to_json(d.env.hmt.arena);
  j["env"]["hmt"]["lumber_depot"] = rect_to_json(d.env.hmt.lumber_depot);
  j["env"]["hmt"]["concrete_depot"] = rect_to_json(d.env.hmt.concrete_depot);
  j["env"]["hmt"]["construction_site"] = rect_to_json(d.env.hmt.construction_site);
  j["env"]["hmt"]["step_size"] = d.env.hmt.step_size;
  j["env"]["hmt"]["horizon"] = d.env.hmt.horizon;
  j["env"]["hmt"]["quota_override"] = nullptr;
  j["env"]["hsn"]["arena"] = rect_to_json(d.env.hsn.arena);
  j["env"]["hsn"]["step_size"] = d.env.hsn.step_size;
  j["env"]["hsn"]["min_start_distance"] = d.env.hsn.min_start_distance;
  j["env"]["hsn"]["safety_distance"] = d.env.hsn.safety_distance;
  j["env"]["hsn"]["horizon"] = d.env.hsn.horizon;
  j["env"]["hsn"]["max_place_attempts"] = d.env.hsn.max_place_attempts;
  j["train"]["lr"] = d.train.lr;
  j["train"]["entropy_coef"] = d.train.entropy_coef;
  j["train"]["epochs"] = d.train.epochs;
  j["train"]["clip"] = d.train.clip;
  j["train"]["n_step"] = d.train.n_step;
  j["train"]["buffer_length"] = d.train.buffer_length;
  j["train"]["critic_refresh_interval"] = d.train.critic_refresh_interval;
  j["train"]["total_env_steps"] = d.train.total_env_steps;
  j["train"]["resample_every_episodes"] = d.train.resample_every_episodes;
  j["train"]["checkpoint_interval"] = d.train.checkpoint_interval;
  j["train"]["normalize_advantages"] = d.train.normalize_advantages;
  j["eval"]["axis"] = eval_axis_name(d.eval.axis);
  j["eval"]["team_sizes"] = d.eval.team_sizes;
  j["eval"]["teams_per_setting"] = d.eval.teams_per_setting;
  j["eval"]["episodes_per_team"] = d.eval.episodes_per_team;
  return j;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  if (a.is_null()) return b.is_null() || b.is_array();  // nullable array keys
  return a.type() == b.type();
}

void merge_into(json& base, const json& incoming, const std::string& prefix) {
  if (!incoming.is_object())
    throw ConfigError(strfmt("%s: expected an object", prefix.empty() ? "config" : prefix.c_str()));
  for (const auto& [key, value] : incoming.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError(strfmt("unknown config key '%s'", path.c_str()));
    json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
    } else {
      if (!same_kind(slot, value))
        throw ConfigError(strfmt("config key '%s': type mismatch", path.c_str()));
      slot = value;
    }
  }
}

std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::string cur;
  for (const char c : dotted) {
    if (c == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

json parse_override_value(const json& slot, const std::string& text, const std::string& path) {
  try {
    if (slot.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError("");
    }
    if (slot.is_number_float()) return std::stod(text);
    if (slot.is_number_integer() || slot.is_number_unsigned()) {
      if (text.find('.') != std::string::npos) throw ConfigError("");
      return std::stoll(text);
    }
    if (slot.is_string()) return text;
    if (slot.is_array() || slot.is_null()) {
      if (text == "null") return nullptr;
      json arr = json::array();
      std::istringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(std::stod(item));
      return arr;
    }
  } catch (const std::exception&) {
    throw ConfigError(strfmt("override '%s': cannot parse value '%s'", path.c_str(), text.c_str()));
  }
  throw ConfigError(strfmt("override '%s': unsupported key type", path.c_str()));
}

void apply_override(json& tree, const std::string& entry) {
  const auto eq = entry.find('=');
  if (eq == std::string::npos)
    throw ConfigError(strfmt("override '%s' is not of the form key=value", entry.c_str()));
  const std::string path = entry.substr(0, eq);
  const std::string text = entry.substr(eq + 1);
  json* slot = &tree;
  for (const std::string& part : split_path(path)) {
    if (!slot->is_object() || !slot->contains(part))
      throw ConfigError(strfmt("unknown config key '%s'", path.c_str()));
    slot = &(*slot)[part];
  }
  if (slot->is_object())
    throw ConfigError(strfmt("override '%s' targets a config section, not a value", path.c_str()));
  *slot = parse_override_value(*slot, text, path);
}

std::vector<int> int_list(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigError(strfmt("%s: expected a non-empty list", key.c_str()));
  std::vector<int> out;
  for (const auto& v : j) {
    const double x = v.get<double>();
    if (x != std::floor(x)) throw ConfigError(strfmt("%s: expected integers", key.c_str()));
    out.push_back(static_cast<int>(x));
  }
  return out;
}

ExperimentConfig extract(const json& j) {
  ExperimentConfig c;
  c.variant = j["variant"].get<std::string>();
  c.seed = j["seed"].get<uint64_t>();
  c.out_dir = j["out"].get<std::string>();
  c.env_kind = j["env"]["kind"].get<std::string>();
  const json& hmt = j["env"]["hmt"];
  c.env.hmt.arena = rect_from_json(hmt["arena"], "env.hmt.arena");
  c.env.hmt.lumber_depot = rect_from_json(hmt["lumber_depot"], "env.hmt.lumber_depot");
  c.env.hmt.concrete_depot = rect_from_json(hmt["concrete_depot"], "env.hmt.concrete_depot");
  c.env.hmt.construction_site =
      rect_from_json(hmt["construction_site"], "env.hmt.construction_site");
  c.env.hmt.step_size = hmt["step_size"].get<double>();
  c.env.hmt.horizon = hmt["horizon"].get<int>();
  if (!hmt["quota_override"].is_null()) {
    const json& q = hmt["quota_override"];
    if (!q.is_array() || q.size() != 2)
      throw ConfigError("env.hmt.quota_override: expected [lumber, concrete]");
    c.env.hmt.quota_override = {{q[0].get<double>(), q[1].get<double>()}};
  }
  const json& hsn = j["env"]["hsn"];
  c.env.hsn.arena = rect_from_json(hsn["arena"], "env.hsn.arena");
  c.env.hsn.step_size = hsn["step_size"].get<double>();
  c.env.hsn.min_start_distance = hsn["min_start_distance"].get<double>();
  c.env.hsn.safety_distance = hsn["safety_distance"].get<double>();
  c.env.hsn.horizon = hsn["horizon"].get<int>();
  c.env.hsn.max_place_attempts = hsn["max_place_attempts"].get<int>();
  const json& train = j["train"];
  c.train.lr = train["lr"].get<double>();
  c.train.entropy_coef = train["entropy_coef"].get<double>();
  c.train.epochs = train["epochs"].get<int>();
  c.train.clip = train["clip"].get<double>();
  c.train.n_step = train["n_step"].get<int>();
  c.train.buffer_length = train["buffer_length"].get<int>();
  c.train.critic_refresh_interval = train["critic_refresh_interval"].get<int64_t>();
  c.train.total_env_steps = train["total_env_steps"].get<int64_t>();
  c.train.resample_every_episodes = train["resample_every_episodes"].get<int>();
  c.train.checkpoint_interval = train["checkpoint_interval"].get<int64_t>();
  c.train.normalize_advantages = train["normalize_advantages"].get<bool>();
  c.train.seed = c.seed;
  c.eval.axis = eval_axis_from_name(j["eval"]["axis"].get<std::string>());
  c.eval.team_sizes = int_list(j["eval"]["team_sizes"], "eval.team_sizes");
  c.eval.teams_per_setting = j["eval"]["teams_per_setting"].get<int>();
  c.eval.episodes_per_team = j["eval"]["episodes_per_team"].get<int>();
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  variant_from_name(variant);
  if (!env_kind.empty()) env_kind_from_name(env_kind);
  train.validate();
  if (!(env.hmt.step_size > 0.0)) throw ConfigError("env.hmt.step_size must be positive");
  if (env.hmt.horizon < 1) throw ConfigError("env.hmt.horizon must be >= 1");
  if (env.hmt.quota_override.has_value() &&
      ((*env.hmt.quota_override)[0] < 0.0 || (*env.hmt.quota_override)[1] < 0.0))
    throw ConfigError("env.hmt.quota_override values must be >= 0");
  if (!(env.hsn.step_size > 0.0)) throw ConfigError("env.hsn.step_size must be positive");
  if (env.hsn.horizon < 1) throw ConfigError("env.hsn.horizon must be >= 1");
  if (!(env.hsn.safety_distance > 0.0))
    throw ConfigError("env.hsn.safety_distance must be positive");
  if (env.hsn.min_start_distance < env.hsn.safety_distance)
    throw ConfigError("env.hsn.min_start_distance must be >= env.hsn.safety_distance");
  if (env.hsn.max_place_attempts < 1)
    throw ConfigError("env.hsn.max_place_attempts must be >= 1");
  for (const int s : eval.team_sizes)
    if (s < 1 || s > 32) throw ConfigError("eval.team_sizes entries must lie in [1, 32]");
  if (eval.teams_per_setting < 1) throw ConfigError("eval.teams_per_setting must be >= 1");
  if (eval.episodes_per_team < 1) throw ConfigError("eval.episodes_per_team must be >= 1");
}

ExperimentConfig parse_config(const std::string& config_path,
                              const std::vector<std::string>& overrides) {
  json tree = default_tree();
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw ConfigError(strfmt("cannot open config file '%s'", config_path.c_str()));
    json file;
    try {
      std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
      file = text.empty() ? json::object() : json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(strfmt("config '%s': %s", config_path.c_str(), e.what()));
    }
    merge_into(tree, file, "");
  }
  for (const std::string& entry : overrides) apply_override(tree, entry);
  ExperimentConfig config = extract(tree);
  config.validate();
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j = default_tree();
  j["variant"] = config.variant;
  j["seed"] = config.seed;
  j["out"] = config.out_dir;
  j["env"]["kind"] = config.env_kind;
  j["env"]["hmt"]["arena"] = rect_to_json(config.env.hmt.arena);
  j["env"]["hmt"]["lumber_depot"] = rect_to_json(config.env.hmt.lumber_depot);
  j["env"]["hmt"]["concrete_depot"] = rect_to_json(config.env.hmt.concrete_depot);
  j["env"]["hmt"]["construction_site"] = rect_to_json(config.env.hmt.construction_site);
  j["env"]["hmt"]["step_size"] = config.env.hmt.step_size;
  j["env"]["hmt"]["horizon"] = config.env.hmt.horizon;
  if (config.env.hmt.quota_override.has_value())
    j["env"]["hmt"]["quota_override"] =
        json::array({(*config.env.hmt.quota_override)[0], (*config.env.hmt.quota_override)[1]});
  j["env"]["hsn"]["arena"] = rect_to_json(config.env.hsn.arena);
  j["env"]["hsn"]["step_size"] = config.env.hsn.step_size;
  j["env"]["hsn"]["min_start_distance"] = config.env.hsn.min_start_distance;
  j["env"]["hsn"]["safety_distance"] = config.env.hsn.safety_distance;
  j["env"]["hsn"]["horizon"] = config.env.hsn.horizon;
  j["env"]["hsn"]["max_place_attempts"] = config.env.hsn.max_place_attempts;
  j["train"]["lr"] = config.train.lr;
  j["train"]["entropy_coef"] = config.train.entropy_coef;
  j["train"]["epochs"] = config.train.epochs;
  j["train"]["clip"] = config.train.clip;
  j["train"]["n_step"] = config.train.n_step;
  j["train"]["buffer_length"] = config.train.buffer_length;
  j["train"]["critic_refresh_interval"] = config.train.critic_refresh_interval;
  j["train"]["total_env_steps"] = config.train.total_env_steps;
  j["train"]["resample_every_episodes"] = config.train.resample_every_episodes;
  j["train"]["checkpoint_interval"] = config.train.checkpoint_interval;
  j["train"]["normalize_advantages"] = config.train.normalize_advantages;
  j["eval"]["axis"] = eval_axis_name(config.eval.axis);
  j["eval"]["team_sizes"] = config.eval.team_sizes;
  j["eval"]["teams_per_setting"] = config.eval.teams_per_setting;
  j["eval"]["episodes_per_team"] = config.eval.episodes_per_team;
  return j.dump(2) + "\n";
}

uint64_t fnv1a64(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  return strfmt("%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(config))));
}

std::string iso_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest_atomic(const std::string& path, const RunManifest& manifest) {
  json j;
  j["config_hash"] = manifest.config_hash;
  j["code_version"] = manifest.code_version;
  j["seed"] = manifest.seed;
  j["started_at"] = manifest.started_at;
  j["finished_at"] = manifest.finished_at;
  j["files"] = manifest.files;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error(strfmt("cannot write manifest '%s'", tmp.c_str()));
    os << j.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace teamrl
