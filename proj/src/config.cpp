#include "pushsort/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace pushsort {

namespace {

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>) {
      out = std::stod(v, &used);
    } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
      out = static_cast<T>(std::stoull(v, &used));
    } else {
      out = static_cast<T>(std::stoll(v, &used));
    }
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, v));
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(fmt::format("config key '{}': expected true/false, got '{}'", key, v));
}

template <typename Fn>
auto parse_enum(const std::string& key, const std::string& v, Fn fn) {
  try {
    return fn(v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
  }
}

#define PS_NUM(name, member, type)                                                   \
  Field {                                                                            \
    name, [](const RunConfig& c) { return fmt::format("{}", c.member); },            \
        [](RunConfig& c, const std::string& v) { c.member = parse_number<type>(name, v); } \
  }
#define PS_BOOL(name, member)                                                            \
  Field {                                                                                \
    name, [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); },   \
        [](RunConfig& c, const std::string& v) { c.member = parse_bool(name, v); }       \
  }
#define PS_ENUM(name, member, from)                                                     \
  Field {                                                                               \
    name, [](const RunConfig& c) { return to_string(c.member); },                       \
        [](RunConfig& c, const std::string& v) { c.member = parse_enum(name, v, from); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      PS_NUM("seed", seed, std::uint64_t),
      Field{"out_dir", [](const RunConfig& c) { return c.out_dir; },
            [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
      PS_NUM("checkpoint_every", checkpoint_every, int),

      PS_NUM("env.grid_size", env.grid_size, int),
      PS_NUM("env.goal_width", env.goal_width, int),
      PS_NUM("env.push_length", env.push_length, int),
      PS_NUM("env.center_rows", env.center_rows, int),
      PS_NUM("env.center_cols", env.center_cols, int),
      PS_NUM("env.marker_depth", env.marker_depth, double),
      PS_NUM("env.change_tau", env.change_tau, double),
      PS_NUM("env.step_limit", env.step_limit, int),
      PS_NUM("env.step_extension", env.step_extension, int),
      PS_NUM("env.max_no_change", env.max_no_change, int),
      PS_NUM("env.n_type_a", n_type_a, int),
      PS_NUM("env.n_type_b", n_type_b, int),

      PS_ENUM("reward.variant", rewards.variant, reward_variant_from_string),
      PS_NUM("reward.goal_reward", rewards.goal_reward, double),
      PS_NUM("reward.subgoal_g", rewards.subgoal_g, double),
      PS_NUM("reward.change_penalty", rewards.change_penalty, double),
      PS_NUM("reward.vpg_push_reward", rewards.vpg_push_reward, double),
      PS_NUM("reward.in_box_factor", rewards.in_box_factor, double),

      PS_NUM("agent.gamma_final", agent.gamma_final, double),
      PS_ENUM("agent.gamma_schedule", agent.gamma_schedule, gamma_schedule_from_string),
      PS_NUM("agent.gamma_ramp_iterations", agent.gamma_ramp_iterations, int),
      PS_ENUM("agent.target_mode", agent.target_mode, target_mode_from_string),
      PS_BOOL("agent.bootstrap_only_on_change", agent.bootstrap_only_on_change),
      PS_NUM("agent.target_sync_period", agent.target_sync_period, int),
      PS_NUM("agent.epsilon_start", agent.epsilon_start, double),
      PS_NUM("agent.epsilon_end", agent.epsilon_end, double),
      PS_NUM("agent.epsilon_ramp_steps", agent.epsilon_ramp_steps, int),
      PS_NUM("agent.warmup_steps", agent.warmup_steps, int),
      PS_NUM("agent.ucb_c", agent.ucb_c, double),
      PS_ENUM("agent.loss", agent.loss, loss_kind_from_string),
      PS_NUM("agent.batch_size", agent.batch_size, int),
      PS_NUM("agent.total_steps", agent.total_steps, int),
      PS_NUM("agent.divergence_threshold", agent.divergence_threshold, double),
      PS_NUM("agent.exploration_kernel", agent.exploration_kernel, int),
      PS_NUM("agent.replay_capacity", agent.replay_capacity, std::size_t),
      PS_NUM("agent.replay_alpha", agent.replay_alpha, double),
      PS_NUM("agent.learning_rate", agent.sgd.learning_rate, double),
      PS_NUM("agent.momentum", agent.sgd.momentum, double),
      PS_NUM("agent.weight_decay", agent.sgd.weight_decay, double),
      PS_NUM("agent.clip_norm", agent.sgd.clip_norm, double),

      PS_ENUM("model.head", net.head, head_from_string),
      PS_NUM("model.hidden1", net.hidden1, int),
      PS_NUM("model.hidden2", net.hidden2, int),
      PS_NUM("model.orientations", net.orientations, int),

      PS_BOOL("mask.enabled", mask_enabled),
      PS_BOOL("mask.train", mask_train),
      Field{"mask.checkpoint", [](const RunConfig& c) { return c.mask_checkpoint; },
            [](RunConfig& c, const std::string& v) { c.mask_checkpoint = v; }},
      PS_NUM("mask.tau", mask.tau, double),
      PS_NUM("mask.sentinel", mask.sentinel, double),
      PS_NUM("mask.depth_threshold", mask.depth_threshold, double),
      PS_NUM("mask.learning_rate", mask.adam.learning_rate, double),
  };
  return table;
}

#undef PS_NUM
#undef PS_BOOL
#undef PS_ENUM

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("config line {}: expected 'key = value'", line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = fields();
    const auto it =
        std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    }
    if (!seen.insert(key).second) {
      throw ConfigError(fmt::format("config line {}: duplicate key '{}'", line_no, key));
    }
    it->set(cfg, value);
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_config(cfg);
}

void validate_config(const RunConfig& c) {
  const auto fail = [](const std::string& msg) { throw ConfigError("invalid config: " + msg); };
  if (c.env.grid_size < 4) fail("env.grid_size must be >= 4");
  if (c.n_type_a < 0 || c.n_type_b < 0) fail("object counts must be non-negative");
  if (c.agent.gamma_final < 0.0 || c.agent.gamma_final >= 1.0) fail("agent.gamma_final outside [0,1)");
  if (c.agent.batch_size < 1) fail("agent.batch_size must be >= 1");
  if (c.agent.target_sync_period < 1) fail("agent.target_sync_period must be >= 1");
  if (c.agent.total_steps < 0 || c.agent.warmup_steps < 0) fail("step counts must be >= 0");
  if (c.agent.replay_capacity < 1) fail("agent.replay_capacity must be >= 1");
  if (c.rewards.goal_reward <= 0.0 || c.rewards.subgoal_g <= 0.0) {
    fail("reward.goal_reward and reward.subgoal_g must be positive");
  }
  if (c.net.orientations != kDefaultOrientations) fail("model.orientations must be 8");
  if (c.net.head == Head::CoarseBilinear && c.env.grid_size % 4 != 0) {
    fail("coarse_bilinear head needs env.grid_size divisible by 4");
  }
  if (c.checkpoint_every < 1) fail("checkpoint_every must be >= 1");
}

}  // namespace pushsort
