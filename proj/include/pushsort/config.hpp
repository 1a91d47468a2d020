#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushsort/agent.hpp"
#include "pushsort/conv_net.hpp"
#include "pushsort/gridworld.hpp"
#include "pushsort/maskchange.hpp"
#include "pushsort/rewards.hpp"

namespace pushsort {

/// Bad config text or value; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";
  int checkpoint_every = 1000;

  EnvConfig env{};
  int n_type_a = 3;
  int n_type_b = 3;
  RewardConfig rewards{};
  AgentConfig agent{};
  NetSpec net{};

  bool mask_enabled = true;
  bool mask_train = true;
  /// Optional PSMK file loaded into the mask network before training.
  std::string mask_checkpoint;
  MaskConfig mask{};
};

/// Every key with its current value, one `key = value` per line, in a fixed order.
std::string serialize_config(const RunConfig& cfg);

/// Parses flat `key = value` text; '#' starts a comment. Unknown keys are errors.
/// Keys not present keep their defaults.
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

/// Documented key names, in serialization order.
std::vector<std::string> config_keys();

/// Throws ConfigError when fields are inconsistent.
void validate_config(const RunConfig& cfg);

}  // namespace pushsort
