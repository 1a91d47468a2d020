// pushsort: train, resume and evaluate pixel-action Q-learning on the bin-sorting grid.
//
// Exit codes: 0 success, 1 usage/config error, 2 IO or corrupt input.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pushsort/binary_io.hpp"
#include "pushsort/config.hpp"
#include "pushsort/eval.hpp"
#include "pushsort/training.hpp"

namespace fs = std::filesystem;
using namespace pushsort;

namespace {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("PUSHSORT_LOG");
  if (!env) return LogLevel::Info;
  const std::string v = env;
  if (v == "quiet" || v == "error" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

template <typename... Args>
void log(LogLevel level, fmt::format_string<Args...> f, Args&&... args) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  std::cerr << fmt::format(f, std::forward<Args>(args)...) << '\n';
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> out, std::optional<int> steps) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (steps) cfg.agent.total_steps = *steps;
  validate_config(cfg);
  const fs::path out_dir = out ? fs::path(*out) : fs::path(cfg.out_dir);
  log(LogLevel::Info, "train: {} iterations, seed {}, out {}", cfg.agent.total_steps, cfg.seed,
      out_dir.string());
  const TrainingSummary s = run_training(cfg, out_dir);
  log(LogLevel::Info, "done: {} iterations, {} updates, max predicted Q {}{}", s.iterations,
      s.gradient_updates, s.max_pred_q, s.diverged ? " (diverged)" : "");
  return 0;
}

int cmd_resume(const std::string& checkpoint, std::int64_t steps, std::optional<std::string> out) {
  const fs::path ckpt = checkpoint;
  const fs::path out_dir = out ? fs::path(*out) : ckpt.parent_path();
  log(LogLevel::Info, "resume: {} more iterations from {}", steps, ckpt.string());
  const TrainingSummary s = resume_training(ckpt, steps, out_dir);
  log(LogLevel::Info, "done: iteration {}, {} updates{}", s.iterations, s.gradient_updates,
      s.diverged ? " (diverged)" : "");
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& scenes_dir, bool finetune,
             double finetune_lr, bool keep_weights, std::optional<std::string> out,
             std::optional<double> gamma) {
  Policy policy = load_policy(checkpoint);
  const auto scenes = load_scene_dir(scenes_dir);
  if (scenes.empty()) throw UsageError("no scene files in " + scenes_dir);
  for (const auto& [id, s] : scenes) {
    if (s.grid_size != policy.config.env.grid_size) {
      throw UsageError(fmt::format("scene {} has grid {} but the model expects {}", id,
                                   s.grid_size, policy.config.env.grid_size));
    }
  }
  FinetuneConfig ft;
  ft.enabled = finetune;
  ft.learning_rate = finetune_lr;
  ft.reset_after = !keep_weights;
  ft.gamma = gamma.value_or(policy.config.agent.gamma_final);
  ft.loss = policy.config.agent.loss;

  const SuiteResult result = evaluate_suite(policy, scenes, ft);
  const fs::path out_dir = out ? fs::path(*out) : fs::path(checkpoint) / "eval";
  write_eval_outputs(out_dir, result, policy.config.env.grid_size, ft.gamma);
  const auto& r = result.report;
  log(LogLevel::Info, "{} scenes: completion {}%, G_max {} +- {}, change {}%", r.scenes,
      r.completion_pct, r.g_max_mean, r.g_max_std, r.change_pct);
  log(LogLevel::Info, "report written to {}", (out_dir / "report.json").string());
  return 0;
}

int cmd_make_scenes(std::uint64_t seed, int count, const std::string& out,
                    const std::string& preset, std::optional<std::string> config_path) {
  RunConfig cfg;
  if (config_path) cfg = load_config(*config_path);
  fs::create_directories(out);
  const int n_objects = cfg.n_type_a + cfg.n_type_b;

  std::vector<Scene> scenes;
  std::string prefix;
  if (preset == "standard") {
    prefix = "std";
    std::mt19937_64 rng(seed);
    for (int i = 0; i < count; ++i) {
      scenes.push_back(generate_scene(rng(), cfg.n_type_a, cfg.n_type_b, cfg.env));
    }
  } else if (preset == "random-types") {
    prefix = "rnd";
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < count; ++i) {
      std::vector<ObjectKind> kinds;
      for (int k = 0; k < n_objects; ++k) kinds.push_back(coin(rng) ? ObjectKind::CubeA : ObjectKind::CuboidB);
      scenes.push_back(generate_scene(rng(), kinds, cfg.env));
    }
  } else if (preset == "challenge") {
    prefix = "chl";
    scenes = challenge_scenes(cfg.env);
  } else {
    throw UsageError("unknown preset '" + preset + "' (standard, random-types, challenge)");
  }
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    save_scene(fs::path(out) / fmt::format("{}_{:03}.json", prefix, i), scenes[i]);
  }
  log(LogLevel::Info, "wrote {} {} scenes to {}", scenes.size(), preset, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pixel-action Q-learning for grid bin sorting"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> train_steps;
  auto* train = app.add_subcommand("train", "train from a config file");
  train->add_option("config", config_path, "flat key = value config file")->required();
  train->add_option("--seed", seed, "override the run seed");
  train->add_option("--out", out, "output directory (default: out_dir from the config)");
  train->add_option("--steps", train_steps, "override agent.total_steps");

  std::string checkpoint;
  std::int64_t resume_steps = 0;
  auto* resume = app.add_subcommand("resume", "continue a run from its checkpoint directory");
  resume->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  resume->add_option("--steps", resume_steps, "additional iterations")->required();
  resume->add_option("--out", out, "run directory holding metrics.csv (default: parent of checkpoint)");

  std::string scenes_dir;
  bool finetune = false;
  bool keep_weights = false;
  double finetune_lr = 1e-4;
  std::optional<double> gamma;
  auto* eval = app.add_subcommand("eval", "greedy test episodes on a scene directory");
  eval->add_option("checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("scenes", scenes_dir, "directory of scene .json files")->required();
  eval->add_flag("--finetune", finetune, "one SGD step per executed action on a weight copy");
  eval->add_option("--finetune-lr", finetune_lr, "fine-tune learning rate");
  eval->add_flag("--keep-finetuned", keep_weights, "carry fine-tuned weights across scenes");
  eval->add_option("--gamma", gamma, "discount for true Q-traces and fine-tune labels");
  eval->add_option("--out", out, "report directory (default: <checkpoint>/eval)");

  std::uint64_t scene_seed = 0;
  int count = 25;
  std::string scene_out;
  std::string preset = "standard";
  std::optional<std::string> scene_config;
  auto* make = app.add_subcommand("make-scenes", "write scene files");
  make->add_option("--seed", scene_seed, "generator seed");
  make->add_option("--count", count, "number of scenes (ignored for challenge)");
  make->add_option("--out", scene_out, "output directory")->required();
  make->add_option("--preset", preset, "standard | random-types | challenge");
  make->add_option("--config", scene_config, "config file for grid and object counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) return cmd_train(config_path, seed, out, train_steps);
    if (*resume) return cmd_resume(checkpoint, resume_steps, out);
    if (*eval) {
      return cmd_eval(checkpoint, scenes_dir, finetune, finetune_lr, keep_weights, out, gamma);
    }
    if (*make) return cmd_make_scenes(scene_seed, count, scene_out, preset, scene_config);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
