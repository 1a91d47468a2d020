#include "pushsort/training.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "pushsort/binary_io.hpp"
#include "pushsort/seeding.hpp"

namespace pushsort {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kStateVersion = 1;
constexpr int kMaxSceneDraws = 64;

std::optional<ChangeMask> make_mask(const RunConfig& cfg) {
  if (!cfg.mask_enabled) return std::nullopt;
  ChangeMask mask(cfg.net, cfg.env.grid_size, derive_seed(cfg.seed, SeedStream::MaskInit), cfg.mask);
  if (!cfg.mask_checkpoint.empty()) {
    const ModelFile f = read_model_file(cfg.mask_checkpoint, kMaskMagic, 0);
    if (f.parameters.size() != mask.net().parameter_count()) {
      throw CheckpointError("mask checkpoint " + cfg.mask_checkpoint + ": parameter count mismatch");
    }
    mask.net().set_parameters(f.parameters);
  }
  return mask;
}

int resolve_kernel(const RunConfig& cfg) {
  if (cfg.agent.exploration_kernel > 0) return cfg.agent.exploration_kernel;
  return exploration_kernel_for(cfg.env.resolved_push_length());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint component " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

Trainer::Trainer(RunConfig cfg)
    : cfg_(std::move(cfg)),
      codec_(cfg_.env.grid_size, cfg_.net.orientations),
      push_length_(cfg_.env.resolved_push_length()),
      exploration_kernel_(resolve_kernel(cfg_)),
      learner_(cfg_.agent, cfg_.net, cfg_.env.grid_size,
               derive_seed(cfg_.seed, SeedStream::NetworkInit), make_mask(cfg_)),
      buffer_(cfg_.agent.replay_capacity, cfg_.agent.replay_alpha),
      ucb_(cfg_.net.orientations),
      env_rng_(derive_seed(cfg_.seed, SeedStream::Environment)),
      explore_rng_(derive_seed(cfg_.seed, SeedStream::Exploration)),
      replay_rng_(derive_seed(cfg_.seed, SeedStream::Replay)) {
  validate_config(cfg_);
}

Trainer::Trainer(RunConfig cfg, ResumeTag) : Trainer(std::move(cfg)) {}

void Trainer::start_episode() {
  Scene scene;
  for (int draw = 0; draw < kMaxSceneDraws; ++draw) {
    scene = generate_scene(env_rng_(), cfg_.n_type_a, cfg_.n_type_b, cfg_.env);
    if (!scene.objects.empty()) break;
  }
  if (episode_) ++episode_index_;
  episode_.emplace(std::move(scene), cfg_.env, cfg_.rewards);
}

IterationResult Trainer::run_iteration(std::ostream* metrics) {
  if (!episode_ || episode_->done()) start_episode();

  IterationResult res;
  const AgentConfig& ac = cfg_.agent;
  const bool warmup = iteration_ < ac.warmup_steps;
  res.epsilon = warmup ? 1.0 : epsilon_at(iteration_, ac);
  const double gamma = gamma_at(iteration_, syncs_, ac);

  const Heightmap state = episode_->observation();
  const auto expl = exploration_mask(state, exploration_kernel_);
  // The exploit branch needs the Q-map; exploration does not, so skip the
  // forward pass when epsilon is 1. The draw sequence is identical either way.
  Tensor q;
  std::vector<double> mask;
  if (res.epsilon < 1.0) {
    q = learner_.qmap(state);
    mask = learner_.mask_for(state);
  }
  const Selection sel =
      select_action(q.values(), mask, ucb_, ac.ucb_c, res.epsilon, explore_rng_, expl, codec_);

  StepOutcome out = episode_->step(codec_.decode(sel.flat_index));
  res.reward = out.reward;
  res.episode_done = out.done;

  Experience exp;
  exp.state = state;
  exp.action = sel.flat_index;
  exp.reward = out.reward;
  exp.next_state = std::move(out.next_state);
  exp.terminal = out.terminal();
  exp.truncated = out.truncated();
  exp.changed = out.changed;
  if (ac.target_mode == TargetMode::StoredLabel) {
    exp.stored_label = learner_.label_for(exp, TargetMode::OnlineMax, gamma);
  }
  buffer_.push(std::move(exp));

  if (!warmup) {
    const std::size_t batch_size = static_cast<std::size_t>(ac.batch_size);
    const SlotHandle newest = buffer_.newest();
    std::vector<SampledExperience> batch;
    batch.reserve(batch_size);
    batch.push_back({newest, buffer_.get(newest)});
    if (batch_size > 1) {
      auto drawn = buffer_.sample(batch_size - 1, replay_rng_);
      batch.insert(batch.end(), drawn.begin(), drawn.end());
    }
    res.report = learner_.train_step(batch, buffer_, gamma, cfg_.mask_enabled && cfg_.mask_train);
    res.trained = true;
    ++updates_;
    if (res.report.diverged) diverged_ = true;
    if (updates_ == 1 || res.report.max_pred_q > max_pred_seen_) {
      max_pred_seen_ = res.report.max_pred_q;
    }
    res.report.diverged = diverged_;
    if (metrics) {
      *metrics << format_metrics_row(iteration_, episode_index_, res.reward, res.report, res.epsilon)
               << '\n';
    }
  }

  ++iteration_;
  if (iteration_ % ac.target_sync_period == 0) {
    learner_.sync_target();
    ++syncs_;
  }
  return res;
}

void Trainer::run(std::int64_t steps, std::ostream* metrics) {
  for (std::int64_t i = 0; i < steps; ++i) run_iteration(metrics);
}

std::string format_metrics_row(std::int64_t iter, std::int64_t episode, double step_reward,
                               const TrainReport& report, double epsilon) {
  return fmt::format("{},{},{},{},{},{},{},{},{}", iter, episode, step_reward, report.loss,
                     report.mean_abs_td, epsilon, report.gamma_used, report.max_pred_q,
                     report.diverged ? 1 : 0);
}

// ---------------------------------------------------------------- checkpoints

void Trainer::save_checkpoint(const fs::path& dir, std::uint64_t metrics_bytes) const {
  // Write into a sibling directory and swap it in, so a crash mid-write leaves
  // the previous checkpoint intact.
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  save_config(tmp / "config.txt", cfg_);

  const ConvNet& online = learner_.online();
  const std::span<const double> velocity = learner_.optimizer().velocity();
  write_model_file(tmp / "online.psdq", kModelMagic, online.parameters(),
                   std::span<const std::span<const double>>(&velocity, 1));
  if (learner_.target()) {
    write_model_file(tmp / "target.psdq", kModelMagic, learner_.target()->parameters(), {});
  }
  if (learner_.mask()) {
    const ChangeMask& m = *learner_.mask();
    const std::span<const double> moments[] = {m.optimizer().first_moment(),
                                               m.optimizer().second_moment()};
    write_model_file(tmp / "mask.psmk", kMaskMagic, m.net().parameters(), moments);
  }
  buffer_.save(tmp / "buffer.psrb");

  json st;
  st["version"] = kStateVersion;
  st["iteration"] = iteration_;
  st["episode_index"] = episode_index_;
  st["gradient_updates"] = updates_;
  st["completed_syncs"] = syncs_;
  st["diverged"] = diverged_;
  st["max_pred_q_seen"] = max_pred_seen_;
  st["ucb_counts"] = ucb_.counts;
  st["ucb_t"] = ucb_.t;
  st["rng_env"] = serialize_rng(env_rng_);
  st["rng_explore"] = serialize_rng(explore_rng_);
  st["rng_replay"] = serialize_rng(replay_rng_);
  st["mask_adam_steps"] = learner_.mask() ? learner_.mask()->optimizer().steps() : 0;
  st["metrics_bytes"] = metrics_bytes;
  if (episode_) {
    const Scene& s = episode_->scene();
    st["episode"] = {{"scene", json::parse(scene_to_json(s))},
                     {"sorted_count", s.sorted_count},
                     {"initial_sorted", s.initial_sorted},
                     {"steps", episode_->steps_taken()},
                     {"no_change_streak", episode_->no_change_streak()}};
  } else {
    st["episode"] = nullptr;
  }
  write_text(tmp / "state.json", st.dump(1) + "\n");

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Trainer::Restored Trainer::load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CheckpointError("checkpoint directory not found: " + dir.string());
  RunConfig cfg;
  try {
    cfg = parse_config(read_text(dir / "config.txt"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  // The stored mask weights supersede any preload path.
  const std::string preload = cfg.mask_checkpoint;
  cfg.mask_checkpoint.clear();
  auto trainer = std::unique_ptr<Trainer>(new Trainer(cfg, ResumeTag{}));
  trainer->cfg_.mask_checkpoint = preload;
  Trainer& t = *trainer;

  json st;
  try {
    st = json::parse(read_text(dir / "state.json"));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt state.json: ") + e.what());
  }

  try {
    if (st.at("version").get<int>() != kStateVersion) {
      throw CheckpointError("state.json version mismatch");
    }
    const std::size_t n = t.learner_.online().parameter_count();
    const ModelFile online = read_model_file(dir / "online.psdq", kModelMagic, 1);
    if (online.parameters.size() != n) throw CheckpointError("online.psdq: parameter count mismatch");
    t.learner_.online().set_parameters(online.parameters);
    t.learner_.optimizer().set_velocity(online.optimizer_state[0]);

    if (t.learner_.target()) {
      const ModelFile target = read_model_file(dir / "target.psdq", kModelMagic, 0);
      if (target.parameters.size() != n) throw CheckpointError("target.psdq: parameter count mismatch");
      t.learner_.target()->set_parameters(target.parameters);
    }
    if (t.learner_.mask()) {
      ChangeMask& m = *t.learner_.mask();
      const ModelFile mf = read_model_file(dir / "mask.psmk", kMaskMagic, 2);
      if (mf.parameters.size() != m.net().parameter_count()) {
        throw CheckpointError("mask.psmk: parameter count mismatch");
      }
      m.net().set_parameters(mf.parameters);
      m.optimizer().restore(mf.optimizer_state[0], mf.optimizer_state[1],
                            st.at("mask_adam_steps").get<std::int64_t>());
    }
    t.buffer_ = RankPrioritizedBuffer::load(dir / "buffer.psrb");

    t.iteration_ = st.at("iteration").get<std::int64_t>();
    t.episode_index_ = st.at("episode_index").get<std::int64_t>();
    t.updates_ = st.at("gradient_updates").get<std::int64_t>();
    t.syncs_ = st.at("completed_syncs").get<std::int64_t>();
    t.diverged_ = st.at("diverged").get<bool>();
    t.max_pred_seen_ = st.at("max_pred_q_seen").get<double>();
    t.ucb_.counts = st.at("ucb_counts").get<std::vector<std::int64_t>>();
    t.ucb_.t = st.at("ucb_t").get<std::int64_t>();
    if (t.ucb_.counts.size() != static_cast<std::size_t>(cfg.net.orientations)) {
      throw CheckpointError("state.json: UCB counts do not match orientations");
    }
    t.env_rng_ = deserialize_rng(st.at("rng_env").get<std::string>());
    t.explore_rng_ = deserialize_rng(st.at("rng_explore").get<std::string>());
    t.replay_rng_ = deserialize_rng(st.at("rng_replay").get<std::string>());

    const json& ep = st.at("episode");
    if (!ep.is_null()) {
      Scene scene = scene_from_json(ep.at("scene").dump());
      scene.sorted_count = ep.at("sorted_count").get<int>();
      scene.initial_sorted = ep.at("initial_sorted").get<int>();
      t.episode_.emplace(Episode::restore(std::move(scene), cfg.env, cfg.rewards,
                                          ep.at("steps").get<int>(),
                                          ep.at("no_change_streak").get<int>()));
    }
    return {std::move(trainer), st.at("metrics_bytes").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("corrupt state.json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const CheckpointError*>(&e)) throw;
    throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------- drivers

namespace {

TrainingSummary drive(Trainer& trainer, std::int64_t steps, const fs::path& out_dir,
                      std::ofstream& metrics) {
  const int every = trainer.config().checkpoint_every;
  const fs::path ckpt = out_dir / "checkpoint";
  for (std::int64_t i = 0; i < steps; ++i) {
    trainer.run_iteration(&metrics);
    if (trainer.iteration() % every == 0 && i + 1 < steps) {
      metrics.flush();
      trainer.save_checkpoint(ckpt, static_cast<std::uint64_t>(metrics.tellp()));
    }
  }
  metrics.flush();
  if (!metrics) throw std::runtime_error("failed writing metrics.csv");
  trainer.save_checkpoint(ckpt, static_cast<std::uint64_t>(metrics.tellp()));
  return {trainer.iteration(), trainer.gradient_updates(), trainer.diverged(),
          trainer.max_pred_q_seen()};
}

}  // namespace

TrainingSummary run_training(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  RunConfig effective = cfg;
  effective.out_dir = out_dir.string();
  save_config(out_dir / "config.txt", effective);

  Trainer trainer(effective);
  std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
  metrics << kMetricsHeader << '\n';
  return drive(trainer, effective.agent.total_steps, out_dir, metrics);
}

TrainingSummary resume_training(const fs::path& checkpoint_dir, std::int64_t steps,
                                const fs::path& out_dir) {
  Trainer::Restored restored = Trainer::load_checkpoint(checkpoint_dir);
  fs::create_directories(out_dir);
  const fs::path metrics_path = out_dir / "metrics.csv";

  // Rows written after the checkpoint belong to a discarded future; drop them.
  if (fs::exists(metrics_path)) {
    const auto size = fs::file_size(metrics_path);
    if (size < restored.metrics_bytes) {
      throw CheckpointError("metrics.csv is shorter than the checkpoint records");
    }
    fs::resize_file(metrics_path, restored.metrics_bytes);
  } else {
    // Fresh output directory: start a new log with just the header.
    write_text(metrics_path, std::string(kMetricsHeader) + "\n");
  }
  if (!fs::exists(out_dir / "config.txt")) {
    save_config(out_dir / "config.txt", restored.trainer->config());
  }

  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::app);
  if (!metrics) throw std::runtime_error("cannot append to " + metrics_path.string());
  metrics.seekp(0, std::ios::end);
  return drive(*restored.trainer, steps, out_dir, metrics);
}

}  // namespace pushsort
