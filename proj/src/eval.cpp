#include "pushsort/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "pushsort/agent.hpp"
#include "pushsort/binary_io.hpp"

namespace pushsort {

namespace fs = std::filesystem;

int EpisodeTrace::action_count() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const StepRecord& s) { return s.action.has_value(); }));
}

double finetune_update(ConvNet& net, SgdMomentum& sgd, const Experience& exp,
                       const ChangeMask* mask, const FinetuneConfig& cfg) {
  double label = exp.reward;
  if (!exp.terminal && exp.changed) {
    const Tensor next = net.forward(exp.next_state);
    std::vector<double> add;
    if (mask) add = mask->additive(exp.next_state);
    label += cfg.gamma * next[masked_argmax(next.values(), add)];
  }
  const auto trace = net.forward_trace(normalize_heightmap(exp.state));
  const LossValue l = regression_loss(cfg.loss, trace.output()[exp.action], label);
  Tensor grad_out(net.output_shape());
  grad_out[exp.action] = l.grad;
  std::vector<double> grads(net.parameter_count(), 0.0);
  net.backward(trace, grad_out, grads);
  sgd.step(net.parameters(), grads);
  return label;
}

EpisodeTrace run_test_episode(const ConvNet& model, const ChangeMask* mask, const Scene& scene,
                              const EnvConfig& env, const RewardConfig& rewards,
                              const FinetuneConfig& finetune, const std::string& scene_id,
                              ConvNet* adapted) {
  EpisodeTrace trace;
  trace.scene_id = scene_id;
  Episode episode(scene, env, rewards);
  if (episode.done()) {
    // Nothing left to sort: a single record marks the terminal state.
    trace.steps.push_back({});
    trace.termination_cause = episode.cause();
    if (adapted) *adapted = model;
    return trace;
  }

  ConvNet net = model;
  SgdConfig sgd_cfg;
  sgd_cfg.learning_rate = finetune.learning_rate;
  SgdMomentum sgd(sgd_cfg, net.parameter_count());
  const ActionCodec codec(env.grid_size, model.spec().orientations);

  while (!episode.done()) {
    const Heightmap state = episode.observation();
    const Tensor q = net.forward(state);
    std::vector<double> add;
    if (mask) add = mask->additive(state);
    const std::size_t a = masked_argmax(q.values(), add);
    const Action action = codec.decode(a);
    StepOutcome out = episode.step(action);
    trace.steps.push_back({action, out.reward, q[a], out.changed, out.newly_sorted});

    if (finetune.enabled) {
      Experience exp;
      exp.state = state;
      exp.action = a;
      exp.reward = out.reward;
      exp.next_state = std::move(out.next_state);
      exp.terminal = out.terminal();
      exp.truncated = out.truncated();
      exp.changed = out.changed;
      finetune_update(net, sgd, exp, mask, finetune);
    }
  }
  trace.termination_cause = episode.cause();
  if (adapted) *adapted = std::move(net);
  return trace;
}

std::vector<double> true_q_trace(const EpisodeTrace& trace, double gamma) {
  std::vector<double> g(trace.steps.size());
  double next = 0.0;
  for (std::size_t i = trace.steps.size(); i-- > 0;) {
    next = (i + 1 == trace.steps.size()) ? trace.steps[i].reward
                                         : trace.steps[i].reward + gamma * next;
    g[i] = next;
  }
  return g;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces, int orientations) {
  if (traces.empty()) throw std::invalid_argument("compute_metrics: no traces");
  MetricsReport m;
  m.scenes = traces.size();
  m.orientation_shares.assign(static_cast<std::size_t>(orientations), 0.0);

  std::vector<double> g_max;
  std::vector<double> n_actions;
  std::int64_t steps = 0;
  std::int64_t changed = 0;
  for (const auto& t : traces) {
    int sorted = 0;
    for (const auto& s : t.steps) {
      sorted += s.newly_sorted;
      if (!s.action) continue;
      ++steps;
      if (s.changed) ++changed;
      m.orientation_shares.at(static_cast<std::size_t>(s.action->orientation)) += 1.0;
    }
    g_max.push_back(sorted);
    if (t.completed()) {
      ++m.completed;
      n_actions.push_back(t.action_count());
    }
  }
  m.completion_pct = 100.0 * static_cast<double>(m.completed) / static_cast<double>(m.scenes);
  std::tie(m.g_max_mean, m.g_max_std) = mean_std(g_max);
  if (steps > 0) {
    m.change_pct = 100.0 * static_cast<double>(changed) / static_cast<double>(steps);
    for (auto& share : m.orientation_shares) share /= static_cast<double>(steps);
  }
  if (!n_actions.empty()) {
    const auto [mean, sd] = mean_std(n_actions);
    m.n_actions_mean = mean;
    m.n_actions_std = sd;
  }
  return m;
}

ActionHeatmap action_heatmap(const std::vector<EpisodeTrace>& traces, int grid_size,
                             int orientations) {
  const auto cells = static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size);
  ActionHeatmap h;
  h.grid_size = grid_size;
  h.total.assign(cells, 0);
  h.per_orientation.assign(static_cast<std::size_t>(orientations),
                           std::vector<std::int64_t>(cells, 0));
  for (const auto& t : traces) {
    for (const auto& s : t.steps) {
      if (!s.action) continue;
      const auto cell = static_cast<std::size_t>(s.action->row * grid_size + s.action->col);
      ++h.total.at(cell);
      ++h.per_orientation.at(static_cast<std::size_t>(s.action->orientation)).at(cell);
    }
  }
  return h;
}

std::string report_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["scenes"] = m.scenes;
  j["completed"] = m.completed;
  j["completion_pct"] = m.completion_pct;
  j["g_max_mean"] = m.g_max_mean;
  j["g_max_std"] = m.g_max_std;
  j["change_pct"] = m.change_pct;
  j["n_actions_mean"] = m.n_actions_mean ? nlohmann::ordered_json(*m.n_actions_mean) : nullptr;
  j["n_actions_std"] = m.n_actions_std ? nlohmann::ordered_json(*m.n_actions_std) : nullptr;
  j["orientation_shares"] = m.orientation_shares;
  return j.dump(2) + "\n";
}

void write_count_csv(const fs::path& path, std::span<const std::int64_t> counts, int grid_size) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (int r = 0; r < grid_size; ++r) {
    for (int c = 0; c < grid_size; ++c) {
      if (c) out << ',';
      out << counts[static_cast<std::size_t>(r * grid_size + c)];
    }
    out << '\n';
  }
}

void write_qtrace_csv(const fs::path& path, const EpisodeTrace& trace, double gamma) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto g = true_q_trace(trace, gamma);
  out << "step,orientation,row,col,reward,predicted_q,true_q,changed\n";
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    if (s.action) {
      out << fmt::format("{},{},{},{},{},{},{},{}\n", i, s.action->orientation, s.action->row,
                         s.action->col, s.reward, s.predicted_q, g[i], s.changed ? 1 : 0);
    } else {
      out << fmt::format("{},,,,{},{},{},0\n", i, s.reward, s.predicted_q, g[i]);
    }
  }
}

std::vector<std::pair<std::string, Scene>> load_scene_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("scene directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<std::pair<std::string, Scene>> scenes;
  for (const auto& f : files) {
    Scene s = load_scene(f);
    validate_scene(s);
    scenes.emplace_back(f.stem().string(), std::move(s));
  }
  return scenes;
}

std::vector<Scene> challenge_scenes(const EnvConfig& env) {
  const Scene base = empty_scene(env);
  const int g = base.grid_size;
  const int w = base.goal_width;
  const int mid = g / 2;
  const auto A = ObjectKind::CubeA;
  const auto B = ObjectKind::CuboidB;

  std::vector<std::vector<ObjectSpec>> layouts = {
      // two-by-three block, types interleaved
      {{A, mid - 1, mid - 1}, {B, mid - 1, mid}, {A, mid - 1, mid + 1},
       {B, mid, mid - 1}, {A, mid, mid}, {B, mid, mid + 1}},
      // every object starts in the other type's goal region
      {{A, mid - 2, g - w + 1}, {A, mid, g - w + 1}, {A, mid + 2, g - w + 1},
       {B, mid - 2, w - 2}, {B, mid, w - 2}, {B, mid + 2, w - 2}},
      // packed row along the top wall
      {{A, 0, mid - 3}, {B, 0, mid - 2}, {A, 0, mid - 1},
       {B, 0, mid}, {A, 0, mid + 1}, {B, 0, mid + 2}},
      // diagonal chain through the center
      {{A, mid - 3, mid - 3}, {B, mid - 2, mid - 2}, {A, mid - 1, mid - 1},
       {B, mid, mid}, {A, mid + 1, mid + 1}, {B, mid + 2, mid + 2}},
      // each type parked just inside the far marker
      {{A, mid - 1, g - w - 2}, {A, mid, g - w - 2}, {A, mid + 1, g - w - 2},
       {B, mid - 1, w + 1}, {B, mid, w + 1}, {B, mid + 1, w + 1}},
  };

  std::vector<Scene> out;
  for (auto& objs : layouts) {
    Scene s = base;
    s.objects = std::move(objs);
    validate_scene(s);
    for (const auto& o : s.objects) {
      if (s.in_correct_goal(o)) throw std::logic_error("challenge layout starts sorted");
    }
    out.push_back(std::move(s));
  }
  return out;
}

Policy load_policy(const fs::path& dir) {
  RunConfig cfg;
  {
    std::ifstream in(dir / "config.txt");
    if (!in) throw CheckpointError("missing " + (dir / "config.txt").string());
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config(ss.str());
  }
  ConvNet online(cfg.net, cfg.env.grid_size, 0);
  const ModelFile f = read_model_file(dir / "online.psdq", kModelMagic, 1);
  if (f.parameters.size() != online.parameter_count()) {
    throw CheckpointError("online.psdq: parameter count mismatch");
  }
  online.set_parameters(f.parameters);

  std::optional<ChangeMask> mask;
  if (cfg.mask_enabled) {
    mask.emplace(cfg.net, cfg.env.grid_size, 0, cfg.mask);
    const ModelFile mf = read_model_file(dir / "mask.psmk", kMaskMagic, 2);
    if (mf.parameters.size() != mask->net().parameter_count()) {
      throw CheckpointError("mask.psmk: parameter count mismatch");
    }
    mask->net().set_parameters(mf.parameters);
  }
  return {std::move(cfg), std::move(online), std::move(mask)};
}

SuiteResult evaluate_suite(const Policy& policy,
                           const std::vector<std::pair<std::string, Scene>>& scenes,
                           const FinetuneConfig& finetune) {
  if (scenes.empty()) throw std::invalid_argument("evaluate_suite: no scenes");
  SuiteResult result;
  const ChangeMask* mask = policy.mask ? &*policy.mask : nullptr;
  ConvNet carried = policy.online;
  for (const auto& [id, scene] : scenes) {
    const bool carry = finetune.enabled && !finetune.reset_after;
    ConvNet adapted = carried;
    result.traces.push_back(run_test_episode(carry ? carried : policy.online, mask, scene,
                                             policy.config.env, policy.config.rewards, finetune,
                                             id, carry ? &adapted : nullptr));
    if (carry) carried = std::move(adapted);
  }
  result.report = compute_metrics(result.traces, policy.online.spec().orientations);
  return result;
}

void write_eval_outputs(const fs::path& out_dir, const SuiteResult& result, int grid_size,
                        double gamma) {
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json");
    out << report_to_json(result.report);
  }
  const int k = static_cast<int>(result.report.orientation_shares.size());
  const ActionHeatmap h = action_heatmap(result.traces, grid_size, k);
  write_count_csv(out_dir / "heatmap_total.csv", h.total, grid_size);
  for (int o = 0; o < k; ++o) {
    write_count_csv(out_dir / fmt::format("heatmap_o{}.csv", o),
                    h.per_orientation[static_cast<std::size_t>(o)], grid_size);
  }
  for (const auto& t : result.traces) {
    write_qtrace_csv(out_dir / fmt::format("qtrace_{}.csv", t.scene_id), t, gamma);
  }
}

}  // namespace pushsort
