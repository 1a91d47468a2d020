#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "pushsort_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string("PUSHSORT_LOG=quiet \"") + PUSHSORT_CLI + "\" " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string p(const fs::path& path) { return "\"" + path.string() + "\""; }

fs::path tiny_config() {
  fs::create_directories(kRoot);
  const fs::path cfg = kRoot / "tiny.cfg";
  std::ofstream(cfg) << "# small and quick\n"
                        "env.grid_size = 8\n"
                        "env.n_type_a = 1\n"
                        "env.n_type_b = 1\n"
                        "agent.total_steps = 100\n"
                        "agent.warmup_steps = 40\n"
                        "agent.batch_size = 4\n"
                        "agent.target_sync_period = 20\n"
                        "checkpoint_every = 50\n";
  return cfg;
}

}  // namespace

TEST_CASE("train writes config, metrics and a checkpoint") {
  const fs::path cfg = tiny_config();
  const fs::path out = kRoot / "a";
  fs::remove_all(out);
  REQUIRE(run("train " + p(cfg) + " --seed 4 --out " + p(out)) == 0);
  CHECK(fs::exists(out / "config.txt"));
  for (const char* f : {"config.txt", "online.psdq", "target.psdq", "mask.psmk", "buffer.psrb", "state.json"})
    CHECK(fs::exists(out / "checkpoint" / f));
  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(metrics.rfind("iter,episode,step_reward,loss,mean_abs_td,epsilon,gamma,max_pred_q,diverged\n", 0) == 0);
  std::istringstream rows(metrics);
  int n = 0;
  for (std::string line; std::getline(rows, line);) ++n;
  CHECK(n == 1 + 60);
  const auto st = nlohmann::json::parse(slurp(out / "checkpoint" / "state.json"));
  CHECK(st.at("iteration") == 100);

  SUBCASE("same seed, same bytes") {
    const fs::path again = kRoot / "a2";
    fs::remove_all(again);
    REQUIRE(run("train " + p(cfg) + " --seed 4 --out " + p(again)) == 0);
    CHECK(slurp(again / "metrics.csv") == metrics);
  }
}

TEST_CASE("resume continues a run exactly") {
  const fs::path cfg = tiny_config();
  const fs::path straight = kRoot / "s", split = kRoot / "r";
  fs::remove_all(straight);
  fs::remove_all(split);
  REQUIRE(run("train " + p(cfg) + " --seed 6 --steps 100 --out " + p(straight)) == 0);
  REQUIRE(run("train " + p(cfg) + " --seed 6 --steps 60 --out " + p(split)) == 0);
  REQUIRE(run("resume " + p(split / "checkpoint") + " --steps 40") == 0);
  CHECK(slurp(split / "metrics.csv") == slurp(straight / "metrics.csv"));
  CHECK(slurp(split / "checkpoint" / "online.psdq") == slurp(straight / "checkpoint" / "online.psdq"));

  // A checkpoint from another format version is refused.
  const fs::path state = split / "checkpoint" / "state.json";
  auto st = nlohmann::json::parse(slurp(state));
  st["version"] = 999;
  std::ofstream(state) << st.dump();
  CHECK(run("resume " + p(split / "checkpoint") + " --steps 10") != 0);
}

TEST_CASE("bad input exits nonzero") {
  CHECK(run("train " + p(kRoot / "missing.cfg")) != 0);
  const fs::path bad = kRoot / "bad.cfg";
  fs::create_directories(kRoot);
  std::ofstream(bad) << "agent.no_such_key = 3\n";
  CHECK(run("train " + p(bad) + " --out " + p(kRoot / "bad")) != 0);
  CHECK(run("frobnicate") != 0);
  CHECK(run("--help") == 0);
}

TEST_CASE("make-scenes and eval") {
  const fs::path cfg = tiny_config();
  const fs::path sc = kRoot / "scenes", sc2 = kRoot / "scenes2", ch = kRoot / "chal";
  for (const auto& d : {sc, sc2, ch}) fs::remove_all(d);
  REQUIRE(run("make-scenes --out " + p(sc) + " --seed 3 --config " + p(cfg)) == 0);
  REQUIRE(run("make-scenes --out " + p(sc2) + " --seed 3 --config " + p(cfg)) == 0);
  int count = 0;
  for (const auto& e : fs::directory_iterator(sc)) {
    ++count;
    CHECK(slurp(e.path()) == slurp(sc2 / e.path().filename()));
  }
  CHECK(count == 25);
  REQUIRE(run("make-scenes --out " + p(ch) + " --preset challenge") == 0);
  CHECK(std::distance(fs::directory_iterator(ch), fs::directory_iterator{}) == 5);

  const fs::path out = kRoot / "e";
  fs::remove_all(out);
  REQUIRE(run("train " + p(cfg) + " --seed 2 --out " + p(out)) == 0);
  REQUIRE(run("eval " + p(out / "checkpoint") + " " + p(sc) + " --out " + p(out / "ev")) == 0);
  const auto rep = nlohmann::json::parse(slurp(out / "ev" / "report.json"));
  CHECK(rep.at("scenes") == 25);
  CHECK(fs::exists(out / "ev" / "heatmap_total.csv"));
  CHECK(fs::exists(out / "ev" / "heatmap_o7.csv"));

  REQUIRE(run("eval " + p(out / "checkpoint") + " " + p(sc) + " --finetune --out " + p(out / "ft")) == 0);
  CHECK(fs::exists(out / "ft" / "report.json"));

  const fs::path empty = kRoot / "empty";
  fs::create_directories(empty);
  CHECK(run("eval " + p(out / "checkpoint") + " " + p(empty)) != 0);
}
