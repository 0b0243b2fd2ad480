// Copyright 2026 The THzVR Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "test_support.hpp"
#include "thzvr/error.hpp"
#include "thzvr/harness.hpp"

using namespace thzvr;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("thzvr_test_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Shell {
  int code = -1;
  std::string out;
};

Shell cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "thzvr_test_harness_cli.log";
  const std::string cmd = std::string(THZVR_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Shell r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  return r;
}

std::string error_of(const std::string& text) {
  try {
    parse_spec(text, "t.cfg");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentSpec quick_toy(const fs::path& out) {
  ExperimentSpec s = testing_support::toy_spec();
  s.learning.iterations = 5;
  s.learning.inner_trajectories = 6;
  s.learning.outer_trajectories = 3;
  s.eval_tasks = 2;
  s.eval_periods = 3;
  s.output_dir = out.string();
  return s;
}

}  // namespace

TEST_CASE("empty config gives the published defaults") {
  const ExperimentSpec s = parse_spec("");
  CHECK(s.scenario.radio.carrier_freq_hz == 1.0e12);
  CHECK(s.scenario.radio.tx_power_w == 1.0);
  CHECK(s.scenario.radio.image_bits == 20.0e6);
  CHECK(s.scenario.radio.noise_density_dbm_hz == -174.0);
  CHECK(s.scenario.slots_per_period == 3);
  CHECK(s.learning.inner_trajectories == 50);
  CHECK(s.learning.outer_trajectories == 10);
  CHECK(s.learning.inner_lr == 0.1);
  CHECK(s.learning.meta_lr == 0.01);
  CHECK(s.scenario.room_side == 6.0);
  CHECK(s.scenario.ceiling == 3.0);
  CHECK(s.scenario.vap_count() == 7);
  CHECK(s.scenario.sbs_count() == 7);
  CHECK(s.scenario.num_users == 20);
  for (const auto& p : s.scenario.vap_positions) CHECK(p.z == 3.0);
  for (const auto& p : s.scenario.sbs_positions) CHECK(p.z == 3.0);
  CHECK(s.algorithm == Algorithm::kDmpg);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("strict parsing reports key and line") {
  const std::string typo = error_of("[learning]\ninner_lr = 0.2\ninner_rl = 0.3\n");
  CHECK(typo.find("inner_rl") != std::string::npos);
  CHECK(typo.find("t.cfg:3") != std::string::npos);
  CHECK(error_of("[nowhere]\n").find("nowhere") != std::string::npos);
  CHECK(error_of("x = 1\n").find("outside") != std::string::npos);
  CHECK(error_of("[radio]\ntx_power_w = 1\ntx_power_w = 2\n").find("duplicate") !=
        std::string::npos);
  CHECK(error_of("[radio]\ntx_power_w = lots\n").find("t.cfg:2") != std::string::npos);
  CHECK(error_of("[learning]\nmeta_order = third\n").find("meta_order") != std::string::npos);
  CHECK(error_of("[scenario]\nvap_positions = 1 2\n").find("vap_positions") != std::string::npos);
  CHECK_FALSE(error_of("# comment only\n\n[radio]  # trailing\ntx_power_w = 2 # two watts\n")
                  .size());
  CHECK(parse_spec("[radio]\ntx_power_w = 2 # two\n").scenario.radio.tx_power_w == 2.0);
  CHECK_THROWS_AS(load_spec("/definitely/not/here.cfg"), Error);
  // The joint action space of the default scene exceeds the cap.
  CHECK_THROWS_AS(parse_spec("[experiment]\nalgorithm = mpg\n").validate(), Error);
}

TEST_CASE("serialization round trip and hashing") {
  const ExperimentSpec toy = testing_support::toy_spec();
  const std::string text = serialize_spec(toy);
  const ExperimentSpec again = parse_spec(text);
  CHECK(serialize_spec(again) == text);
  CHECK(config_hash(again) == config_hash(toy));
  CHECK(again.scenario.vap_positions.size() == 4);
  CHECK(again.learning.hidden == std::vector<int>{16});

  const std::string defaults = serialize_spec(parse_spec(""));
  CHECK(serialize_spec(parse_spec(defaults)) == defaults);

  ExperimentSpec other = toy;
  other.learning.inner_lr = 0.2;
  CHECK(config_hash(other) != config_hash(toy));
  ExperimentSpec moved = toy;
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(toy));
}

TEST_CASE("environment overrides win over file values") {
  const ExperimentSpec s = parse_spec("[learning]\ninner_lr = 0.3\n", "t.cfg",
                                      {{"THZVR_LEARNING_INNER_LR", "0.5"},
                                       {"THZVR_SCENARIO_NUM_USERS", "4"}});
  CHECK(s.learning.inner_lr == 0.5);
  CHECK(s.scenario.num_users == 4);
  CHECK_THROWS_AS(parse_spec("", "t", {{"THZVR_LEARNING_NOPE", "1"}}), Error);

  ::setenv("THZVR_ASSOCIATION_STEP", "0.25", 1);
  const Overrides env = environment_overrides();
  ::unsetenv("THZVR_ASSOCIATION_STEP");
  bool found = false;
  for (const auto& [k, v] : env)
    if (k == "THZVR_ASSOCIATION_STEP" && v == "0.25") found = true;
  CHECK(found);
  CHECK(parse_spec("", "t", env).association.step == 0.25);
}

TEST_CASE("task streams") {
  const ExperimentSpec s = parse_spec("[tasks]\ncount = 4\n");
  const auto a = make_task_stream(s);
  const auto b = make_task_stream(s);
  REQUIRE(a.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(a[k].id == k);
    CHECK(a[k].rng_seed == b[k].rng_seed);
    CHECK(a[k].pattern.transition == b[k].pattern.transition);
  }
  const auto e = make_eval_tasks(s);
  REQUIRE(e.size() == 5);
  for (const auto& t : e) {
    CHECK(t.id >= 4);
    for (const auto& tr : a) CHECK(t.rng_seed != tr.rng_seed);
  }
}

TEST_CASE("run writes artifacts deterministically") {
  const fs::path d1 = scratch("run1"), d2 = scratch("run2");
  ExperimentSpec s = quick_toy(d1);
  const RunMetrics m = run(s);
  CHECK(m.series.size() == 5);
  s.output_dir = d2.string();
  run(s);
  for (const char* f : {"metrics.csv", "timing.csv", "summary.json", "policy.ckpt",
                        "trajectories.csv", "config.cfg"})
    CHECK(fs::exists(d1 / f));
  CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
  CHECK(slurp(d1 / "policy.ckpt") == slurp(d2 / "policy.ckpt"));
  CHECK(slurp(d1 / "trajectories.csv") == slurp(d2 / "trajectories.csv"));

  const auto metrics = read_csv(d1 / "metrics.csv");
  REQUIRE(metrics.size() == 6);
  CHECK(metrics[0] == std::vector<std::string>{"iteration", "mean_reward", "std_reward"});
  const auto timing = read_csv(d1 / "timing.csv");
  REQUIRE(timing.size() == 6);
  double last = 0.0;
  for (std::size_t i = 1; i < timing.size(); ++i) {
    const double t = std::stod(timing[i][1]);
    CHECK(t >= last);
    last = t;
  }

  // Reliability recomputed from the trajectory log.
  const auto j = nlohmann::json::parse(slurp(d1 / "summary.json"));
  CHECK(j["iterations"] == 5);
  CHECK(j["algorithm"] == "mpg");
  const auto rows = read_csv(d1 / "trajectories.csv");
  REQUIRE(rows.size() > 1);
  const auto& head = rows[0];
  const auto col = std::find(head.begin(), head.end(), "newly_served") - head.begin();
  REQUIRE(col < static_cast<long>(head.size()));
  double served = 0.0;
  for (std::size_t r = 1; r < rows.size(); ++r) served += std::stod(rows[r][col]);
  const int u = s.scenario.num_users, t = s.scenario.slots_per_period;
  const double periods = static_cast<double>(rows.size() - 1) / (u * t);
  CHECK(periods == s.eval_tasks * s.eval_periods);
  CHECK(j["avg_reliability_per_user"].get<double>() ==
        doctest::Approx(served / (u * periods)).epsilon(1e-12));
  CHECK(m.avg_reliability == doctest::Approx(served / (u * periods)).epsilon(1e-12));

  // The stored config reproduces the run settings.
  CHECK(config_hash(load_spec((d1 / "config.cfg").string())) == config_hash(quick_toy(d1)));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("run dispatches every algorithm") {
  for (const char* algo : {"mpg", "dmpg", "pg"}) {
    const fs::path d = scratch(std::string("algo_") + algo);
    ExperimentSpec s = quick_toy(d);
    s.algorithm = parse_algorithm(algo);
    int seen = 0;
    RunOptions o;
    o.observer = [&](const Trajectory& tr) {
      CHECK(audit_trajectory(tr, s.scenario, s.algorithm == Algorithm::kDmpg).empty());
      ++seen;
    };
    const RunMetrics m = run(s, o);
    CHECK(m.series.size() == 5);
    CHECK(seen > 0);
    CHECK(m.avg_reliability >= 0.0);
    CHECK(m.avg_reliability <= 1.0);
    const auto j = nlohmann::json::parse(slurp(d / "summary.json"));
    CHECK(j["algorithm"] == algorithm_name(s.algorithm));
    fs::remove_all(d);
  }
  CHECK(parse_algorithm("baseline_pg") == Algorithm::kBaselinePg);
  CHECK_THROWS_AS(parse_algorithm("trpo"), Error);
}

TEST_CASE("cli usage, oracle and adapt") {
  CHECK(cli("--bogus").code == 2);
  CHECK(cli("train --algo nope").code == 2);
  CHECK(cli("adapt").code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("train --config /missing.cfg").code == 1);

  const std::string toy = testing_support::source_path("configs/toy.cfg");
  const Shell o = cli("oracle --config " + toy);
  CHECK(o.code == 0);
  CHECK(o.out.rfind("best_reward 2\n", 0) == 0);

  const Shell pc = cli("--print-config");
  CHECK(pc.code == 0);
  CHECK(pc.out == serialize_spec(parse_spec("")));
  const Shell tp = cli("train --print-config --config " + toy + " --seed 3");
  CHECK(tp.code == 0);
  CHECK(parse_spec(tp.out).master_seed == 3);

  const fs::path d = scratch("cli");
  const Shell tr = cli("train --config " + toy + " --out " + (d / "run").string());
  REQUIRE(tr.code == 0);
  const fs::path ck = d / "run" / "policy.ckpt";
  REQUIRE(fs::exists(ck));
  const Shell a0 = cli("adapt --config " + toy + " --checkpoint " + ck.string() +
                       " --task-seed 9 --steps 0 --out " + (d / "a0").string());
  REQUIRE(a0.code == 0);
  CHECK(slurp(d / "a0" / "adapted.ckpt") == slurp(ck));
  const Shell a3 = cli("adapt --config " + toy + " --checkpoint " + ck.string() +
                       " --task-seed 9 --steps 3 --out " + (d / "a3").string());
  REQUIRE(a3.code == 0);
  CHECK(read_csv(d / "a3" / "adapt_curve.csv").size() == 4);

  const Shell sim = cli("simulate --config " + toy + " --periods 2");
  CHECK(sim.code == 0);
  CHECK(sim.out.rfind("period,slot,user", 0) == 0);
  fs::remove_all(d);
}

TEST_CASE("cli eval on a full-size D-MPG checkpoint") {
  const fs::path d = scratch("eval20");
  const fs::path cfg = d / "u20.cfg";
  {
    std::ofstream f(cfg);
    f << "[learning]\niterations = 0\n[experiment]\nalgorithm = dmpg\neval_tasks = 1\n"
         "eval_periods = 1\n[tasks]\ncount = 2\n";
  }
  const Shell tr = cli("train --config " + cfg.string() + " --out " + (d / "run").string());
  REQUIRE(tr.code == 0);
  const Shell ev = cli("eval --config " + cfg.string() + " --checkpoint " +
                       (d / "run" / "policy.ckpt").string() + " --periods 2 --out " +
                       (d / "ev").string());
  REQUIRE(ev.code == 0);
  const auto j = nlohmann::json::parse(slurp(d / "ev" / "eval.json"));
  const double r = j["avg_reliability_per_user"].get<double>();
  CHECK(r >= 0.0);
  CHECK(r <= 1.0);
  CHECK(j["periods"] == 2);
  CHECK(j["eval_tasks"] == 1);

  // A head that does not fit the scenario is rejected.
  const Shell bad = cli("eval --config " + testing_support::source_path("configs/toy.cfg") +
                        " --checkpoint " + (d / "run" / "policy.ckpt").string());
  CHECK(bad.code == 1);
  fs::remove_all(d);
}
