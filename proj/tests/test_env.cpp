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

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "thzvr/env.hpp"
#include "thzvr/error.hpp"
#include "thzvr/meta_rl.hpp"

using namespace thzvr;

namespace {

ScenarioConfig one_user_scene() {
  ScenarioConfig c = ScenarioConfig::defaults();
  c.num_users = 1;
  c.slots_per_period = 2;
  return c;
}

// Random legal joint action.
JointAction random_action(const ScenarioConfig& c, std::mt19937_64& rng) {
  const JointActionSpace space(c);
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  return space.decode(pick(rng));
}

}  // namespace

TEST_CASE("default scenario matches the documented layout") {
  const ScenarioConfig c = ScenarioConfig::defaults();
  CHECK(c.room_side == 6.0);
  CHECK(c.ceiling == 3.0);
  CHECK(c.vap_count() == 7);
  CHECK(c.sbs_count() == 7);
  CHECK(c.slots_per_period == 3);
  CHECK(c.num_users == 20);
  for (const auto& p : c.vap_positions) CHECK(p.z == 3.0);
  for (const auto& p : c.sbs_positions) CHECK(p.z == 3.0);
  CHECK_NOTHROW(c.validate());
  ScenarioConfig bad = c;
  bad.vap_positions.resize(2);
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.sbs_positions[0].z = 2.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.slots_per_period = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("sample_task examples") {
  const RoomGrid grid(6.0, 6);
  const Task still = sample_task(3, 1.0, 0, grid);
  for (int i = 0; i < grid.cell_count(); ++i)
    for (int j = 0; j < grid.cell_count(); ++j)
      CHECK(still.pattern.row(i)[j] == (i == j ? 1.0 : 0.0));

  const Task t = sample_task(42, 0.7, 1, grid);
  CHECK_NOTHROW(t.pattern.validate());
  for (int i = 0; i < grid.cell_count(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < grid.cell_count(); ++j) {
      const double p = t.pattern.row(i)[j];
      CHECK(p >= 0.0);
      if (grid.cell_distance(i, j) > 1) CHECK(p == 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
  const Task again = sample_task(42, 0.7, 1, grid);
  CHECK(again.pattern.transition == t.pattern.transition);
  CHECK(sample_task(43, 0.7, 1, grid).pattern.transition != t.pattern.transition);

  CHECK_THROWS_AS(sample_task(1, 0.0, 1, grid), Error);
  CHECK_THROWS_AS(sample_task(1, 1.0, -1, grid), Error);
}

TEST_CASE("reset examples") {
  const ScenarioConfig c = ScenarioConfig::defaults();
  const Task task = sample_task(9, 1.0, 1, c.grid(), 0);
  const EnvState s = reset(task, c);
  CHECK(s.slot_index == 0);
  CHECK(std::all_of(s.served.begin(), s.served.end(), [](auto w) { return w == 0; }));
  CHECK(s.user_cells.size() == 20);
  for (double h : s.user_heights) {
    CHECK(h >= c.height_min);
    CHECK(h <= c.height_max);
  }
  for (int cell : s.user_cells) {
    CHECK(cell >= 0);
    CHECK(cell < 36);
  }
  CHECK(reset(task, c) == s);
}

TEST_CASE("step service examples") {
  ScenarioConfig c = one_user_scene();
  // User right under SBS 0, which sits at the room center.
  Task task = sample_task(1, 1.0, 0, c.grid(), 0);
  EnvState s = reset(task, c);
  s.user_cells[0] = c.grid().index(3, 3);  // center (3.5, 3.5)
  JointAction a{{0, 1, 2}, {0}};
  const StepResult r = step(s, a, task, c);
  REQUIRE(r.localized[0] == 1);
  REQUIRE(r.tx_ok[0] == 1);
  CHECK(r.newly_served == std::vector<int>{0});
  CHECK(r.next.served[0] == 1);
  CHECK(r.next.slot_index == 1);

  // Already served: not newly served again.
  const StepResult r2 = step(r.next, a, task, c);
  CHECK(r2.newly_served.empty());
  CHECK(r2.next.served[0] == 1);

  // Stepping past T throws.
  CHECK_THROWS_AS(step(r2.next, a, task, c), Error);

  // Not localized: VAP FOV too narrow, perfect THz link anyway.
  ScenarioConfig narrow = c;
  narrow.optics.fov_semi_angle_deg = 1.0;
  const StepResult r3 = step(s, JointAction{{1, 2, 3}, {0}}, task, narrow);
  CHECK(r3.localized[0] == 0);
  CHECK(r3.tx_ok[0] == 1);
  CHECK(r3.newly_served.empty());

  // Unassigned users have h = 0.
  const StepResult r4 = step(s, JointAction{{0, 1, 2}, {-1}}, task, c);
  CHECK(r4.tx_ok[0] == 0);
  CHECK(r4.newly_served.empty());
}

TEST_CASE("step rejects malformed actions") {
  ScenarioConfig c = ScenarioConfig::defaults();
  c.num_users = 2;
  const Task task = sample_task(4, 1.0, 1, c.grid(), 0);
  const EnvState s = reset(task, c);
  CHECK_THROWS_AS(step(s, JointAction{{0, 0, 1}, {-1, -1}}, task, c), Error);
  CHECK_THROWS_AS(step(s, JointAction{{0, 1, 9}, {-1, -1}}, task, c), Error);
  CHECK_THROWS_AS(step(s, JointAction{{0, 1, 2}, {3, 3}}, task, c), Error);
  CHECK_THROWS_AS(step(s, JointAction{{0, 1, 2}, {0}}, task, c), Error);
  CHECK_THROWS_AS(step(s, JointAction{{0, 1, 2}, {0, 7}}, task, c), Error);
}

TEST_CASE("mobility is action independent and follows the realization") {
  ScenarioConfig c = ScenarioConfig::defaults();
  c.num_users = 6;
  const Task task = sample_task(21, 0.5, 1, c.grid(), 0);
  std::mt19937_64 rng(3);
  for (std::uint64_t real = 0; real < 5; ++real) {
    const auto cells = realize_cells(task, c, real);
    EnvState s = reset(task, c);
    for (int t = 0; t < c.slots_per_period; ++t) {
      CHECK(s.user_cells == cells[t]);
      s = step(s, random_action(c, rng), task, c, real).next;
    }
  }
  // Moves stay within the locality radius.
  const auto cells = realize_cells(task, c, 99);
  for (std::size_t t = 1; t < cells.size(); ++t)
    for (std::size_t j = 0; j < cells[t].size(); ++j)
      CHECK(c.grid().cell_distance(cells[t - 1][j], cells[t][j]) <= 1);
  // Identity mobility freezes users.
  const Task still = sample_task(21, 0.5, 0, c.grid(), 0);
  const auto frozen = realize_cells(still, c, 5);
  for (const auto& row : frozen) CHECK(row == frozen[0]);
}

TEST_CASE("joint action counts and enumeration") {
  CHECK(joint_action_count(3, 1, 1) == 1);
  CHECK(joint_action_count(7, 8, 7) == 1411200);
  CHECK(joint_action_count(4, 2, 2) == 8);
  CHECK(joint_action_count(7, 20, 7) > kJointActionCap);

  ScenarioConfig c = testing_support::toy_spec().scenario;
  const auto all = enumerate_joint_actions(c);
  REQUIRE(all.size() == 8);
  std::set<std::pair<std::array<int, 3>, std::vector<int>>> uniq;
  for (const auto& a : all) {
    uniq.insert({a.vaps, a.user_to_sbs});
    // Full matching: both users associated, distinct SBSs.
    CHECK(a.user_to_sbs[0] >= 0);
    CHECK(a.user_to_sbs[1] >= 0);
    CHECK(a.user_to_sbs[0] != a.user_to_sbs[1]);
  }
  CHECK(uniq.size() == 8);
  CHECK(all[0].vaps == std::array<int, 3>{0, 1, 2});
  CHECK(all[0].user_to_sbs == std::vector<int>{0, 1});
  CHECK(all[1].user_to_sbs == std::vector<int>{1, 0});
  CHECK(all[7].vaps == std::array<int, 3>{1, 2, 3});

  // U < B: every user associated, SBS subsets vary.
  ScenarioConfig few = ScenarioConfig::defaults();
  few.num_users = 2;
  const JointActionSpace sp(few);
  CHECK(sp.matchings() == 42);
  std::set<std::vector<int>> maps;
  for (std::size_t m = 0; m < sp.matchings(); ++m) maps.insert(sp.decode(m).user_to_sbs);
  CHECK(maps.size() == 42);

  // U > B: exactly B users associated.
  ScenarioConfig many = ScenarioConfig::defaults();
  many.num_users = 4;
  many.sbs_positions.resize(2);
  const JointActionSpace sm(many);
  CHECK(sm.matchings() == 12);
  for (std::size_t m = 0; m < sm.matchings(); ++m) {
    const auto a = sm.decode(m);
    CHECK(std::count_if(a.user_to_sbs.begin(), a.user_to_sbs.end(),
                        [](int s) { return s >= 0; }) == 2);
  }
  CHECK_THROWS_AS(sm.decode(sm.size()), Error);

  ScenarioConfig big = ScenarioConfig::defaults();
  CHECK_THROWS_AS(enumerate_joint_actions(big), Error);
}

TEST_CASE("brute_force_oracle examples") {
  const auto spec = testing_support::toy_spec();
  const auto stream = make_task_stream(spec);
  const OracleResult r = brute_force_oracle(stream.front(), spec.scenario, 0);
  // Regression fixture for the frozen toy task.
  CHECK(r.best_reward == 2);
  REQUIRE(r.best_actions.size() == 2);
  // Replaying the sequence reproduces the value.
  EnvState s = reset(stream.front(), spec.scenario);
  int total = 0;
  for (const auto& a : r.best_actions) {
    const auto st = step(s, a, stream.front(), spec.scenario, 0);
    total += static_cast<int>(st.newly_served.size());
    s = st.next;
  }
  CHECK(total == 2);

  // T = 1: a corner user has a feasible serving action.
  ScenarioConfig one_slot = spec.scenario;
  one_slot.slots_per_period = 1;
  CHECK(brute_force_oracle(stream.front(), one_slot, 0).best_reward >= 1);

  // Counting bound on random small scenes.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScenarioConfig sc = spec.scenario;
    Task t = sample_task(seed, 1.0, 1, sc.grid(), 0);
    const auto o = brute_force_oracle(t, sc, seed);
    CHECK(o.best_reward <= std::min(sc.num_users, sc.sbs_count() * sc.slots_per_period));
  }

  ScenarioConfig huge = ScenarioConfig::defaults();
  huge.num_users = 6;
  CHECK_THROWS_AS(brute_force_oracle(sample_task(1, 1, 1, huge.grid()), huge, 0), Error);
}

TEST_CASE("random rollouts satisfy the structural invariants") {
  ScenarioConfig c = ScenarioConfig::defaults();
  c.num_users = 5;
  const JointActionModel model(c);
  PolicyParams uniform = init_params(make_layer_shapes(4 * c.num_users, {8},
                                                       static_cast<int>(model.action_count())),
                                     1);
  uniform.flat.setZero();
  int served_any = 0;
  for (int k = 0; k < 50; ++k) {
    const Task task = sample_task(100 + k, 1.0, 1, c.grid(), k);
    const Trajectory tr = model.rollout(uniform, task, k);
    const auto bad = audit_trajectory(tr, c, false);
    CHECK(bad.empty());
    CHECK(period_reliability(tr) == tr.total_reward);
    int pop = 0;
    for (auto w : tr.final_state.served) pop += w;
    CHECK(pop == tr.total_reward);
    CHECK(tr.total_reward <= std::min(c.num_users, c.sbs_count() * c.slots_per_period));
    served_any += tr.total_reward;
  }
  CHECK(served_any > 0);
}

TEST_CASE("period_reliability examples") {
  Trajectory empty;
  CHECK(period_reliability(empty) == 0);
  // All users served in the first slot with U <= B.
  ScenarioConfig c = ScenarioConfig::defaults();
  c.num_users = 1;
  c.slots_per_period = 1;
  Task task = sample_task(1, 1, 0, c.grid(), 0);
  EnvState s = reset(task, c);
  s.user_cells[0] = c.grid().index(3, 3);
  Trajectory tr;
  const StepResult r = step(s, JointAction{{0, 1, 2}, {0}}, task, c);
  tr.steps.push_back({s, 0, JointAction{{0, 1, 2}, {0}}, r.localized, r.tx_ok, r.newly_served, {}});
  tr.final_state = r.next;
  tr.total_reward = 1;
  CHECK(period_reliability(tr) == 1);
  CHECK(audit_trajectory(tr, c, true).empty());

  // Tampering is caught.
  Trajectory bad = tr;
  bad.total_reward = 2;
  CHECK_FALSE(audit_trajectory(bad, c, true).empty());
  bad = tr;
  bad.steps[0].tx_ok[0] = 0;
  CHECK_FALSE(audit_trajectory(bad, c, true).empty());
  bad = tr;
  bad.steps[0].lambda = {-0.5};
  CHECK_FALSE(audit_trajectory(bad, c, true).empty());
}

TEST_CASE("trajectory csv layout") {
  const auto spec = testing_support::toy_spec();
  const JointActionModel model(spec.scenario);
  PolicyParams p = initial_policy(model, spec.learning, 1);
  const Trajectory tr = model.rollout(p, make_task_stream(spec).front(), 3);
  std::ostringstream out;
  write_trajectory_csv(out, std::vector<Trajectory>{tr, tr}, spec.scenario, false);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "period,slot,user,cell_x,cell_y,height,localized,assigned_sbs,tx_ok,newly_served");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * spec.scenario.slots_per_period * spec.scenario.num_users);
  std::ostringstream with;
  write_trajectory_csv(with, std::vector<Trajectory>{tr}, spec.scenario, true);
  CHECK(with.str().substr(0, with.str().find('\n')).ends_with(",lambda"));
}
