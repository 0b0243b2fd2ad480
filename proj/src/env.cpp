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

#include "thzvr/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <string>

#include "thzvr/error.hpp"
#include "thzvr/seed.hpp"

namespace thzvr {

std::vector<Point3> hexagonal_layout(double room_side, double z, double radius,
                                     double phase_rad) {
  const double c = room_side / 2.0;
  std::vector<Point3> pts{{c, c, z}};
  for (int k = 0; k < 6; ++k) {
    const double a = phase_rad + k * std::numbers::pi / 3.0;
    pts.push_back({c + radius * std::cos(a), c + radius * std::sin(a), z});
  }
  return pts;
}

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig cfg;
  cfg.vap_positions = hexagonal_layout(cfg.room_side, cfg.ceiling, 2.0, 0.0);
  cfg.sbs_positions =
      hexagonal_layout(cfg.room_side, cfg.ceiling, 2.0, std::numbers::pi / 6.0);
  return cfg;
}

Point2 ScenarioConfig::cell_center(int cell) const {
  const double s = room_side / cells_per_side;
  return {(cell % cells_per_side + 0.5) * s, (cell / cells_per_side + 0.5) * s};
}

void ScenarioConfig::validate() const {
  if (!(room_side > 0.0)) throw Error("scenario.room_side must be positive");
  if (!(ceiling > 0.0)) throw Error("scenario.ceiling must be positive");
  if (vap_positions.size() < 3) throw Error("scenario.vap_positions needs at least 3 VAPs");
  if (sbs_positions.empty()) throw Error("scenario.sbs_positions needs at least 1 SBS");
  auto check_mount = [&](const std::vector<Point3>& pts, const char* name) {
    for (const Point3& p : pts) {
      if (p.z != ceiling)
        throw Error(std::string("scenario.") + name + ": every entry must sit at z = ceiling");
      if (p.x < 0.0 || p.x > room_side || p.y < 0.0 || p.y > room_side)
        throw Error(std::string("scenario.") + name + ": entry outside the room");
    }
  };
  check_mount(vap_positions, "vap_positions");
  check_mount(sbs_positions, "sbs_positions");
  if (num_users < 1) throw Error("scenario.num_users must be >= 1");
  if (!(height_min > 0.0) || height_max < height_min || !(height_max < ceiling))
    throw Error("scenario.height_min/height_max must satisfy 0 < min <= max < ceiling");
  if (!(body_radius >= 0.0)) throw Error("scenario.body_radius must be >= 0");
  if (cells_per_side < 1) throw Error("scenario.cells_per_side must be >= 1");
  if (slots_per_period < 1) throw Error("scenario.slots_per_period must be >= 1");
  if (num_periods < 1) throw Error("scenario.num_periods must be >= 1");
  radio.validate();
  optics.validate();
}

void MovementPattern::validate() const {
  if (cells < 1 || transition.size() != static_cast<std::size_t>(cells) * cells)
    throw Error("MovementPattern: transition must be cells x cells");
  for (int i = 0; i < cells; ++i) {
    double sum = 0.0;
    for (double p : row(i)) {
      if (!(p >= 0.0)) throw Error("MovementPattern: negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error("MovementPattern: row does not sum to 1");
  }
}

Task sample_task(std::uint64_t seed, double concentration, int locality_radius,
                 const RoomGrid& grid, int id) {
  if (!(concentration > 0.0)) throw Error("sample_task: concentration must be positive");
  if (locality_radius < 0) throw Error("sample_task: locality_radius yields an empty neighbor set");
  const int g = grid.cell_count();
  Task task;
  task.rng_seed = seed;
  task.id = id;
  task.pattern.cells = g;
  task.pattern.transition.assign(static_cast<std::size_t>(g) * g, 0.0);

  std::mt19937_64 rng(derive_seed({seed_tag::kTask, seed}));
  std::gamma_distribution<double> gamma(concentration, 1.0);
  for (int i = 0; i < g; ++i) {
    double* row = task.pattern.transition.data() + static_cast<std::size_t>(i) * g;
    double sum = 0.0;
    for (int j = 0; j < g; ++j) {
      if (grid.cell_distance(i, j) > locality_radius) continue;
      row[j] = gamma(rng);
      sum += row[j];
    }
    if (sum > 0.0) {
      for (int j = 0; j < g; ++j) row[j] /= sum;
    } else {
      row[i] = 1.0;
    }
  }
  return task;
}

EnvState reset(const Task& task, const ScenarioConfig& config) {
  const int g = config.cells_per_side * config.cells_per_side;
  std::mt19937_64 rng(derive_seed({seed_tag::kReset, task.rng_seed}));
  std::uniform_int_distribution<int> cell(0, g - 1);
  std::uniform_real_distribution<double> height(config.height_min, config.height_max);
  EnvState s;
  s.user_cells.resize(config.num_users);
  s.user_heights.resize(config.num_users);
  for (int j = 0; j < config.num_users; ++j) {
    s.user_cells[j] = cell(rng);
    s.user_heights[j] = height(rng);
  }
  s.served.assign(config.num_users, 0);
  s.slot_index = 0;
  return s;
}

std::vector<Point3> user_positions(const EnvState& state,
                                   const ScenarioConfig& config) {
  std::vector<Point3> out(state.user_cells.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const Point2 c = config.cell_center(state.user_cells[j]);
    out[j] = {c.x, c.y, state.user_heights[j]};
  }
  return out;
}

SlotEvaluation evaluate_slot(std::span<const Point3> users,
                             const JointAction& action,
                             const ScenarioConfig& config) {
  const std::array<Point3, 3> lit{config.vap_positions[action.vaps[0]],
                                  config.vap_positions[action.vaps[1]],
                                  config.vap_positions[action.vaps[2]]};
  SlotEvaluation ev;
  ev.localized.assign(users.size(), 0);
  ev.tx_ok.assign(users.size(), 0);
  for (std::size_t j = 0; j < users.size(); ++j) {
    ev.localized[j] = localized(j, users, lit, config.optics, config.body_radius);
    const int sbs = action.user_to_sbs[j];
    if (sbs < 0) continue;
    const auto blockers = bodies_except(users, static_cast<int>(j), config.body_radius);
    ev.tx_ok[j] = link_budget(config.sbs_positions[sbs], users[j], blockers,
                              config.sbs_positions, config.radio)
                      .tx_ok;
  }
  return ev;
}

namespace {

void check_action(const JointAction& a, const ScenarioConfig& config) {
  const int v = config.vap_count();
  for (int k = 0; k < 3; ++k)
    if (a.vaps[k] < 0 || a.vaps[k] >= v) throw Error("JointAction: VAP index out of range");
  if (a.vaps[0] == a.vaps[1] || a.vaps[0] == a.vaps[2] || a.vaps[1] == a.vaps[2])
    throw Error("JointAction: VAP set must contain 3 distinct VAPs");
  if (a.user_to_sbs.size() != static_cast<std::size_t>(config.num_users))
    throw Error("JointAction: association length must equal num_users");
  std::vector<char> used(config.sbs_count(), 0);
  for (int s : a.user_to_sbs) {
    if (s < 0) continue;
    if (s >= config.sbs_count()) throw Error("JointAction: SBS index out of range");
    if (used[s]) throw Error("JointAction: SBS associated with more than one user");
    used[s] = 1;
  }
}

void advance_cells(std::vector<int>& cells, const Task& task,
                   std::uint64_t realization_seed, int slot) {
  std::mt19937_64 rng(
      derive_seed({seed_tag::kMobility, task.rng_seed, realization_seed,
                   static_cast<std::uint64_t>(slot)}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int& c : cells) {
    const auto row = task.pattern.row(c);
    const double u = unit(rng);
    double acc = 0.0;
    int next = c;
    for (int k = 0; k < task.pattern.cells; ++k) {
      if (row[k] <= 0.0) continue;
      next = k;
      acc += row[k];
      if (u < acc) break;
    }
    c = next;
  }
}

}  // namespace

StepResult step(const EnvState& state, const JointAction& action,
                const Task& task, const ScenarioConfig& config,
                std::uint64_t realization_seed) {
  if (state.slot_index >= config.slots_per_period)
    throw Error("step: period already has T slots");
  check_action(action, config);

  const auto users = user_positions(state, config);
  SlotEvaluation ev = evaluate_slot(users, action, config);

  StepResult out;
  out.next = state;
  for (int j = 0; j < config.num_users; ++j) {
    if (ev.localized[j] && ev.tx_ok[j] && !state.served[j]) {
      out.next.served[j] = 1;
      out.newly_served.push_back(j);
    }
  }
  advance_cells(out.next.user_cells, task, realization_seed, state.slot_index);
  out.next.slot_index = state.slot_index + 1;
  out.localized = std::move(ev.localized);
  out.tx_ok = std::move(ev.tx_ok);
  return out;
}

std::vector<std::vector<int>> realize_cells(const Task& task,
                                            const ScenarioConfig& config,
                                            std::uint64_t realization_seed) {
  std::vector<int> cells = reset(task, config).user_cells;
  std::vector<std::vector<int>> out;
  for (int t = 0; t < config.slots_per_period; ++t) {
    out.push_back(cells);
    advance_cells(cells, task, realization_seed, t);
  }
  return out;
}

int period_reliability(const Trajectory& traj) {
  int r = 0;
  for (const StepRecord& s : traj.steps) r += static_cast<int>(s.newly_served.size());
  return r;
}

namespace {

std::size_t sat_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

// n! / (n-k)!
std::size_t falling(int n, int k) {
  std::size_t r = 1;
  for (int i = 0; i < k; ++i) r = sat_mul(r, static_cast<std::size_t>(n - i));
  return r;
}

}  // namespace

std::vector<std::array<int, 3>> vap_triples(int vaps) {
  std::vector<std::array<int, 3>> out;
  for (int a = 0; a < vaps; ++a)
    for (int b = a + 1; b < vaps; ++b)
      for (int c = b + 1; c < vaps; ++c) out.push_back({a, b, c});
  return out;
}

std::size_t joint_action_count(int vaps, int users, int sbs) {
  const std::size_t v = static_cast<std::size_t>(vaps);
  const std::size_t triples = vaps < 3 ? 0 : v * (v - 1) * (v - 2) / 6;
  return sat_mul(triples, falling(std::max(users, sbs), std::min(users, sbs)));
}

JointActionSpace::JointActionSpace(const ScenarioConfig& config)
    : users_(config.num_users),
      sbs_(config.sbs_count()),
      triples_(vap_triples(config.vap_count())) {
  matchings_ = falling(std::max(users_, sbs_), std::min(users_, sbs_));
  size_ = joint_action_count(config.vap_count(), users_, sbs_);
}

JointAction JointActionSpace::decode(std::size_t index) const {
  if (index >= size_) throw Error("JointActionSpace: index out of range");
  JointAction a;
  a.vaps = triples_[index / matchings_];
  a.user_to_sbs.assign(users_, -1);
  std::size_t m = index % matchings_;

  // The larger side picks; positions along the smaller side are filled in
  // order with the lowest-numbered remaining candidate first.
  const bool sbs_pick_users = users_ >= sbs_;
  const int n = sbs_pick_users ? users_ : sbs_;
  const int k = sbs_pick_users ? sbs_ : users_;
  std::vector<int> avail(n);
  for (int i = 0; i < n; ++i) avail[i] = i;
  for (int p = 0; p < k; ++p) {
    const std::size_t block = falling(n - p - 1, k - p - 1);
    const std::size_t choice = m / block;
    m %= block;
    const int picked = avail[choice];
    avail.erase(avail.begin() + static_cast<std::ptrdiff_t>(choice));
    if (sbs_pick_users)
      a.user_to_sbs[picked] = p;
    else
      a.user_to_sbs[p] = picked;
  }
  return a;
}

std::vector<JointAction> enumerate_joint_actions(const ScenarioConfig& config,
                                                 std::size_t cap) {
  const JointActionSpace space(config);
  if (space.size() > cap)
    throw Error("joint action space has " + std::to_string(space.size()) +
                " entries (cap " + std::to_string(cap) +
                "); use the dmpg algorithm for this many users");
  std::vector<JointAction> out;
  out.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) out.push_back(space.decode(i));
  return out;
}

namespace {

struct OracleSearch {
  const Task& task;
  const ScenarioConfig& config;
  const JointActionSpace& space;
  std::uint64_t realization_seed;
  std::vector<std::size_t> prefix;
  OracleResult best;
  bool have_best = false;

  void run(const EnvState& state, int reward_so_far) {
    const int t = state.slot_index;
    if (t == config.slots_per_period) {
      if (!have_best || reward_so_far > best.best_reward) {
        have_best = true;
        best.best_reward = reward_so_far;
        best.best_action_indices = prefix;
      }
      return;
    }
    int unserved = 0;
    for (auto w : state.served) unserved += !w;
    const int bound = std::min(unserved, config.sbs_count() * (config.slots_per_period - t));
    if (have_best && reward_so_far + bound <= best.best_reward) return;
    for (std::size_t a = 0; a < space.size(); ++a) {
      const StepResult r = step(state, space.decode(a), task, config, realization_seed);
      prefix.push_back(a);
      run(r.next, reward_so_far + static_cast<int>(r.newly_served.size()));
      prefix.pop_back();
    }
  }
};

}  // namespace

OracleResult brute_force_oracle(const Task& task, const ScenarioConfig& config,
                                std::uint64_t realization_seed, double guard) {
  const JointActionSpace space(config);
  const double sequences =
      std::pow(static_cast<double>(space.size()), config.slots_per_period);
  if (sequences > guard)
    throw Error("brute_force_oracle: " + std::to_string(sequences) +
                " action sequences exceed the guard");
  OracleSearch search{task, config, space, realization_seed, {}, {}, false};
  search.run(reset(task, config), 0);
  for (std::size_t a : search.best.best_action_indices)
    search.best.best_actions.push_back(space.decode(a));
  return search.best;
}

std::vector<std::string> audit_trajectory(const Trajectory& traj,
                                          const ScenarioConfig& config,
                                          bool association_once) {
  std::vector<std::string> bad;
  auto fail = [&](int t, const std::string& msg) {
    bad.push_back("task " + std::to_string(traj.task_id) + " slot " +
                  std::to_string(t) + ": " + msg);
  };
  const int u = config.num_users;
  if (traj.steps.size() != static_cast<std::size_t>(config.slots_per_period))
    fail(-1, "trajectory does not span T slots");

  const int r = period_reliability(traj);
  if (r != traj.total_reward) fail(-1, "total_reward differs from sum of |W_t|");
  if (r > std::min(u, config.sbs_count() * config.slots_per_period))
    fail(-1, "reliability exceeds min(U, B*T)");
  int popcount = 0;
  for (auto w : traj.final_state.served) popcount += w != 0;
  if (popcount != r) fail(-1, "sum of |W_t| differs from final served popcount");

  std::vector<int> associated(u, 0);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StepRecord& s = traj.steps[t];
    const int ti = static_cast<int>(t);
    if (s.state.slot_index != ti) fail(ti, "slot index out of sequence");
    const EnvState& next = t + 1 < traj.steps.size() ? traj.steps[t + 1].state
                                                      : traj.final_state;
    std::vector<int> expect_new;
    for (int j = 0; j < u; ++j) {
      if (s.state.served[j] && !next.served[j]) fail(ti, "served flag flipped back");
      if (!s.state.served[j] && s.localized[j] && s.tx_ok[j]) expect_new.push_back(j);
    }
    if (expect_new != s.newly_served) fail(ti, "newly served set inconsistent with p*h");
    for (int j = 0; j < u; ++j) {
      const bool was = s.state.served[j];
      const bool now = next.served[j];
      const bool is_new =
          std::find(s.newly_served.begin(), s.newly_served.end(), j) != s.newly_served.end();
      if (now != (was || is_new)) fail(ti, "served update disagrees with newly served");
    }

    std::vector<char> used(config.sbs_count(), 0);
    for (int j = 0; j < u; ++j) {
      const int sbs = s.action.user_to_sbs[j];
      if (sbs < 0) continue;
      if (sbs >= config.sbs_count() || used[sbs]) fail(ti, "association not injective");
      else used[sbs] = 1;
      if (association_once) {
        if (s.state.served[j]) fail(ti, "association to an already served user");
        if (++associated[j] > 1) fail(ti, "user associated twice in one period");
      }
    }

    const SlotEvaluation ev = evaluate_slot(user_positions(s.state, config), s.action, config);
    if (ev.localized != s.localized || ev.tx_ok != s.tx_ok)
      fail(ti, "logged p/h not reproducible from logged geometry");

    for (double l : s.lambda)
      if (!(l >= 0.0) || !std::isfinite(l)) fail(ti, "dual variable negative or non-finite");
  }
  return bad;
}

void write_trajectory_csv(std::ostream& out, std::span<const Trajectory> trajs,
                          const ScenarioConfig& config, bool with_lambda) {
  out << "period,slot,user,cell_x,cell_y,height,localized,assigned_sbs,tx_ok,newly_served";
  if (with_lambda) out << ",lambda";
  out << '\n';
  char buf[256];
  for (std::size_t p = 0; p < trajs.size(); ++p) {
    for (const StepRecord& s : trajs[p].steps) {
      for (int j = 0; j < config.num_users; ++j) {
        const int cell = s.state.user_cells[j];
        const bool is_new = std::find(s.newly_served.begin(), s.newly_served.end(), j) !=
                            s.newly_served.end();
        std::snprintf(buf, sizeof buf, "%zu,%d,%d,%d,%d,%.6f,%d,%d,%d,%d", p,
                      s.state.slot_index, j, cell % config.cells_per_side,
                      cell / config.cells_per_side, s.state.user_heights[j],
                      s.localized[j], s.action.user_to_sbs[j], s.tx_ok[j], is_new ? 1 : 0);
        out << buf;
        if (with_lambda) {
          std::snprintf(buf, sizeof buf, ",%.9g", s.lambda.empty() ? 0.0 : s.lambda[j]);
          out << buf;
        }
        out << '\n';
      }
    }
  }
}

}  // namespace thzvr
