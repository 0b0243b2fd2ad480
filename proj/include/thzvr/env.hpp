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

#ifndef THZVR_ENV_HPP_
#define THZVR_ENV_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "thzvr/channel.hpp"
#include "thzvr/geometry.hpp"

namespace thzvr {

// Room, radio and optics constants for one scenario. validate() enforces
// V >= 3, U >= 1, T >= 1 and all transmitters mounted at the ceiling.
struct ScenarioConfig {
  double room_side = 6.0;
  double ceiling = 3.0;
  std::vector<Point3> vap_positions;
  std::vector<Point3> sbs_positions;
  int num_users = 20;
  double height_min = 1.4;
  double height_max = 1.9;
  double body_radius = 0.2;
  int cells_per_side = 6;
  int slots_per_period = 3;
  int num_periods = 20;
  RadioParams radio;
  OpticsParams optics;

  // 6 m room, 7 VAPs and 7 SBSs on hexagonal layouts at Z = 3 m.
  static ScenarioConfig defaults();

  int vap_count() const { return static_cast<int>(vap_positions.size()); }
  int sbs_count() const { return static_cast<int>(sbs_positions.size()); }
  RoomGrid grid() const { return RoomGrid(room_side, cells_per_side); }
  Point2 cell_center(int cell) const;
  void validate() const;
};

// Seven points: the room center plus a hexagon of the given radius.
std::vector<Point3> hexagonal_layout(double room_side, double z, double radius,
                                     double phase_rad);

// Row-stochastic G x G cell transition matrix, shared by all users.
struct MovementPattern {
  int cells = 0;
  std::vector<double> transition;  // row-major

  std::span<const double> row(int cell) const {
    return {transition.data() + static_cast<std::size_t>(cell) * cells,
            static_cast<std::size_t>(cells)};
  }
  void validate() const;
};

// One period's meta-learning task. rng_seed fixes the initial placement
// and heights; mobility draws additionally depend on a realization seed.
struct Task {
  MovementPattern pattern;
  std::uint64_t rng_seed = 0;
  int id = 0;
};

struct EnvState {
  std::vector<int> user_cells;
  std::vector<double> user_heights;
  std::vector<std::uint8_t> served;
  int slot_index = 0;

  bool operator==(const EnvState&) const = default;
};

// Three lit VAPs plus a partial injective user -> SBS map (-1 = none).
struct JointAction {
  std::array<int, 3> vaps{};
  std::vector<int> user_to_sbs;

  bool operator==(const JointAction&) const = default;
};

struct StepResult {
  EnvState next;
  std::vector<int> newly_served;
  std::vector<std::uint8_t> localized;  // p_j
  std::vector<std::uint8_t> tx_ok;      // h_j
};

struct StepRecord {
  EnvState state;  // before the action
  std::size_t action_index = 0;
  JointAction action;
  std::vector<std::uint8_t> localized;
  std::vector<std::uint8_t> tx_ok;
  std::vector<int> newly_served;
  std::vector<double> lambda;  // dual snapshot; empty for joint-action rollouts
};

struct Trajectory {
  std::vector<StepRecord> steps;
  EnvState final_state;
  int total_reward = 0;
  int task_id = 0;
  std::uint64_t realization_seed = 0;
};

// Dirichlet(concentration) rows over the cells within Chebyshev distance
// |locality_radius| of each cell. Deterministic in |seed|.
Task sample_task(std::uint64_t seed, double concentration, int locality_radius,
                 const RoomGrid& grid, int id = 0);

EnvState reset(const Task& task, const ScenarioConfig& config);

std::vector<Point3> user_positions(const EnvState& state,
                                   const ScenarioConfig& config);

// Per-user positioning and transmission states for a fixed geometry.
struct SlotEvaluation {
  std::vector<std::uint8_t> localized;
  std::vector<std::uint8_t> tx_ok;
};
SlotEvaluation evaluate_slot(std::span<const Point3> users,
                             const JointAction& action,
                             const ScenarioConfig& config);

// Serves with the geometry of |state|, then moves every user one Markov
// transition. Throws when the period is already over.
StepResult step(const EnvState& state, const JointAction& action,
                const Task& task, const ScenarioConfig& config,
                std::uint64_t realization_seed = 0);

// Cell occupancy for slots 0..T-1 of one realization. Mobility does not
// depend on actions, so this matches what step() produces.
std::vector<std::vector<int>> realize_cells(const Task& task,
                                            const ScenarioConfig& config,
                                            std::uint64_t realization_seed);

int period_reliability(const Trajectory& traj);

inline constexpr std::size_t kJointActionCap = 2'000'000;

// Lazily indexed joint action set: every VAP triple (lexicographic) times
// every maximal user/SBS matching. index = triple * matchings + matching.
class JointActionSpace {
 public:
  explicit JointActionSpace(const ScenarioConfig& config);

  std::size_t size() const { return size_; }
  std::size_t matchings() const { return matchings_; }
  JointAction decode(std::size_t index) const;

 private:
  int users_;
  int sbs_;
  std::vector<std::array<int, 3>> triples_;
  std::size_t matchings_ = 0;
  std::size_t size_ = 0;
};

// C(V,3) * max(U,B)! / (max(U,B) - min(U,B))!, saturating on overflow.
std::size_t joint_action_count(int vaps, int users, int sbs);

std::vector<std::array<int, 3>> vap_triples(int vaps);

// Materialized list; throws if the count exceeds |cap|.
std::vector<JointAction> enumerate_joint_actions(const ScenarioConfig& config,
                                                 std::size_t cap = kJointActionCap);

struct OracleResult {
  int best_reward = 0;
  std::vector<std::size_t> best_action_indices;
  std::vector<JointAction> best_actions;
};

// Exhaustive open-loop search over joint action sequences for one fixed
// mobility realization. Refuses when |A|^T exceeds |guard|.
OracleResult brute_force_oracle(const Task& task, const ScenarioConfig& config,
                                std::uint64_t realization_seed,
                                double guard = 1e7);

// Structural checks on a logged trajectory; returns one message per
// violation. With |association_once| every user may appear in the
// association at most once per period.
std::vector<std::string> audit_trajectory(const Trajectory& traj,
                                          const ScenarioConfig& config,
                                          bool association_once);

// Columns: period,slot,user,cell_x,cell_y,height,localized,assigned_sbs,
// tx_ok,newly_served[,lambda]
void write_trajectory_csv(std::ostream& out, std::span<const Trajectory> trajs,
                          const ScenarioConfig& config, bool with_lambda);

}  // namespace thzvr

#endif  // THZVR_ENV_HPP_
