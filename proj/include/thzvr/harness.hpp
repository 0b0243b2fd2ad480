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

#ifndef THZVR_HARNESS_HPP_
#define THZVR_HARNESS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "thzvr/association.hpp"
#include "thzvr/dmpg.hpp"
#include "thzvr/env.hpp"
#include "thzvr/meta_rl.hpp"

namespace thzvr {

enum class Algorithm { kMpg, kDmpg, kBaselinePg };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& s);  // mpg | dmpg | pg | baseline_pg

// Action space used by the plain policy-gradient baseline.
enum class BaselineActions { kJoint, kVap };

struct TaskStreamSpec {
  int count = 20;
  double concentration = 1.0;
  int locality_radius = 1;
};

struct ExperimentSpec {
  ScenarioConfig scenario = ScenarioConfig::defaults();
  LearningConfig learning;
  AssociationOptions association;
  Algorithm algorithm = Algorithm::kDmpg;
  BaselineActions baseline_actions = BaselineActions::kJoint;
  std::uint64_t master_seed = 0;
  std::string output_dir = "runs/default";
  TaskStreamSpec tasks;
  int eval_tasks = 5;
  int eval_periods = 0;  // 0: scenario.num_periods

  void validate() const;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Line-oriented "[section]" / "key = value" text; '#' starts a comment.
// Unknown sections or keys are errors. |overrides| are (NAME, value) pairs
// named THZVR_<SECTION>_<KEY> and win over the text.
ExperimentSpec parse_spec(const std::string& text, const std::string& origin = "<config>",
                          const Overrides& overrides = {});
ExperimentSpec load_spec(const std::string& path, const Overrides& overrides = {});

// THZVR_* variables from the process environment.
Overrides environment_overrides();

// Every key in a fixed order; parse_spec(serialize_spec(s)) reproduces s.
std::string serialize_spec(const ExperimentSpec& spec);

// FNV-1a over the canonical text, ignoring experiment.output_dir.
std::uint64_t config_hash(const ExperimentSpec& spec);

std::vector<Task> make_task_stream(const ExperimentSpec& spec);
// Tasks disjoint from the training stream.
std::vector<Task> make_eval_tasks(const ExperimentSpec& spec);

std::unique_ptr<RolloutModel> make_model(const ExperimentSpec& spec);
std::unique_ptr<RolloutModel> make_model(const ExperimentSpec& spec,
                                         const std::string& checkpoint_algorithm);

struct EvalResult {
  std::vector<Trajectory> trajectories;
  double avg_reliability = 0.0;  // served / (U * periods)
  int periods = 0;
};

// |periods| periods per task. D-MPG periods of one task share a dual context.
EvalResult evaluate_policy(const RolloutModel& model, const PolicyParams& params,
                           std::span<const Task> tasks, int periods, std::uint64_t seed,
                           const TrajectoryObserver& observer = {});

struct RunMetrics {
  std::vector<IterationMetrics> series;
  double avg_reliability = 0.0;
  double total_wall_clock_s = 0.0;
  PolicyParams params;
};

struct RunOptions {
  TrajectoryObserver observer;
  bool write_artifacts = true;
};

// Trains, evaluates on fresh tasks and writes metrics.csv, timing.csv,
// summary.json, policy.ckpt, trajectories.csv and config.cfg.
RunMetrics run(const ExperimentSpec& spec, const RunOptions& opts = {});

}  // namespace thzvr

#endif  // THZVR_HARNESS_HPP_
