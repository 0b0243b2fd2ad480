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

#ifndef THZVR_META_RL_HPP_
#define THZVR_META_RL_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "thzvr/env.hpp"
#include "thzvr/policy_net.hpp"

namespace thzvr {

enum class MetaOrder { kFirstOrder, kFdSecondOrder };

struct LearningConfig {
  double inner_lr = 0.1;       // alpha
  double meta_lr = 0.01;       // beta
  int inner_trajectories = 50; // K
  int outer_trajectories = 10; // K'
  int iterations = 200;        // E
  int tasks_per_batch = 20;
  bool reward_baseline = false;
  bool reward_to_go = false;
  MetaOrder meta_order = MetaOrder::kFirstOrder;
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kTanh;
  int workers = 1;
  double fd_epsilon = 1e-5;
  std::size_t fd_param_guard = 2000;

  void validate() const;
};

// What a policy's action means. Implementations must be safe to call
// concurrently: rollout() reads only its arguments and immutable members.
class RolloutModel {
 public:
  virtual ~RolloutModel() = default;
  virtual const ScenarioConfig& scenario() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::string name() const = 0;
  // Whether rollouts promise every user at most one association per period.
  virtual bool association_once() const = 0;
  // One T-slot period; every random draw derives from |seed|.
  virtual Trajectory rollout(const PolicyParams& params, const Task& task,
                             std::uint64_t seed) const = 0;
};

// Actions index the full joint (VAP triple, matching) space.
class JointActionModel final : public RolloutModel {
 public:
  explicit JointActionModel(ScenarioConfig scenario);

  const ScenarioConfig& scenario() const override { return scenario_; }
  std::size_t action_count() const override { return space_.size(); }
  std::string name() const override { return "mpg"; }
  bool association_once() const override { return false; }
  Trajectory rollout(const PolicyParams& params, const Task& task,
                     std::uint64_t seed) const override;

 private:
  ScenarioConfig scenario_;
  JointActionSpace space_;
};

std::uint64_t rollout_realization_seed(std::uint64_t rollout_seed);
std::mt19937_64 rollout_action_rng(std::uint64_t rollout_seed);

PolicyParams initial_policy(const RolloutModel& model, const LearningConfig& cfg,
                            std::uint64_t master_seed);

// Rollout k uses seed derive_seed({seed_base, k}); results are in k order
// whatever the worker count.
std::vector<Trajectory> collect_trajectories(const RolloutModel& model,
                                             const Task& task,
                                             const PolicyParams& params, int count,
                                             std::uint64_t seed_base, int workers = 1);

struct GradientOptions {
  bool reward_baseline = false;
  bool reward_to_go = false;
  int workers = 1;  // gradient threads; the sum order does not depend on it
};

// (1/K) sum_k sum_t F(tau_k) grad log pi(a_t | s_{t-1}); with the baseline
// the mean return over the K trajectories is subtracted first.
Eigen::VectorXd task_gradient(std::span<const Trajectory> trajs,
                              const PolicyParams& params,
                              const ScenarioConfig& scenario,
                              const GradientOptions& opts = {});

// theta + alpha * grad (ascent).
PolicyParams inner_update(const PolicyParams& params, const Eigen::VectorXd& grad,
                          double alpha);

struct TaskAdaptation {
  PolicyParams adapted;           // theta~ = theta + alpha grad J(theta) on inner
  std::vector<Trajectory> inner;  // D, collected under theta
  std::vector<Trajectory> outer;  // D', collected under theta~
};

// One outer step on theta, never on the adapted parameters.
PolicyParams meta_update(const PolicyParams& params,
                         std::span<const TaskAdaptation> tasks,
                         const LearningConfig& cfg, const ScenarioConfig& scenario);

// Second-order meta-gradient of one task by central differences of an
// importance-weighted surrogate built on fixed D and D'. Test use only.
Eigen::VectorXd fd_meta_gradient(const PolicyParams& params,
                                 const TaskAdaptation& task,
                                 const LearningConfig& cfg,
                                 const ScenarioConfig& scenario);

struct IterationMetrics {
  int iteration = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::vector<IterationMetrics> metrics;
};

using TrajectoryObserver = std::function<void(const Trajectory&)>;

struct TrainOptions {
  std::uint64_t master_seed = 0;
  const PolicyParams* initial = nullptr;  // default: initial_policy()
  TrajectoryObserver observer;            // sees every collected trajectory
  std::function<void(const IterationMetrics&)> on_iteration;
};

// E iterations of {inner adaptation on K trajectories per task, meta step
// from K' trajectories per task}. Batch i takes tasks_per_batch consecutive
// tasks from the stream, wrapping around. Metrics report D' returns.
TrainResult meta_train(const RolloutModel& model, const LearningConfig& cfg,
                       std::span<const Task> tasks, const TrainOptions& opts);

TrainResult train_mpg(const LearningConfig& cfg, const ScenarioConfig& scenario,
                      std::span<const Task> tasks, const TrainOptions& opts);

struct AdaptResult {
  PolicyParams params;
  std::vector<double> curve;  // mean return before each inner step
};

// Inner updates only, on a single task.
AdaptResult adapt(const RolloutModel& model, const PolicyParams& params,
                  const Task& task, int steps, const LearningConfig& cfg,
                  std::uint64_t seed, const TrajectoryObserver& observer = {});

// Plain policy gradient with no meta step: iteration i runs K rollouts on
// task i mod |tasks| and takes one alpha step.
TrainResult train_baseline_pg(const RolloutModel& model, const LearningConfig& cfg,
                              std::span<const Task> tasks, const TrainOptions& opts);

}  // namespace thzvr

#endif  // THZVR_META_RL_HPP_
