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

#include "thzvr/meta_rl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "thzvr/error.hpp"
#include "thzvr/parallel.hpp"
#include "thzvr/seed.hpp"

namespace thzvr {

void LearningConfig::validate() const {
  if (!(inner_lr > 0.0)) throw Error("learning.inner_lr must be positive");
  if (!(meta_lr > 0.0)) throw Error("learning.meta_lr must be positive");
  if (inner_trajectories < 1) throw Error("learning.inner_trajectories must be >= 1");
  if (outer_trajectories < 1) throw Error("learning.outer_trajectories must be >= 1");
  if (iterations < 0) throw Error("learning.iterations must be >= 0");
  if (tasks_per_batch < 1) throw Error("learning.tasks_per_batch must be >= 1");
  if (workers < 1) throw Error("learning.workers must be >= 1");
  for (int h : hidden)
    if (h < 1) throw Error("learning.hidden: layer widths must be >= 1");
  if (!(fd_epsilon > 0.0)) throw Error("learning.fd_epsilon must be positive");
}

std::uint64_t rollout_realization_seed(std::uint64_t rollout_seed) {
  return derive_seed({seed_tag::kRollout, rollout_seed, 1});
}

std::mt19937_64 rollout_action_rng(std::uint64_t rollout_seed) {
  return std::mt19937_64(derive_seed({seed_tag::kRollout, rollout_seed, 2}));
}

JointActionModel::JointActionModel(ScenarioConfig scenario)
    : scenario_(std::move(scenario)), space_(scenario_) {
  if (space_.size() > kJointActionCap)
    throw Error("joint action space has " + std::to_string(space_.size()) +
                " entries (cap " + std::to_string(kJointActionCap) +
                "); use the dmpg algorithm for this many users");
}

Trajectory JointActionModel::rollout(const PolicyParams& params, const Task& task,
                                     std::uint64_t seed) const {
  Trajectory traj;
  traj.task_id = task.id;
  traj.realization_seed = rollout_realization_seed(seed);
  auto rng = rollout_action_rng(seed);
  EnvState state = reset(task, scenario_);
  for (int t = 0; t < scenario_.slots_per_period; ++t) {
    const Eigen::VectorXd probs = forward(params, encode_state(state, scenario_));
    const std::size_t a = sample_action(probs, rng);
    JointAction action = space_.decode(a);
    StepResult r = step(state, action, task, scenario_, traj.realization_seed);
    traj.total_reward += static_cast<int>(r.newly_served.size());
    traj.steps.push_back({std::move(state), a, std::move(action), std::move(r.localized),
                          std::move(r.tx_ok), std::move(r.newly_served), {}});
    state = std::move(r.next);
  }
  traj.final_state = std::move(state);
  return traj;
}

PolicyParams initial_policy(const RolloutModel& model, const LearningConfig& cfg,
                            std::uint64_t master_seed) {
  const int input = 4 * model.scenario().num_users;
  return init_params(
      make_layer_shapes(input, cfg.hidden, static_cast<int>(model.action_count())),
      derive_seed({seed_tag::kInit, master_seed}), cfg.activation);
}

std::vector<Trajectory> collect_trajectories(const RolloutModel& model,
                                             const Task& task,
                                             const PolicyParams& params, int count,
                                             std::uint64_t seed_base, int workers) {
  if (count <= 0) return {};
  if (params.action_count() != model.action_count())
    throw Error("collect_trajectories: policy head does not match the action space");
  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  parallel_for(count, workers, [&](int k) {
    out[k] = model.rollout(params, task, derive_seed({seed_base, static_cast<std::uint64_t>(k)}));
  });
  return out;
}

namespace {

// Per-step score coefficients c_{k,t}.
std::vector<std::vector<double>> score_weights(std::span<const Trajectory> trajs,
                                               const GradientOptions& opts) {
  const std::size_t k = trajs.size();
  std::vector<std::vector<double>> c(k);
  std::size_t horizon = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& steps = trajs[i].steps;
    horizon = std::max(horizon, steps.size());
    c[i].assign(steps.size(), 0.0);
    if (opts.reward_to_go) {
      double g = 0.0;
      for (std::size_t t = steps.size(); t-- > 0;) {
        g += static_cast<double>(steps[t].newly_served.size());
        c[i][t] = g;
      }
    } else {
      std::fill(c[i].begin(), c[i].end(), static_cast<double>(trajs[i].total_reward));
    }
  }
  if (opts.reward_baseline) {
    for (std::size_t t = 0; t < horizon; ++t) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < k; ++i)
        if (t < c[i].size()) sum += c[i][t], ++n;
      const double b = sum / static_cast<double>(n);
      for (std::size_t i = 0; i < k; ++i)
        if (t < c[i].size()) c[i][t] -= b;
    }
  }
  return c;
}

constexpr std::size_t kChunk = 8;
constexpr std::size_t kChunkedParamLimit = std::size_t{1} << 20;

}  // namespace

Eigen::VectorXd task_gradient(std::span<const Trajectory> trajs,
                              const PolicyParams& params,
                              const ScenarioConfig& scenario,
                              const GradientOptions& opts) {
  if (trajs.empty()) throw Error("task_gradient: no trajectories");
  const auto c = score_weights(trajs, opts);
  const Eigen::Index n = static_cast<Eigen::Index>(params.size());

  auto accumulate = [&](std::size_t begin, std::size_t end, Eigen::VectorXd& g) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& steps = trajs[k].steps;
      for (std::size_t t = 0; t < steps.size(); ++t) {
        if (c[k][t] == 0.0) continue;
        accumulate_grad_log_prob(params, encode_state(steps[t].state, scenario),
                                 steps[t].action_index, c[k][t], g);
      }
    }
  };

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  const std::size_t k = trajs.size();
  if (params.size() <= kChunkedParamLimit && k > kChunk) {
    // Fixed chunking keeps the summation order independent of workers.
    const int chunks = static_cast<int>((k + kChunk - 1) / kChunk);
    std::vector<Eigen::VectorXd> partial(chunks);
    parallel_for(chunks, opts.workers, [&](int ci) {
      partial[ci] = Eigen::VectorXd::Zero(n);
      accumulate(ci * kChunk, std::min(k, (ci + 1) * kChunk), partial[ci]);
    });
    for (const auto& p : partial) grad += p;
  } else {
    accumulate(0, k, grad);
  }
  grad /= static_cast<double>(k);
  return grad;
}

PolicyParams inner_update(const PolicyParams& params, const Eigen::VectorXd& grad,
                          double alpha) {
  if (grad.size() != params.flat.size()) throw Error("inner_update: shape mismatch");
  PolicyParams out = params;
  out.flat += alpha * grad;
  return out;
}

namespace {

double trajectory_log_prob(const PolicyParams& params, const Trajectory& traj,
                           const ScenarioConfig& scenario) {
  double lp = 0.0;
  for (const StepRecord& s : traj.steps)
    lp += log_prob(params, encode_state(s.state, scenario), s.action_index);
  return lp;
}

// Importance-weighted inner gradient at |theta| for trajectories drawn
// under the parameters whose log-probs are |base_lp|.
Eigen::VectorXd weighted_inner_gradient(const PolicyParams& theta,
                                        std::span<const Trajectory> trajs,
                                        const std::vector<double>& base_lp,
                                        const std::vector<std::vector<double>>& c,
                                        const ScenarioConfig& scenario) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.flat.size());
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const double w = std::exp(trajectory_log_prob(theta, trajs[k], scenario) - base_lp[k]);
    for (std::size_t t = 0; t < trajs[k].steps.size(); ++t) {
      const StepRecord& s = trajs[k].steps[t];
      accumulate_grad_log_prob(theta, encode_state(s.state, scenario), s.action_index,
                               c[k][t] * w, g);
    }
  }
  return g / static_cast<double>(trajs.size());
}

}  // namespace

Eigen::VectorXd fd_meta_gradient(const PolicyParams& params,
                                 const TaskAdaptation& task,
                                 const LearningConfig& cfg,
                                 const ScenarioConfig& scenario) {
  if (params.size() > cfg.fd_param_guard)
    throw Error("fd_second_order: " + std::to_string(params.size()) +
                " parameters exceed the guard of " + std::to_string(cfg.fd_param_guard));
  if (cfg.reward_to_go) throw Error("fd_second_order requires whole-trajectory returns");
  const GradientOptions opts{cfg.reward_baseline, false, 1};
  const auto c_in = score_weights(task.inner, opts);
  const auto c_out = score_weights(task.outer, opts);
  std::vector<double> lp_in, lp_out;
  for (const auto& tr : task.inner) lp_in.push_back(trajectory_log_prob(params, tr, scenario));
  for (const auto& tr : task.outer)
    lp_out.push_back(trajectory_log_prob(task.adapted, tr, scenario));

  auto objective = [&](const PolicyParams& theta) {
    const PolicyParams adapted = inner_update(
        theta, weighted_inner_gradient(theta, task.inner, lp_in, c_in, scenario),
        cfg.inner_lr);
    double j = 0.0;
    for (std::size_t k = 0; k < task.outer.size(); ++k) {
      const double w =
          std::exp(trajectory_log_prob(adapted, task.outer[k], scenario) - lp_out[k]);
      j += c_out[k].empty() ? 0.0 : c_out[k][0] * w;
    }
    return j / static_cast<double>(task.outer.size());
  };

  Eigen::VectorXd g(params.flat.size());
  PolicyParams probe = params;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double x = params.flat[i];
    probe.flat[i] = x + cfg.fd_epsilon;
    const double up = objective(probe);
    probe.flat[i] = x - cfg.fd_epsilon;
    const double down = objective(probe);
    probe.flat[i] = x;
    g[i] = (up - down) / (2.0 * cfg.fd_epsilon);
  }
  return g;
}

PolicyParams meta_update(const PolicyParams& params,
                         std::span<const TaskAdaptation> tasks,
                         const LearningConfig& cfg, const ScenarioConfig& scenario) {
  if (tasks.empty()) return params;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.flat.size());
  const GradientOptions opts{cfg.reward_baseline, cfg.reward_to_go, cfg.workers};
  for (const TaskAdaptation& t : tasks) {
    if (cfg.meta_order == MetaOrder::kFirstOrder)
      acc += task_gradient(t.outer, t.adapted, scenario, opts);
    else
      acc += fd_meta_gradient(params, t, cfg, scenario);
  }
  PolicyParams out = params;
  out.flat += (cfg.meta_lr / static_cast<double>(tasks.size())) * acc;
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

void observe(const TrajectoryObserver& obs, const std::vector<Trajectory>& trajs,
             std::vector<double>* rewards) {
  for (const auto& t : trajs) {
    if (obs) obs(t);
    if (rewards) rewards->push_back(t.total_reward);
  }
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

TrainResult meta_train(const RolloutModel& model, const LearningConfig& cfg,
                       std::span<const Task> tasks, const TrainOptions& opts) {
  cfg.validate();
  if (tasks.empty() && cfg.iterations > 0) throw Error("meta_train: empty task stream");
  TrainResult result;
  result.params = opts.initial ? *opts.initial : initial_policy(model, cfg, opts.master_seed);
  const ScenarioConfig& scenario = model.scenario();
  const GradientOptions gopts{cfg.reward_baseline, cfg.reward_to_go, cfg.workers};
  const std::size_t batch = std::min<std::size_t>(cfg.tasks_per_batch, tasks.size());
  const auto start = Clock::now();

  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<double> rewards;
    std::vector<TaskAdaptation> kept;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(result.params.flat.size());
    for (std::size_t b = 0; b < batch; ++b) {
      const Task& task = tasks[(static_cast<std::size_t>(it) * batch + b) % tasks.size()];
      const auto id = static_cast<std::uint64_t>(task.id);
      const auto key = static_cast<std::uint64_t>(it);
      TaskAdaptation ad;
      ad.inner = collect_trajectories(
          model, task, result.params, cfg.inner_trajectories,
          derive_seed({opts.master_seed, seed_tag::kInner, key, id}), cfg.workers);
      observe(opts.observer, ad.inner, nullptr);
      ad.adapted = inner_update(result.params,
                                task_gradient(ad.inner, result.params, scenario, gopts),
                                cfg.inner_lr);
      ad.outer = collect_trajectories(
          model, task, ad.adapted, cfg.outer_trajectories,
          derive_seed({opts.master_seed, seed_tag::kOuter, key, id}), cfg.workers);
      observe(opts.observer, ad.outer, &rewards);
      if (cfg.meta_order == MetaOrder::kFirstOrder) {
        // Streamed so that large heads never hold more than one adapted copy.
        acc += task_gradient(ad.outer, ad.adapted, scenario, gopts);
      } else {
        kept.push_back(std::move(ad));
      }
    }
    if (cfg.meta_order == MetaOrder::kFirstOrder) {
      result.params.flat += (cfg.meta_lr / static_cast<double>(batch)) * acc;
    } else {
      result.params = meta_update(result.params, kept, cfg, scenario);
    }
    const auto [m, s] = mean_std(rewards);
    result.metrics.push_back({it, m, s, seconds_since(start)});
    if (opts.on_iteration) opts.on_iteration(result.metrics.back());
  }
  return result;
}

TrainResult train_mpg(const LearningConfig& cfg, const ScenarioConfig& scenario,
                      std::span<const Task> tasks, const TrainOptions& opts) {
  const JointActionModel model(scenario);
  return meta_train(model, cfg, tasks, opts);
}

AdaptResult adapt(const RolloutModel& model, const PolicyParams& params,
                  const Task& task, int steps, const LearningConfig& cfg,
                  std::uint64_t seed, const TrajectoryObserver& observer) {
  AdaptResult out;
  out.params = params;
  const GradientOptions gopts{cfg.reward_baseline, cfg.reward_to_go, cfg.workers};
  for (int s = 0; s < steps; ++s) {
    const auto trajs = collect_trajectories(
        model, task, out.params, cfg.inner_trajectories,
        derive_seed({seed, seed_tag::kAdapt, static_cast<std::uint64_t>(s)}), cfg.workers);
    std::vector<double> rewards;
    observe(observer, trajs, &rewards);
    out.curve.push_back(mean_std(rewards).first);
    out.params = inner_update(out.params,
                              task_gradient(trajs, out.params, model.scenario(), gopts),
                              cfg.inner_lr);
  }
  return out;
}

TrainResult train_baseline_pg(const RolloutModel& model, const LearningConfig& cfg,
                              std::span<const Task> tasks, const TrainOptions& opts) {
  cfg.validate();
  if (tasks.empty() && cfg.iterations > 0) throw Error("train_baseline_pg: empty task stream");
  TrainResult result;
  result.params = opts.initial ? *opts.initial : initial_policy(model, cfg, opts.master_seed);
  const GradientOptions gopts{cfg.reward_baseline, cfg.reward_to_go, cfg.workers};
  const auto start = Clock::now();
  for (int it = 0; it < cfg.iterations; ++it) {
    const Task& task = tasks[static_cast<std::size_t>(it) % tasks.size()];
    const auto trajs = collect_trajectories(
        model, task, result.params, cfg.inner_trajectories,
        derive_seed({opts.master_seed, seed_tag::kInner, static_cast<std::uint64_t>(it),
                     static_cast<std::uint64_t>(task.id)}),
        cfg.workers);
    std::vector<double> rewards;
    observe(opts.observer, trajs, &rewards);
    result.params = inner_update(
        result.params, task_gradient(trajs, result.params, model.scenario(), gopts),
        cfg.inner_lr);
    const auto [m, s] = mean_std(rewards);
    result.metrics.push_back({it, m, s, seconds_since(start)});
    if (opts.on_iteration) opts.on_iteration(result.metrics.back());
  }
  return result;
}

}  // namespace thzvr
